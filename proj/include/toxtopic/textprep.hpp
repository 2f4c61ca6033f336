#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "toxtopic/corpus.hpp"
#include "toxtopic/error.hpp"
#include "toxtopic/io.hpp"

namespace toxtopic {

using TokenSequence = std::vector<std::string>;
using StopWordSet = std::unordered_set<std::string>;
using TermId = std::uint32_t;

inline constexpr std::string_view kBuiltinStopwordsName = "builtin:english-minimal";

// Must stay identical to resources/stopwords_english_minimal.txt.
// "was" and "has" are intentionally absent: their lemmas "wa" and "ha" are
// expected topic words.
inline constexpr std::string_view kEnglishMinimalStopwords[] = {
    "a",       "about",   "above",  "after",   "again",   "all",     "am",     "an",
    "and",     "any",     "are",    "as",      "at",      "be",      "because", "been",
    "before",  "being",   "below",  "between", "both",    "but",     "by",     "can",
    "did",     "do",      "does",   "doing",   "don",     "down",    "during", "each",
    "few",     "for",     "from",   "further", "had",     "have",    "having", "he",
    "her",     "here",    "hers",   "herself", "him",     "himself", "his",    "how",
    "i",       "if",      "in",     "into",    "is",      "it",      "its",    "itself",
    "just",    "me",      "more",   "most",    "my",      "myself",  "no",     "nor",
    "not",     "now",     "of",     "off",     "on",      "once",    "only",   "or",
    "other",   "our",     "ours",   "ourselves", "out",   "over",    "own",    "s",
    "same",    "she",     "should", "so",      "some",    "such",    "t",      "than",
    "that",    "the",     "their",  "theirs",  "them",    "themselves", "then", "there",
    "these",   "they",    "this",   "those",   "through", "to",      "too",    "under",
    "until",   "up",      "very",   "we",      "were",    "what",    "when",   "where",
    "which",   "while",   "who",    "whom",    "why",     "will",    "with",   "you",
    "your",    "yours",   "yourself", "yourselves",
};

inline StopWordSet builtin_stopwords() {
    StopWordSet out;
    for (auto w : kEnglishMinimalStopwords) out.emplace(w);
    return out;
}

namespace detail {

inline icu::UnicodeString nfc_lower(std::string_view text) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) throw Error("ICU NFC normalizer unavailable");
    icu::UnicodeString s = icu::UnicodeString::fromUTF8(
        icu::StringPiece(text.data(), static_cast<std::int32_t>(text.size())));
    s = nfc->normalize(s, status);
    s.toLower(icu::Locale::getRoot());
    // Lowercasing can produce decomposed sequences; renormalize.
    s = nfc->normalize(s, status);
    if (U_FAILURE(status)) throw Error("ICU normalization failed");
    return s;
}

inline bool in_token_alphabet(UChar32 c) {
    return c == U'\'' || c == U'*' || u_isUAlphabetic(c) || u_isdigit(c);
}

inline void strip_apostrophes(std::string& tok) {
    const auto b = tok.find_first_not_of('\'');
    if (b == std::string::npos) {
        tok.clear();
        return;
    }
    const auto e = tok.find_last_not_of('\'');
    tok = tok.substr(b, e - b + 1);
}

}  // namespace detail

// Steps 1 and 2 of the pipeline: normalize, lowercase, split on the token
// alphabet and trim apostrophes.
inline TokenSequence tokenize(std::string_view text) {
    const icu::UnicodeString s = detail::nfc_lower(text);
    TokenSequence out;
    icu::UnicodeString current;
    auto flush = [&] {
        if (current.isEmpty()) return;
        std::string tok;
        current.toUTF8String(tok);
        current.remove();
        detail::strip_apostrophes(tok);
        if (!tok.empty()) out.push_back(std::move(tok));
    };
    for (std::int32_t i = 0; i < s.length(); i = s.moveIndex32(i, 1)) {
        const UChar32 c = s.char32At(i);
        if (detail::in_token_alphabet(c))
            current.append(c);
        else
            flush();
    }
    flush();
    return out;
}

inline const std::unordered_map<std::string_view, std::string_view>& lemma_exceptions() {
    // "men" is deliberately not mapped.
    static const std::unordered_map<std::string_view, std::string_view> table = {
        {"women", "woman"}, {"children", "child"}, {"feet", "foot"},
        {"teeth", "tooth"}, {"mice", "mouse"},     {"geese", "goose"},
        {"lice", "louse"},  {"oxen", "ox"},        {"wolves", "wolf"},
        {"knives", "knife"}, {"wives", "wife"},    {"lives", "life"},
    };
    return table;
}

/// Exception table first, then suffix rules: "ies" -> "y", "sses" -> "ss",
/// and a trailing "s" is dropped unless the token ends in "ss" or "us" or
/// has length <= 2.
inline std::string lemmatize(std::string_view token) {
    const auto& exceptions = lemma_exceptions();
    if (auto it = exceptions.find(token); it != exceptions.end()) return std::string(it->second);
    std::string t(token);
    if (t.ends_with("ies")) {
        t.replace(t.size() - 3, 3, "y");
    } else if (t.ends_with("sses")) {
        t.erase(t.size() - 2);
    } else if (t.size() > 2 && t.ends_with('s') && !t.ends_with("ss") && !t.ends_with("us")) {
        t.pop_back();
    }
    return t;
}

/// Full pipeline: tokenize, drop stop words, lemmatize. Lemmas that land on
/// a stop word (or lose all characters to apostrophe trimming) are dropped
/// too, so no output token is ever a stop word.
inline TokenSequence preprocess_text(std::string_view text, const StopWordSet& stopwords) {
    TokenSequence out;
    for (auto& tok : tokenize(text)) {
        if (stopwords.contains(tok)) continue;
        std::string lemma = lemmatize(tok);
        detail::strip_apostrophes(lemma);
        if (lemma.empty() || stopwords.contains(lemma)) continue;
        out.push_back(std::move(lemma));
    }
    return out;
}

/// Stop-word resource: one token per line, '#' starts a comment. Entries are
/// normalized the same way as text so lookups match.
inline StopWordSet parse_stopwords(std::string_view content) {
    if (const auto bad = io::find_invalid_utf8(content); bad != std::string_view::npos)
        throw EncodingError("stop-word list: invalid UTF-8 at byte offset " + std::to_string(bad));
    StopWordSet out;
    std::size_t pos = 0;
    while (pos <= content.size()) {
        auto eol = content.find('\n', pos);
        if (eol == std::string_view::npos) eol = content.size();
        std::string_view line = content.substr(pos, eol - pos);
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (!line.empty()) {
            std::string word;
            detail::nfc_lower(line).toUTF8String(word);
            out.insert(std::move(word));
        }
        pos = eol + 1;
    }
    return out;
}

/// Either the builtin list name or a file path.
inline StopWordSet load_stopwords(std::string_view source,
                                  const std::filesystem::path& base_dir = {}) {
    if (source == kBuiltinStopwordsName) return builtin_stopwords();
    if (source.starts_with("builtin:"))
        throw ValidationError("unknown builtin stop-word list: " + std::string(source));
    std::filesystem::path p(source);
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    return parse_stopwords(io::read_file(p));
}

class Vocabulary {
public:
    Vocabulary() = default;

    // Terms must already be ordered by (frequency desc, term asc).
    Vocabulary(std::vector<std::string> terms, std::vector<std::uint64_t> freqs,
               std::uint64_t min_count)
        : terms_(std::move(terms)), freqs_(std::move(freqs)), min_count_(min_count) {
        index_.reserve(terms_.size());
        for (std::size_t i = 0; i < terms_.size(); ++i)
            index_.emplace(terms_[i], static_cast<TermId>(i));
    }

    std::size_t size() const noexcept { return terms_.size(); }
    bool empty() const noexcept { return terms_.empty(); }
    const std::vector<std::string>& terms() const noexcept { return terms_; }
    const std::string& term(TermId id) const { return terms_.at(id); }
    std::uint64_t frequency(TermId id) const { return freqs_.at(id); }
    std::uint64_t min_count() const noexcept { return min_count_; }

    std::optional<TermId> id_of(const std::string& term) const {
        if (auto it = index_.find(term); it != index_.end()) return it->second;
        return std::nullopt;
    }

private:
    std::vector<std::string> terms_;
    std::vector<std::uint64_t> freqs_;
    std::unordered_map<std::string, TermId> index_;
    std::uint64_t min_count_ = 1;
};

inline Vocabulary build_vocab(const std::vector<TokenSequence>& docs, std::uint64_t min_count) {
    if (min_count < 1) throw ValidationError("min_count must be >= 1");
    std::unordered_map<std::string, std::uint64_t> counts;
    for (const auto& doc : docs)
        for (const auto& tok : doc) ++counts[tok];

    std::vector<std::pair<std::string, std::uint64_t>> kept;
    for (auto& [term, n] : counts)
        if (n >= min_count) kept.emplace_back(term, n);
    if (kept.empty())
        throw ValidationError("vocabulary is empty at min_count " + std::to_string(min_count));
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });

    std::vector<std::string> terms;
    std::vector<std::uint64_t> freqs;
    terms.reserve(kept.size());
    freqs.reserve(kept.size());
    for (auto& [term, n] : kept) {
        terms.push_back(std::move(term));
        freqs.push_back(n);
    }
    return Vocabulary(std::move(terms), std::move(freqs), min_count);
}

struct BowDocument {
    InstanceId instance_id = 0;
    std::vector<TermId> token_ids;

    bool empty() const noexcept { return token_ids.empty(); }
    bool operator==(const BowDocument&) const = default;
};

inline BowDocument to_bow(const TokenSequence& doc, const Vocabulary& vocab, InstanceId id = 0) {
    if (vocab.empty()) throw ValidationError("to_bow: empty vocabulary");
    BowDocument out{id, {}};
    for (const auto& tok : doc)
        if (auto tid = vocab.id_of(tok)) out.token_ids.push_back(*tid);
    return out;
}

}  // namespace toxtopic

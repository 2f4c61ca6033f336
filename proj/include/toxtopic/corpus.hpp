#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "toxtopic/csv.hpp"
#include "toxtopic/error.hpp"
#include "toxtopic/io.hpp"
#include "toxtopic/rng.hpp"

namespace toxtopic {

using ClassIndex = std::size_t;
using InstanceId = std::uint64_t;

class LabelSchema {
public:
    LabelSchema() : LabelSchema(std::vector<std::string>{"non-toxic", "maybe", "toxic"}) {}

    explicit LabelSchema(std::vector<std::string> names) : names_(std::move(names)) {
        if (names_.size() < 2) throw ValidationError("label schema needs at least 2 classes");
        std::set<std::string_view> seen;
        for (const auto& n : names_) {
            if (n.empty()) throw ValidationError("label schema contains an empty label");
            if (!seen.insert(n).second) throw ValidationError("duplicate label in schema: " + n);
        }
    }

    std::size_t size() const noexcept { return names_.size(); }
    const std::vector<std::string>& names() const noexcept { return names_; }
    const std::string& name(ClassIndex c) const { return names_.at(c); }

    std::optional<ClassIndex> index_of(std::string_view token) const {
        for (std::size_t i = 0; i < names_.size(); ++i)
            if (names_[i] == token) return i;
        return std::nullopt;
    }

    bool operator==(const LabelSchema&) const = default;

private:
    std::vector<std::string> names_;
};

struct AnnotationRecord {
    InstanceId instance_id = 0;
    std::string text;
    std::string annotator_id;
    std::string gender;
    std::string ethnicity;
    ClassIndex label = 0;

    bool operator==(const AnnotationRecord&) const = default;
};

struct Instance {
    InstanceId instance_id = 0;
    std::string text;
    ClassIndex gold_label = 0;
    std::vector<AnnotationRecord> annotations;

    bool operator==(const Instance&) const = default;
};

struct DatasetSplit {
    std::vector<Instance> train;
    std::vector<Instance> test;
    std::uint64_t split_seed = 0;
    double test_ratio = 0.0;

    bool operator==(const DatasetSplit&) const = default;
};

inline constexpr std::string_view kDatasetHeader[] = {
    "instance_id", "text", "annotator_id", "gender", "ethnicity", "label"};

namespace detail {

inline std::string_view trim(std::string_view s) {
    constexpr std::string_view ws = " \t\r\n\f\v";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline std::optional<std::uint64_t> parse_u64(std::string_view s) {
    if (s.empty() || s.size() > 20) return std::nullopt;
    std::uint64_t v = 0;
    for (char c : s) {
        if (c < '0' || c > '9') return std::nullopt;
        const std::uint64_t d = static_cast<std::uint64_t>(c - '0');
        if (v > (UINT64_MAX - d) / 10) return std::nullopt;
        v = v * 10 + d;
    }
    return v;
}

inline void check_header(const csv::Record& header, std::span<const std::string_view> expected,
                         std::string_view what) {
    bool ok = header.fields.size() == expected.size();
    for (std::size_t i = 0; ok && i < expected.size(); ++i) ok = header.fields[i] == expected[i];
    if (!ok) {
        std::string want, got;
        for (auto e : expected) want += (want.empty() ? "" : ",") + std::string(e);
        for (const auto& g : header.fields) got += (got.empty() ? "" : ",") + g;
        throw SchemaError(std::string(what) + " header mismatch: expected '" + want + "', got '" +
                          got + "'");
    }
}

inline std::vector<csv::Record> parse_utf8_csv(std::string_view content, std::string_view what) {
    if (const auto bad = io::find_invalid_utf8(content); bad != std::string_view::npos)
        throw EncodingError(std::string(what) + ": invalid UTF-8 at byte offset " +
                            std::to_string(bad));
    if (content.starts_with("\xEF\xBB\xBF")) content.remove_prefix(3);
    auto records = csv::parse(content);
    if (records.empty()) throw SchemaError(std::string(what) + ": missing header row");
    return records;
}

}  // namespace detail

/// Parses dataset CSV text. Rows are numbered from 1 at the first data row
/// in error messages.
inline std::vector<AnnotationRecord> parse_dataset(std::string_view content,
                                                   const LabelSchema& schema) {
    const auto records = detail::parse_utf8_csv(content, "dataset");
    detail::check_header(records.front(), kDatasetHeader, "dataset");

    std::vector<AnnotationRecord> out;
    out.reserve(records.size() - 1);
    std::map<InstanceId, std::string> text_of;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& f = records[r].fields;
        const std::string where = "dataset row " + std::to_string(r) + " (line " +
                                  std::to_string(records[r].line) + ")";
        if (f.size() != std::size(kDatasetHeader)) {
            throw SchemaError(where + ": expected " + std::to_string(std::size(kDatasetHeader)) +
                              " fields, got " + std::to_string(f.size()));
        }
        AnnotationRecord rec;
        const auto id = detail::parse_u64(f[0]);
        if (!id) throw ValidationError(where + ": bad instance_id '" + f[0] + "'");
        rec.instance_id = *id;
        if (detail::trim(f[1]).empty()) throw ValidationError(where + ": empty text");
        rec.text = f[1];
        rec.annotator_id = f[2];
        rec.gender = f[3];
        rec.ethnicity = f[4];
        const auto label = schema.index_of(f[5]);
        if (!label) throw ValidationError(where + ": unknown label token '" + f[5] + "'");
        rec.label = *label;

        const auto [it, inserted] = text_of.emplace(rec.instance_id, rec.text);
        if (!inserted && it->second != rec.text) {
            throw ValidationError(where + ": instance_id " + std::to_string(rec.instance_id) +
                                  " has conflicting text across annotations");
        }
        out.push_back(std::move(rec));
    }
    return out;
}

inline std::vector<AnnotationRecord> load_dataset(const std::filesystem::path& path,
                                                  const LabelSchema& schema) {
    return parse_dataset(io::read_file(path), schema);
}

// Modal label with lowest-index tie-break.
inline ClassIndex majority_label(std::span<const ClassIndex> labels) {
    std::vector<std::size_t> hist;
    for (auto l : labels) {
        if (l >= hist.size()) hist.resize(l + 1, 0);
        ++hist[l];
    }
    return static_cast<ClassIndex>(std::max_element(hist.begin(), hist.end()) - hist.begin());
}

/// One Instance per distinct instance_id, ascending by id. Annotations keep
/// their input order.
inline std::vector<Instance> derive_gold_labels(const std::vector<AnnotationRecord>& records) {
    if (records.empty()) throw ValidationError("derive_gold_labels: no annotation records");
    std::map<InstanceId, Instance> by_id;
    for (const auto& rec : records) {
        auto& inst = by_id[rec.instance_id];
        if (inst.annotations.empty()) {
            inst.instance_id = rec.instance_id;
            inst.text = rec.text;
        }
        inst.annotations.push_back(rec);
    }
    std::vector<Instance> out;
    out.reserve(by_id.size());
    for (auto& [id, inst] : by_id) {
        std::vector<ClassIndex> labels;
        labels.reserve(inst.annotations.size());
        for (const auto& a : inst.annotations) labels.push_back(a.label);
        inst.gold_label = majority_label(labels);
        out.push_back(std::move(inst));
    }
    return out;
}

// Per-class test quotas. The total is round(ratio * N); each class gets
// floor(ratio * n_c) and the remainder goes to the largest fractional parts,
// lowest class index first on ties.
inline std::vector<std::size_t> stratified_test_quotas(std::span<const std::size_t> class_sizes,
                                                       double test_ratio) {
    std::size_t n = 0;
    for (auto s : class_sizes) n += s;
    const auto total = static_cast<std::size_t>(std::llround(test_ratio * static_cast<double>(n)));

    std::vector<std::size_t> quota(class_sizes.size(), 0);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < class_sizes.size(); ++c) {
        if (class_sizes[c] == 0) continue;
        const double exact = test_ratio * static_cast<double>(class_sizes[c]);
        quota[c] = static_cast<std::size_t>(std::floor(exact));
        assigned += quota[c];
        remainders.emplace_back(exact - std::floor(exact), c);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (const auto& [frac, c] : remainders) {
        if (assigned >= total || frac <= 0.0) break;
        ++quota[c];
        ++assigned;
    }
    return quota;
}

/// Stratified by gold label, deterministic in seed. Within each class the
/// members are ordered by instance_id and shuffled; the first quota go to
/// test. Both halves come back sorted by instance_id.
inline DatasetSplit split_train_test(const std::vector<Instance>& instances, double test_ratio,
                                     std::uint64_t seed) {
    if (!(test_ratio > 0.0 && test_ratio < 1.0))
        throw ValidationError("test_ratio must lie in (0, 1), got " + std::to_string(test_ratio));

    std::vector<std::vector<const Instance*>> by_class;
    for (const auto& inst : instances) {
        if (inst.gold_label >= by_class.size()) by_class.resize(inst.gold_label + 1);
        by_class[inst.gold_label].push_back(&inst);
    }
    std::vector<std::size_t> sizes;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        if (by_class[c].size() == 1) {
            throw ValidationError("stratification error: class " + std::to_string(c) +
                                  " has only 1 instance (need at least 2)");
        }
        sizes.push_back(by_class[c].size());
    }
    const auto quota = stratified_test_quotas(sizes, test_ratio);

    DatasetSplit split;
    split.split_seed = seed;
    split.test_ratio = test_ratio;
    Rng rng(seed);
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& members = by_class[c];
        std::sort(members.begin(), members.end(),
                  [](const Instance* a, const Instance* b) { return a->instance_id < b->instance_id; });
        rng.shuffle(std::span(members));
        for (std::size_t i = 0; i < members.size(); ++i)
            (i < quota[c] ? split.test : split.train).push_back(*members[i]);
    }
    auto by_id = [](const Instance& a, const Instance& b) { return a.instance_id < b.instance_id; };
    std::sort(split.train.begin(), split.train.end(), by_id);
    std::sort(split.test.begin(), split.test.end(), by_id);
    return split;
}

}  // namespace toxtopic

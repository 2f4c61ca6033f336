#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "toxtopic/error.hpp"
#include "toxtopic/rng.hpp"
#include "toxtopic/textprep.hpp"

namespace toxtopic {

using TopicId = std::size_t;

struct LdaConfig {
    std::size_t k = 3;
    double alpha = 0.1;
    double beta = 0.01;
    std::size_t iterations = 1000;
    std::size_t inference_iterations = 100;
    std::uint64_t seed = 42;

    void validate() const {
        if (k < 1) throw ValidationError("lda.k must be >= 1");
        if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ValidationError("lda.alpha must be > 0");
        if (!(beta > 0.0) || !std::isfinite(beta)) throw ValidationError("lda.beta must be > 0");
        if (iterations < 1) throw ValidationError("lda.iterations must be >= 1");
    }
};

struct TopicDistribution {
    std::vector<double> theta;
};

// Snapshot handed to a sweep observer after every Gibbs sweep.
struct SweepStats {
    std::size_t sweep = 0;  // 0 = right after random initialization
    std::span<const std::uint64_t> topic_totals;
    std::uint64_t total_tokens = 0;
    std::optional<double> log_likelihood;  // set on checkpoint sweeps
};

struct LdaFitOptions {
    std::function<void(const SweepStats&)> on_sweep;
    std::size_t likelihood_every = 50;
};

class LdaModel {
public:
    const LdaConfig& config() const noexcept { return config_; }
    std::size_t num_topics() const noexcept { return config_.k; }
    std::size_t vocab_size() const noexcept { return terms_.size(); }
    std::size_t num_docs() const noexcept { return assignments_.size(); }
    const std::vector<std::string>& terms() const noexcept { return terms_; }

    double phi(TopicId t, TermId w) const { return phi_[t * vocab_size() + w]; }
    std::span<const double> phi_row(TopicId t) const {
        return std::span(phi_).subspan(t * vocab_size(), vocab_size());
    }
    std::uint64_t topic_word_count(TopicId t, TermId w) const { return nkw_[t * vocab_size() + w]; }
    const std::vector<std::uint64_t>& topic_totals() const noexcept { return nk_; }
    const std::vector<TopicDistribution>& doc_theta() const noexcept { return doc_theta_; }
    const std::vector<std::vector<TopicId>>& assignments() const noexcept { return assignments_; }

    // (sweep, collapsed joint log-likelihood) at each checkpoint.
    const std::vector<std::pair<std::size_t, double>>& likelihood_trace() const noexcept {
        return trace_;
    }

private:
    friend LdaModel fit_lda(const std::vector<BowDocument>&, const Vocabulary&, const LdaConfig&,
                            const LdaFitOptions&);

    LdaConfig config_;
    std::vector<std::string> terms_;
    std::vector<double> phi_;            // k x V
    std::vector<std::uint64_t> nkw_;     // k x V
    std::vector<std::uint64_t> nk_;      // k
    std::vector<TopicDistribution> doc_theta_;
    std::vector<std::vector<TopicId>> assignments_;
    std::vector<std::pair<std::size_t, double>> trace_;
};

namespace detail {

// Draws an index with probability proportional to weights (all >= 0, sum > 0).
inline std::size_t sample_discrete(std::span<const double> cumulative, Rng& rng) {
    const double u = rng.uniform() * cumulative.back();
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    return std::min(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
}

inline double collapsed_log_likelihood(std::span<const std::uint64_t> nkw,
                                       std::span<const std::uint64_t> nk,
                                       std::span<const std::uint64_t> ndk,
                                       std::span<const std::uint64_t> nd, std::size_t k,
                                       std::size_t vocab, double alpha, double beta) {
    const double v = static_cast<double>(vocab);
    const double kd = static_cast<double>(k);
    double ll = kd * (std::lgamma(v * beta) - v * std::lgamma(beta));
    for (std::size_t t = 0; t < k; ++t) {
        for (std::size_t w = 0; w < vocab; ++w)
            ll += std::lgamma(static_cast<double>(nkw[t * vocab + w]) + beta);
        ll -= std::lgamma(static_cast<double>(nk[t]) + v * beta);
    }
    const double per_doc = std::lgamma(kd * alpha) - kd * std::lgamma(alpha);
    for (std::size_t d = 0; d < nd.size(); ++d) {
        ll += per_doc;
        for (std::size_t t = 0; t < k; ++t)
            ll += std::lgamma(static_cast<double>(ndk[d * k + t]) + alpha);
        ll -= std::lgamma(static_cast<double>(nd[d]) + kd * alpha);
    }
    return ll;
}

}  // namespace detail

/// Collapsed Gibbs sampling. Token topics start uniform at random from the
/// seeded generator; each sweep visits documents and tokens in order and
/// resamples z from (n_dk + alpha)(n_kw + beta) / (n_k + V beta) with the
/// token's own count removed. phi and theta come from the final counts.
inline LdaModel fit_lda(const std::vector<BowDocument>& docs, const Vocabulary& vocab,
                        const LdaConfig& config, const LdaFitOptions& options = {}) {
    config.validate();
    const std::size_t k = config.k;
    const std::size_t V = vocab.size();
    if (V < 1) throw ValidationError("fit_lda: empty vocabulary");

    std::uint64_t total = 0;
    for (const auto& doc : docs) {
        for (auto w : doc.token_ids)
            if (w >= V) throw ValidationError("fit_lda: token id out of vocabulary range");
        total += doc.token_ids.size();
    }
    if (total == 0) throw ValidationError("fit_lda: all documents are empty");

    LdaModel m;
    m.config_ = config;
    m.terms_ = vocab.terms();
    m.nkw_.assign(k * V, 0);
    m.nk_.assign(k, 0);
    m.assignments_.resize(docs.size());
    std::vector<std::uint64_t> ndk(docs.size() * k, 0);
    std::vector<std::uint64_t> nd(docs.size(), 0);

    Rng rng(config.seed);
    for (std::size_t d = 0; d < docs.size(); ++d) {
        auto& z = m.assignments_[d];
        z.resize(docs[d].token_ids.size());
        nd[d] = z.size();
        for (std::size_t i = 0; i < z.size(); ++i) {
            z[i] = static_cast<TopicId>(rng.below(k));
            ++ndk[d * k + z[i]];
            ++m.nkw_[z[i] * V + docs[d].token_ids[i]];
            ++m.nk_[z[i]];
        }
    }

    auto checkpoint = [&](std::size_t sweep) {
        const bool want_ll = options.likelihood_every > 0 && sweep % options.likelihood_every == 0;
        std::optional<double> ll;
        if (want_ll) {
            ll = detail::collapsed_log_likelihood(m.nkw_, m.nk_, ndk, nd, k, V, config.alpha,
                                                  config.beta);
            m.trace_.emplace_back(sweep, *ll);
        }
        assert(std::accumulate(m.nk_.begin(), m.nk_.end(), std::uint64_t{0}) == total);
        if (options.on_sweep) options.on_sweep(SweepStats{sweep, m.nk_, total, ll});
    };
    checkpoint(0);

    const double vbeta = static_cast<double>(V) * config.beta;
    std::vector<double> cumulative(k);
    for (std::size_t sweep = 1; sweep <= config.iterations; ++sweep) {
        for (std::size_t d = 0; d < docs.size(); ++d) {
            auto& z = m.assignments_[d];
            const auto& words = docs[d].token_ids;
            std::uint64_t* doc_counts = &ndk[d * k];
            for (std::size_t i = 0; i < words.size(); ++i) {
                const TermId w = words[i];
                const TopicId old = z[i];
                --doc_counts[old];
                --m.nkw_[old * V + w];
                --m.nk_[old];

                double acc = 0.0;
                for (std::size_t t = 0; t < k; ++t) {
                    acc += (static_cast<double>(doc_counts[t]) + config.alpha) *
                           (static_cast<double>(m.nkw_[t * V + w]) + config.beta) /
                           (static_cast<double>(m.nk_[t]) + vbeta);
                    cumulative[t] = acc;
                }
                const TopicId fresh = detail::sample_discrete(cumulative, rng);

                z[i] = fresh;
                ++doc_counts[fresh];
                ++m.nkw_[fresh * V + w];
                ++m.nk_[fresh];
            }
        }
        checkpoint(sweep);
    }

    m.phi_.resize(k * V);
    for (std::size_t t = 0; t < k; ++t) {
        const double denom = static_cast<double>(m.nk_[t]) + vbeta;
        for (std::size_t w = 0; w < V; ++w)
            m.phi_[t * V + w] = (static_cast<double>(m.nkw_[t * V + w]) + config.beta) / denom;
    }
    const double kalpha = static_cast<double>(k) * config.alpha;
    m.doc_theta_.resize(docs.size());
    for (std::size_t d = 0; d < docs.size(); ++d) {
        auto& theta = m.doc_theta_[d].theta;
        theta.resize(k);
        const double denom = static_cast<double>(nd[d]) + kalpha;
        for (std::size_t t = 0; t < k; ++t)
            theta[t] = (static_cast<double>(ndk[d * k + t]) + config.alpha) / denom;
    }
    return m;
}

/// Fold-in: the fitted topic-word counts stay fixed and only this document's
/// token topics are resampled, for inference_iterations sweeps.
inline TopicDistribution infer_theta(const LdaModel& model, const BowDocument& doc,
                                     std::uint64_t seed) {
    const std::size_t k = model.num_topics();
    const std::size_t V = model.vocab_size();
    const auto& cfg = model.config();
    for (auto w : doc.token_ids)
        if (w >= V) throw ValidationError("infer_theta: token id out of vocabulary range");

    // Fixed per-topic word weights (n_kw + beta) / (n_k + V beta) = phi.
    Rng rng(seed);
    std::vector<std::uint64_t> ndk(k, 0);
    std::vector<TopicId> z(doc.token_ids.size());
    for (auto& zi : z) {
        zi = static_cast<TopicId>(rng.below(k));
        ++ndk[zi];
    }
    std::vector<double> cumulative(k);
    for (std::size_t sweep = 0; sweep < cfg.inference_iterations; ++sweep) {
        for (std::size_t i = 0; i < z.size(); ++i) {
            const TermId w = doc.token_ids[i];
            --ndk[z[i]];
            double acc = 0.0;
            for (std::size_t t = 0; t < k; ++t) {
                acc += (static_cast<double>(ndk[t]) + cfg.alpha) * model.phi(t, w);
                cumulative[t] = acc;
            }
            z[i] = detail::sample_discrete(cumulative, rng);
            ++ndk[z[i]];
        }
    }
    TopicDistribution out;
    out.theta.resize(k);
    const double denom = static_cast<double>(z.size()) + static_cast<double>(k) * cfg.alpha;
    for (std::size_t t = 0; t < k; ++t)
        out.theta[t] = (static_cast<double>(ndk[t]) + cfg.alpha) / denom;
    return out;
}

// Argmax, lowest index on ties.
inline TopicId dominant_topic(const TopicDistribution& dist) {
    if (dist.theta.empty()) throw ValidationError("dominant_topic: empty distribution");
    return static_cast<TopicId>(std::max_element(dist.theta.begin(), dist.theta.end()) -
                                dist.theta.begin());
}

inline std::vector<std::string> top_words(const LdaModel& model, TopicId topic,
                                          std::size_t n = 5) {
    if (topic >= model.num_topics())
        throw ValidationError("top_words: topic " + std::to_string(topic) + " out of range (k=" +
                              std::to_string(model.num_topics()) + ")");
    const auto row = model.phi_row(topic);
    const auto& terms = model.terms();
    std::vector<TermId> ids(row.size());
    std::iota(ids.begin(), ids.end(), TermId{0});
    const std::size_t take = std::min(n, ids.size());
    std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(take), ids.end(),
                      [&](TermId a, TermId b) {
                          return row[a] != row[b] ? row[a] > row[b] : terms[a] < terms[b];
                      });
    std::vector<std::string> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) out.push_back(terms[ids[i]]);
    return out;
}

// topics.txt body: "<id> : w1 w2 w3 w4 w5" per line.
inline std::string format_topics(const LdaModel& model, std::size_t n = 5) {
    std::string out;
    for (TopicId t = 0; t < model.num_topics(); ++t) {
        out += std::to_string(t) + " :";
        for (const auto& w : top_words(model, t, n)) out += " " + w;
        out += "\n";
    }
    return out;
}

}  // namespace toxtopic

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "toxtopic/corpus.hpp"
#include "toxtopic/error.hpp"

namespace toxtopic {

// Rows are gold classes, columns predicted classes.
class ConfusionMatrix {
public:
    ConfusionMatrix() = default;
    explicit ConfusionMatrix(std::size_t num_classes)
        : num_classes_(num_classes), counts_(num_classes * num_classes, 0) {}

    std::size_t num_classes() const noexcept { return num_classes_; }
    std::uint64_t at(ClassIndex gold, ClassIndex pred) const {
        return counts_.at(gold * num_classes_ + pred);
    }
    void add(ClassIndex gold, ClassIndex pred) { ++counts_.at(gold * num_classes_ + pred); }
    std::uint64_t total() const {
        std::uint64_t n = 0;
        for (auto c : counts_) n += c;
        return n;
    }

    bool operator==(const ConfusionMatrix&) const = default;

private:
    std::size_t num_classes_ = 0;
    std::vector<std::uint64_t> counts_;
};

inline ConfusionMatrix confusion_matrix(std::span<const ClassIndex> preds,
                                        std::span<const ClassIndex> golds, std::size_t num_classes) {
    if (preds.size() != golds.size()) {
        throw ValidationError("confusion_matrix: " + std::to_string(preds.size()) +
                              " predictions vs " + std::to_string(golds.size()) + " gold labels");
    }
    ConfusionMatrix cm(num_classes);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i] >= num_classes || golds[i] >= num_classes)
            throw ValidationError("confusion_matrix: class index out of range at position " +
                                  std::to_string(i));
        cm.add(golds[i], preds[i]);
    }
    return cm;
}

struct ClassScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// precision and recall here are the micro (pooled) values.
struct MetricsRow {
    double macro_f1 = 0.0;
    double micro_f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    std::uint64_t support = 0;
};

struct PrfReport {
    std::vector<ClassScores> per_class;
    MetricsRow summary;
};

namespace detail {
inline double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }
}  // namespace detail

/// Per-class P/R/F1 with 0/0 -> 0, macro = unweighted mean of class F1,
/// micro from pooled counts.
inline PrfReport prf_scores(const ConfusionMatrix& cm) {
    const std::size_t C = cm.num_classes();
    PrfReport out;
    out.per_class.resize(C);
    double tp_sum = 0.0, fp_sum = 0.0, fn_sum = 0.0, f1_sum = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
        double tp = static_cast<double>(cm.at(c, c));
        double fp = 0.0, fn = 0.0;
        for (std::size_t o = 0; o < C; ++o) {
            if (o == c) continue;
            fp += static_cast<double>(cm.at(o, c));
            fn += static_cast<double>(cm.at(c, o));
        }
        auto& s = out.per_class[c];
        s.precision = detail::ratio(tp, tp + fp);
        s.recall = detail::ratio(tp, tp + fn);
        s.f1 = detail::ratio(2.0 * tp, 2.0 * tp + fp + fn);
        tp_sum += tp;
        fp_sum += fp;
        fn_sum += fn;
        f1_sum += s.f1;
    }
    out.summary.macro_f1 = C ? f1_sum / static_cast<double>(C) : 0.0;
    out.summary.precision = detail::ratio(tp_sum, tp_sum + fp_sum);
    out.summary.recall = detail::ratio(tp_sum, tp_sum + fn_sum);
    out.summary.micro_f1 = detail::ratio(2.0 * tp_sum, 2.0 * tp_sum + fp_sum + fn_sum);
    out.summary.support = cm.total();
    return out;
}

struct ClassRate {
    double tpr = 0.0;
    double tnr = 0.0;
    double fpr = 0.0;
};

struct ClassRates {
    std::vector<ClassRate> per_class;
};

// One-vs-rest rates per class, 0/0 -> 0.
inline ClassRates class_rates(const ConfusionMatrix& cm) {
    const std::size_t C = cm.num_classes();
    const double total = static_cast<double>(cm.total());
    ClassRates out;
    out.per_class.resize(C);
    for (std::size_t c = 0; c < C; ++c) {
        double tp = static_cast<double>(cm.at(c, c));
        double fp = 0.0, fn = 0.0;
        for (std::size_t o = 0; o < C; ++o) {
            if (o == c) continue;
            fp += static_cast<double>(cm.at(o, c));
            fn += static_cast<double>(cm.at(c, o));
        }
        const double tn = total - tp - fp - fn;
        auto& r = out.per_class[c];
        r.tpr = detail::ratio(tp, tp + fn);
        r.tnr = detail::ratio(tn, tn + fp);
        r.fpr = detail::ratio(fp, tn + fp);
    }
    return out;
}

/// Per-example modal class across seed runs, ties toward the lowest index.
inline std::vector<ClassIndex> majority_vote(const std::vector<std::vector<ClassIndex>>& per_seed) {
    if (per_seed.empty()) throw ValidationError("majority_vote: no prediction lists");
    const std::size_t n = per_seed.front().size();
    for (const auto& preds : per_seed)
        if (preds.size() != n) throw ValidationError("majority_vote: ragged prediction lists");
    std::vector<ClassIndex> out(n);
    std::vector<ClassIndex> votes(per_seed.size());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t s = 0; s < per_seed.size(); ++s) votes[s] = per_seed[s][i];
        out[i] = majority_label(votes);
    }
    return out;
}

struct SeedAggregate {
    std::map<std::uint64_t, double> per_seed;
    double mean = 0.0;
    double stdev = 0.0;  // sample (n - 1); 0 for a single seed
};

inline SeedAggregate aggregate_seeds(const std::map<std::uint64_t, double>& per_seed_f1) {
    if (per_seed_f1.empty()) throw ValidationError("aggregate_seeds: no seeds");
    SeedAggregate out;
    out.per_seed = per_seed_f1;
    double sum = 0.0;
    for (const auto& [seed, v] : per_seed_f1) sum += v;
    const double n = static_cast<double>(per_seed_f1.size());
    out.mean = sum / n;
    if (per_seed_f1.size() > 1) {
        double ss = 0.0;
        for (const auto& [seed, v] : per_seed_f1) ss += (v - out.mean) * (v - out.mean);
        out.stdev = std::sqrt(ss / (n - 1.0));
    }
    // Identical inputs must give exactly 0 and a mean inside [min, max]
    // despite rounding in the sum.
    const auto [lo, hi] = std::minmax_element(
        per_seed_f1.begin(), per_seed_f1.end(),
        [](const auto& a, const auto& b) { return a.second < b.second; });
    if (lo->second == hi->second) {
        out.mean = lo->second;
        out.stdev = 0.0;
    }
    out.mean = std::clamp(out.mean, lo->second, hi->second);
    return out;
}

// Half away from zero at 4 decimals, the precision used in emitted tables.
inline double round4(double x) { return std::round(x * 1e4) / 1e4; }

enum class DemographicField { gender, ethnicity };

inline std::string_view to_string(DemographicField f) {
    return f == DemographicField::gender ? "gender" : "ethnicity";
}

inline DemographicField parse_demographic_field(std::string_view s) {
    if (s == "gender") return DemographicField::gender;
    if (s == "ethnicity") return DemographicField::ethnicity;
    throw ValidationError("unknown demographic field '" + std::string(s) +
                          "' (expected gender or ethnicity)");
}

struct GroupMetrics {
    std::string group;
    MetricsRow metrics;
};

/// Each annotation is one evaluation pair: the model's prediction for the
/// instance against that annotator's own label. Pairs are grouped by the
/// annotator's field value; groups come back in lexicographic order.
inline std::vector<GroupMetrics> demographic_breakdown(
    const std::map<InstanceId, ClassIndex>& preds, std::span<const AnnotationRecord> annotations,
    DemographicField field, std::size_t num_classes) {
    std::map<std::string, ConfusionMatrix> groups;
    for (const auto& a : annotations) {
        auto it = preds.find(a.instance_id);
        if (it == preds.end())
            throw ValidationError("demographic_breakdown: no prediction for instance_id " +
                                  std::to_string(a.instance_id));
        const std::string& key = field == DemographicField::gender ? a.gender : a.ethnicity;
        auto [g, inserted] = groups.try_emplace(key, num_classes);
        if (a.label >= num_classes || it->second >= num_classes)
            throw ValidationError("demographic_breakdown: class index out of range");
        g->second.add(a.label, it->second);
    }
    std::vector<GroupMetrics> out;
    out.reserve(groups.size());
    for (const auto& [name, cm] : groups) out.push_back({name, prf_scores(cm).summary});
    return out;
}

}  // namespace toxtopic

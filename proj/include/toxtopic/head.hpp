#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "toxtopic/binio.hpp"
#include "toxtopic/corpus.hpp"
#include "toxtopic/error.hpp"
#include "toxtopic/features.hpp"
#include "toxtopic/io.hpp"
#include "toxtopic/rng.hpp"

namespace toxtopic {

struct TrainConfig {
    double learning_rate = 5e-5;
    std::size_t warmup_steps = 0;
    std::size_t epochs = 70;
    std::size_t batch_size = 32;
    double l2 = 0.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
            throw ValidationError("head.learning_rate must be > 0");
        if (epochs < 1) throw ValidationError("head.epochs must be >= 1");
        if (batch_size < 1) throw ValidationError("head.batch_size must be >= 1");
        if (!(l2 >= 0.0) || !std::isfinite(l2)) throw ValidationError("head.l2 must be >= 0");
    }
};

// Softmax classification head: logits = W x + b, W is C x d row-major.
struct HeadModel {
    std::size_t num_classes = 0;
    std::size_t dim = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    static HeadModel zeros(std::size_t num_classes, std::size_t dim) {
        return HeadModel{num_classes, dim, std::vector<double>(num_classes * dim, 0.0),
                         std::vector<double>(num_classes, 0.0)};
    }

    double& w(std::size_t c, std::size_t j) { return weights[c * dim + j]; }
    double w(std::size_t c, std::size_t j) const { return weights[c * dim + j]; }

    bool operator==(const HeadModel&) const = default;
};

struct LossGrad {
    double loss = 0.0;
    std::vector<double> grad_weights;  // C x d
    std::vector<double> grad_bias;     // C
};

namespace detail {

inline void check_dim(const HeadModel& model, std::size_t d) {
    if (d != model.dim) {
        throw ValidationError("feature dimension mismatch: model expects " +
                              std::to_string(model.dim) + ", got " + std::to_string(d));
    }
}

inline void logits_into(const HeadModel& model, std::span<const double> x, std::span<double> out) {
    for (std::size_t c = 0; c < model.num_classes; ++c) {
        const double* wrow = &model.weights[c * model.dim];
        double z = model.bias[c];
        for (std::size_t j = 0; j < model.dim; ++j) z += wrow[j] * x[j];
        out[c] = z;
    }
}

// In place softmax with max subtraction; returns log-sum-exp of the input.
inline double softmax_in_place(std::span<double> z) {
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (auto& v : z) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (auto& v : z) v /= sum;
    return mx + std::log(sum);
}

inline std::size_t argmax(std::span<const double> v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace detail

inline std::vector<double> predict_proba(const HeadModel& model, std::span<const double> x) {
    detail::check_dim(model, x.size());
    std::vector<double> p(model.num_classes);
    detail::logits_into(model, x, p);
    detail::softmax_in_place(p);
    return p;
}

inline ClassIndex predict(const HeadModel& model, std::span<const double> x) {
    return detail::argmax(predict_proba(model, x));
}

inline std::vector<ClassIndex> predict_all(const HeadModel& model, const FeatureMatrix& features) {
    detail::check_dim(model, features.dim);
    std::vector<ClassIndex> out;
    out.reserve(features.rows());
    for (std::size_t i = 0; i < features.rows(); ++i) out.push_back(predict(model, features.row(i)));
    return out;
}

/// Mean cross-entropy over the selected rows plus (l2 / 2) * ||W||^2, with
/// analytic gradients. The bias is not regularized.
inline LossGrad loss_and_grad(const HeadModel& model, const FeatureMatrix& features,
                              std::span<const ClassIndex> labels, std::span<const std::size_t> rows,
                              double l2) {
    detail::check_dim(model, features.dim);
    if (rows.empty()) throw ValidationError("loss_and_grad: empty batch");
    const std::size_t C = model.num_classes;
    const std::size_t d = model.dim;
    LossGrad out{0.0, std::vector<double>(C * d, 0.0), std::vector<double>(C, 0.0)};
    std::vector<double> p(C);
    const double inv_n = 1.0 / static_cast<double>(rows.size());
    for (auto r : rows) {
        const ClassIndex y = labels[r];
        if (y >= C) throw ValidationError("label " + std::to_string(y) + " out of range");
        const auto x = features.row(r);
        detail::logits_into(model, x, p);
        const double zy = p[y];
        out.loss += detail::softmax_in_place(p) - zy;
        p[y] -= 1.0;
        for (std::size_t c = 0; c < C; ++c) {
            const double g = p[c] * inv_n;
            if (g == 0.0) continue;
            double* grow = &out.grad_weights[c * d];
            for (std::size_t j = 0; j < d; ++j) grow[j] += g * x[j];
            out.grad_bias[c] += g;
        }
    }
    out.loss *= inv_n;
    if (l2 > 0.0) {
        double sq = 0.0;
        for (std::size_t i = 0; i < model.weights.size(); ++i) {
            sq += model.weights[i] * model.weights[i];
            out.grad_weights[i] += l2 * model.weights[i];
        }
        out.loss += 0.5 * l2 * sq;
    }
    return out;
}

inline LossGrad loss_and_grad(const HeadModel& model, const FeatureMatrix& features,
                              std::span<const ClassIndex> labels, double l2) {
    if (labels.size() != features.rows())
        throw ValidationError("loss_and_grad: label count does not match feature rows");
    std::vector<std::size_t> rows(features.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return loss_and_grad(model, features, labels, rows, l2);
}

struct TrainOptions {
    // Called after each epoch with the 1-based epoch number.
    std::function<void(std::size_t, const HeadModel&)> on_epoch;
};

/// Mini-batch SGD from a zero model. Each epoch reshuffles the example order
/// with the seeded generator. With warmup_steps > 0 the rate at update s
/// (1-based) is scaled by min(1, s / warmup_steps).
inline HeadModel train_head(const FeatureMatrix& features, std::span<const ClassIndex> labels,
                            std::size_t num_classes, const TrainConfig& config,
                            const TrainOptions& options = {}) {
    config.validate();
    if (num_classes < 2) throw ValidationError("train_head: need at least 2 classes");
    if (features.rows() == 0) throw ValidationError("train_head: no training examples");
    if (labels.size() != features.rows()) {
        throw ValidationError("train_head: " + std::to_string(labels.size()) + " labels for " +
                              std::to_string(features.rows()) + " feature rows");
    }
    if (features.dim == 0) throw ValidationError("train_head: zero feature dimension");
    if (features.values.size() != features.rows() * features.dim)
        throw ValidationError("train_head: feature matrix shape is inconsistent");
    for (auto y : labels)
        if (y >= num_classes)
            throw ValidationError("train_head: label " + std::to_string(y) + " out of range");

    HeadModel model = HeadModel::zeros(num_classes, features.dim);
    Rng rng(config.seed);
    std::vector<std::size_t> order(features.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t step = 0;
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        rng.shuffle(std::span(order));
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            const auto batch = std::span(order).subspan(start, end - start);
            const LossGrad lg = loss_and_grad(model, features, labels, batch, config.l2);
            if (!std::isfinite(lg.loss))
                throw DivergenceError("head training diverged (non-finite loss) in epoch " +
                                      std::to_string(epoch));
            ++step;
            double lr = config.learning_rate;
            if (config.warmup_steps > 0)
                lr *= std::min(1.0, static_cast<double>(step) /
                                        static_cast<double>(config.warmup_steps));
            for (std::size_t i = 0; i < model.weights.size(); ++i)
                model.weights[i] -= lr * lg.grad_weights[i];
            for (std::size_t c = 0; c < num_classes; ++c) model.bias[c] -= lr * lg.grad_bias[c];
        }
        if (options.on_epoch) options.on_epoch(epoch, model);
    }
    return model;
}

inline constexpr std::string_view kHeadMagic = "HEAD";

// Model artifact: "HEAD", u32 C, u32 d, C*d float64 weights row-major, C
// float64 biases; all little-endian.
inline std::string serialize_head(const HeadModel& model) {
    std::string out(kHeadMagic);
    binio::append_u32(out, static_cast<std::uint32_t>(model.num_classes));
    binio::append_u32(out, static_cast<std::uint32_t>(model.dim));
    for (double v : model.weights) binio::append_f64(out, v);
    for (double v : model.bias) binio::append_f64(out, v);
    return out;
}

inline HeadModel parse_head(std::span<const std::byte> bytes) {
    if (bytes.size() < 12) throw FormatError("head artifact shorter than its 12-byte header");
    if (std::memcmp(bytes.data(), kHeadMagic.data(), 4) != 0)
        throw FormatError("head artifact has bad magic (expected HEAD)");
    const std::uint64_t C = binio::load_u32(bytes, 4);
    const std::uint64_t d = binio::load_u32(bytes, 8);
    const std::uint64_t expected = 12 + 8 * (C * d + C);
    if (bytes.size() != expected) {
        throw FormatError("head artifact length " + std::to_string(bytes.size()) +
                          " does not match declared size " + std::to_string(expected));
    }
    HeadModel m = HeadModel::zeros(C, d);
    std::size_t off = 12;
    for (auto& v : m.weights) {
        v = binio::load_f64(bytes, off);
        off += 8;
    }
    for (auto& v : m.bias) {
        v = binio::load_f64(bytes, off);
        off += 8;
    }
    for (double v : m.weights)
        if (!std::isfinite(v)) throw FormatError("non-finite weight in head artifact");
    for (double v : m.bias)
        if (!std::isfinite(v)) throw FormatError("non-finite bias in head artifact");
    return m;
}

inline void save_head(const HeadModel& model, const std::filesystem::path& path) {
    io::write_file(path, serialize_head(model));
}

inline HeadModel load_head(const std::filesystem::path& path) {
    const std::string data = io::read_file(path);
    return parse_head(binio::as_bytes(data));
}

}  // namespace toxtopic

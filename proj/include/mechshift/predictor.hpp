// Copyright 2026 The mechshift authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MECHSHIFT_PREDICTOR_HPP
#define MECHSHIFT_PREDICTOR_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mechshift/errors.hpp"
#include "mechshift/graph.hpp"
#include "mechshift/metrics.hpp"
#include "mechshift/value.hpp"

namespace mechshift {

enum class PredictorKind { logistic_scalar, logistic_per_pixel };

struct PredictorConfig {
    int max_epochs = 500;
    double initial_step = 4.0;
    double grad_tolerance = 1e-7;
    std::uint64_t seed = 0;  // recorded; training itself is seed-free (zero init, convex loss)
};

/// A frozen logistic model. `logistic_scalar` classifies a binary variable
/// from flattened input features; `logistic_per_pixel` shares one
/// (weight, bias) pair across the pixels of a single vector input to predict
/// a mask. Evaluation never mutates parameters.
struct Predictor {
    PredictorKind kind = PredictorKind::logistic_scalar;
    std::vector<std::string> input_names;  // sorted by declaration index at training time
    std::string target_name;
    std::vector<double> weights;
    double bias = 0.0;
    // training metadata
    std::uint64_t seed = 0;
    int epochs = 0;
    std::vector<double> loss_trace;
};

namespace detail {

/// Flattens the declared inputs of a row into the scalar feature vector:
/// discrete -> one-hot, continuous scalar -> value, grid/mask -> components.
inline void scalar_features(const CausalGraph& g, const std::vector<int>& inputs,
                            const Assignment& row, std::vector<double>& out) {
    out.clear();
    for (int v : inputs) {
        const VarKind& kind = g.variable(v).kind;
        switch (kind.type) {
            case VarType::discrete:
                for (int c = 0; c < kind.cardinality; ++c)
                    out.push_back(row[v].code() == c ? 1.0 : 0.0);
                break;
            case VarType::continuous:
                if (kind.length == 1) {
                    out.push_back(row[v].scalar());
                } else {
                    for (double x : row[v].grid()) out.push_back(x);
                }
                break;
            case VarType::mask:
                for (auto px : row[v].mask()) out.push_back(static_cast<double>(px));
                break;
        }
    }
}

inline double stable_bce(double z, double y) {
    // max(z,0) - z*y + log(1 + exp(-|z|))
    return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

/// One labeled training example with a flat feature vector.
struct FlatExample {
    std::vector<double> x;
    double y;
};

/// Full-batch gradient descent with Armijo backtracking; the recorded loss
/// trace is non-increasing by construction.
inline void fit_logistic(const std::vector<FlatExample>& examples, std::vector<double>& weights,
                         double& bias, const PredictorConfig& cfg, std::vector<double>& trace) {
    const std::size_t n = examples.size();
    const std::size_t d = weights.size();

    auto loss_at = [&](const std::vector<double>& w, double b) {
        double total = 0.0;
        for (const auto& ex : examples) {
            double z = b;
            for (std::size_t j = 0; j < d; ++j) z += w[j] * ex.x[j];
            total += stable_bce(z, ex.y);
        }
        return total / static_cast<double>(n);
    };

    double loss = loss_at(weights, bias);
    if (!std::isfinite(loss)) throw NonFiniteLoss("initial loss not finite");
    trace.push_back(loss);

    std::vector<double> grad(d);
    double step = cfg.initial_step;
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double grad_bias = 0.0;
        for (const auto& ex : examples) {
            double z = bias;
            for (std::size_t j = 0; j < d; ++j) z += weights[j] * ex.x[j];
            const double delta = (1.0 / (1.0 + std::exp(-z))) - ex.y;
            for (std::size_t j = 0; j < d; ++j) grad[j] += delta * ex.x[j];
            grad_bias += delta;
        }
        grad_bias /= static_cast<double>(n);
        double grad_norm2 = grad_bias * grad_bias;
        for (std::size_t j = 0; j < d; ++j) {
            grad[j] /= static_cast<double>(n);
            grad_norm2 += grad[j] * grad[j];
        }
        if (std::sqrt(grad_norm2) < cfg.grad_tolerance) break;

        // Armijo backtracking
        std::vector<double> w_next(d);
        double accepted = -1.0;
        step = std::min(step * 2.0, cfg.initial_step * 16.0);
        while (step > 1e-14) {
            for (std::size_t j = 0; j < d; ++j) w_next[j] = weights[j] - step * grad[j];
            const double b_next = bias - step * grad_bias;
            const double candidate = loss_at(w_next, b_next);
            if (std::isfinite(candidate) && candidate <= loss - 1e-4 * step * grad_norm2) {
                accepted = candidate;
                weights = w_next;
                bias = b_next;
                break;
            }
            step *= 0.5;
        }
        if (accepted < 0) break;  // no descent step found: converged
        loss = accepted;
        if (!std::isfinite(loss)) throw NonFiniteLoss("training loss diverged");
        trace.push_back(loss);
    }
}

}  // namespace detail

/// Trains a logistic predictor of `target` from `inputs` on a dataset.
/// Mask targets get the shared per-pixel model; binary scalar targets get the
/// flat logistic model. Deterministic given the config.
inline Predictor train_predictor(const CausalGraph& g, const Dataset& data,
                                 const std::string& target, std::vector<std::string> inputs,
                                 const PredictorConfig& cfg = {}) {
    if (data.empty()) throw InvalidSpec("train_predictor: empty dataset");
    const int target_idx = g.index_of(target);
    const VarKind& target_kind = g.variable(target_idx).kind;

    std::vector<int> input_idx;
    for (const auto& name : inputs) input_idx.push_back(g.index_of(name));
    std::sort(input_idx.begin(), input_idx.end());
    input_idx.erase(std::unique(input_idx.begin(), input_idx.end()), input_idx.end());
    if (input_idx.empty()) throw InvalidSpec("train_predictor: no input variables");

    Predictor f;
    f.target_name = target;
    for (int v : input_idx) f.input_names.push_back(g.variable(v).name);
    f.seed = cfg.seed;

    std::vector<detail::FlatExample> examples;
    if (target_kind.type == VarType::mask) {
        if (input_idx.size() != 1 || !g.variable(input_idx[0]).kind.is_vector() ||
            g.variable(input_idx[0]).kind.length != target_kind.length)
            throw InvalidSpec("per-pixel predictor needs one vector input matching the mask");
        f.kind = PredictorKind::logistic_per_pixel;
        examples.reserve(data.size() * target_kind.length);
        for (const auto& row : data.rows) {
            const Mask& y = row[target_idx].mask();
            for (int p = 0; p < target_kind.length; ++p)
                examples.push_back({{detail::pixel_of(row[input_idx[0]], p)},
                                    static_cast<double>(y[p])});
        }
        f.weights.assign(1, 0.0);
    } else if (target_kind.is_discrete() && target_kind.cardinality == 2) {
        f.kind = PredictorKind::logistic_scalar;
        std::vector<double> feat;
        for (const auto& row : data.rows) {
            detail::scalar_features(g, input_idx, row, feat);
            examples.push_back({feat, static_cast<double>(row[target_idx].code())});
        }
        f.weights.assign(examples.front().x.size(), 0.0);
    } else {
        throw InvalidSpec("predictor target must be a mask or a binary variable");
    }

    bool saw0 = false, saw1 = false;
    for (const auto& ex : examples) (ex.y > 0.5 ? saw1 : saw0) = true;
    if (!saw0 || !saw1) throw DegenerateTarget("target has a single class");

    detail::fit_logistic(examples, f.weights, f.bias, cfg, f.loss_trace);
    f.epochs = static_cast<int>(f.loss_trace.size()) - 1;
    return f;
}

/// Predicted value for a row (mask for per-pixel models, binary code
/// otherwise).
inline Value predict(const Predictor& f, const CausalGraph& g, const Assignment& row) {
    if (row.size() != static_cast<std::size_t>(g.n()))
        throw MissingVariable("row does not assign every variable");
    if (f.kind == PredictorKind::logistic_per_pixel) {
        const int input_idx = g.index_of(f.input_names.at(0));
        const int length = g.variable(input_idx).kind.length;
        Mask mask(length, 0);
        for (int p = 0; p < length; ++p) {
            const double z = f.weights[0] * detail::pixel_of(row[input_idx], p) + f.bias;
            mask[p] = z > 0.0 ? 1 : 0;
        }
        return Value(std::move(mask));
    }
    std::vector<int> input_idx;
    for (const auto& name : f.input_names) input_idx.push_back(g.index_of(name));
    std::vector<double> feat;
    detail::scalar_features(g, input_idx, row, feat);
    if (feat.size() != f.weights.size()) throw MissingVariable("feature width mismatch");
    double z = f.bias;
    for (std::size_t j = 0; j < feat.size(); ++j) z += f.weights[j] * feat[j];
    return Value(static_cast<std::int64_t>(z > 0.0 ? 1 : 0));
}

/// Metric M(f, row): evaluates the frozen predictor on one row and scores it
/// against the row's ground truth.
inline double per_sample_metric(const Predictor& f, const CausalGraph& g, const Assignment& row,
                                const MetricSpec& metric) {
    const int target_idx = g.index_of(f.target_name);
    const Value prediction = predict(f, g, row);
    if (g.variable(target_idx).kind.type == VarType::mask)
        return mask_metric(prediction.mask(), row[target_idx].mask(), metric);
    return label_metric(prediction.code(), row[target_idx].code(), metric);
}

}  // namespace mechshift

#endif

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

#ifndef MECHSHIFT_METRICS_HPP
#define MECHSHIFT_METRICS_HPP

#include <cmath>
#include <string>
#include <vector>

#include "mechshift/errors.hpp"
#include "mechshift/value.hpp"

namespace mechshift {

enum class MetricKind { accuracy, dice, f1 };

struct MetricSpec {
    MetricKind kind = MetricKind::dice;
    double epsilon = 1e-6;  // smoothing for empty-mask cases

    static MetricSpec parse(const std::string& name, double epsilon = 1e-6) {
        if (name == "accuracy") return {MetricKind::accuracy, epsilon};
        if (name == "dice") return {MetricKind::dice, epsilon};
        if (name == "f1") return {MetricKind::f1, epsilon};
        throw ConfigInvalid("unknown metric '" + name + "'");
    }

    std::string name() const {
        switch (kind) {
            case MetricKind::accuracy: return "accuracy";
            case MetricKind::dice: return "dice";
            case MetricKind::f1: return "f1";
        }
        return "?";
    }
};

/// Pixel confusion counts of one row.
struct MaskCounts {
    long tp = 0, fp = 0, fn = 0, tn = 0;
    long total() const { return tp + fp + fn + tn; }
};

inline MaskCounts mask_counts(const Mask& prediction, const Mask& truth) {
    if (prediction.size() != truth.size())
        throw InvalidSpec("prediction/truth mask length mismatch");
    MaskCounts c;
    for (std::size_t p = 0; p < truth.size(); ++p) {
        if (prediction[p] && truth[p]) ++c.tp;
        else if (prediction[p] && !truth[p]) ++c.fp;
        else if (!prediction[p] && truth[p]) ++c.fn;
        else ++c.tn;
    }
    return c;
}

/// Dice = (2 TP + eps) / (2 TP + FP + FN + eps). Both masks empty gives
/// exactly 1; exactly one empty gives the eps-smoothed value near 0.
inline double dice_from_counts(const MaskCounts& c, double epsilon) {
    return (2.0 * c.tp + epsilon) / (2.0 * c.tp + c.fp + c.fn + epsilon);
}

/// Pixel-wise F1 from the same row counts. Identical to Dice for binary
/// masks; instance-level (connected-component) F1 is not implemented.
inline double f1_from_counts(const MaskCounts& c, double epsilon) {
    return (2.0 * c.tp + epsilon) / (2.0 * c.tp + c.fp + c.fn + epsilon);
}

inline double accuracy_from_counts(const MaskCounts& c) {
    return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

inline double mask_metric(const Mask& prediction, const Mask& truth, const MetricSpec& spec) {
    const MaskCounts c = mask_counts(prediction, truth);
    switch (spec.kind) {
        case MetricKind::accuracy: return accuracy_from_counts(c);
        case MetricKind::dice: return dice_from_counts(c, spec.epsilon);
        case MetricKind::f1: return f1_from_counts(c, spec.epsilon);
    }
    return 0.0;
}

inline double label_metric(std::int64_t prediction, std::int64_t truth, const MetricSpec& spec) {
    if (spec.kind == MetricKind::accuracy) return prediction == truth ? 1.0 : 0.0;
    // dice/f1 on a single binary label: treat it as a one-pixel mask
    Mask p{static_cast<std::uint8_t>(prediction != 0)};
    Mask t{static_cast<std::uint8_t>(truth != 0)};
    return mask_metric(p, t, spec);
}

/// Self-normalized importance-weighted mean with its effective sample size
/// ESS = (sum w)^2 / sum w^2.
struct WeightedEstimate {
    double value = 0.0;
    double ess = 0.0;
};

inline WeightedEstimate weighted_metric(const std::vector<double>& values,
                                        const std::vector<double>& weights) {
    if (values.size() != weights.size())
        throw InvalidSpec("weighted_metric: length mismatch");
    if (values.empty()) throw AllZeroWeights("weighted_metric: empty input");
    double sum_w = 0.0, sum_w2 = 0.0, sum_wv = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) {
        const double w = weights[k];
        if (w < 0.0) throw NegativeWeight("weighted_metric: negative weight");
        sum_w += w;
        sum_w2 += w * w;
        sum_wv += w * values[k];
    }
    if (sum_w <= 0.0) throw AllZeroWeights("weighted_metric: all weights zero");
    return {sum_wv / sum_w, sum_w * sum_w / sum_w2};
}

}  // namespace mechshift

#endif

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

#ifndef MECHSHIFT_FEATURES_HPP
#define MECHSHIFT_FEATURES_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "mechshift/graph.hpp"
#include "mechshift/value.hpp"

namespace mechshift {

/// How a feature dimension behaves under standardization and augmentation.
enum class FeatureDimKind {
    onehot,      // categorical indicator: never perturbed or standardized
    mask_pixel,  // binary pixel: augmented by flips
    continuous,  // standardized, augmented by Gaussian noise
};

/// Maps a subset of graph variables to a flat feature vector for an
/// environment discriminator. Discrete variables become one-hots (a single
/// saturated config one-hot when the subset is fully discrete and small, so
/// a plain logistic model is already expressive enough). Grids contribute raw
/// pixels plus multi-resolution summaries (mean, variance, histogram
/// fractions); masks contribute raw pixels plus the foreground fraction.
class FeatureMap {
public:
    static constexpr int kHistogramBins = 8;
    static constexpr int kSaturatedLimit = 4096;

    static FeatureMap build(const CausalGraph& g, std::vector<int> variables,
                            const std::vector<const Dataset*>& pool) {
        FeatureMap fm;
        fm.variables_ = std::move(variables);

        bool all_discrete = true;
        long configs = 1;
        for (int v : fm.variables_) {
            const VarKind& kind = g.variable(v).kind;
            if (!kind.is_discrete()) {
                all_discrete = false;
                break;
            }
            configs *= kind.cardinality;
            if (configs > kSaturatedLimit) break;
        }
        fm.saturated_ = all_discrete && configs <= kSaturatedLimit && !fm.variables_.empty();
        if (fm.saturated_) {
            fm.saturated_configs_ = static_cast<int>(configs);
            fm.dim_kinds_.assign(fm.saturated_configs_, FeatureDimKind::onehot);
            for (int v : fm.variables_) fm.cardinalities_.push_back(g.variable(v).kind.cardinality);
            return fm;
        }

        for (int v : fm.variables_) {
            const VarKind& kind = g.variable(v).kind;
            switch (kind.type) {
                case VarType::discrete:
                    for (int c = 0; c < kind.cardinality; ++c)
                        fm.dim_kinds_.push_back(FeatureDimKind::onehot);
                    break;
                case VarType::continuous:
                    if (kind.length == 1) {
                        fm.dim_kinds_.push_back(FeatureDimKind::continuous);
                    } else {
                        for (int p = 0; p < kind.length; ++p)
                            fm.dim_kinds_.push_back(FeatureDimKind::continuous);
                        // mean, variance, histogram fractions
                        for (int s = 0; s < 2 + kHistogramBins; ++s)
                            fm.dim_kinds_.push_back(FeatureDimKind::continuous);
                        fm.grid_ranges_.push_back({v, pooled_range(v, pool)});
                    }
                    break;
                case VarType::mask:
                    for (int p = 0; p < kind.length; ++p)
                        fm.dim_kinds_.push_back(FeatureDimKind::mask_pixel);
                    fm.dim_kinds_.push_back(FeatureDimKind::continuous);  // foreground fraction
                    break;
            }
        }
        return fm;
    }

    int dim() const { return static_cast<int>(dim_kinds_.size()); }
    FeatureDimKind dim_kind(int d) const { return dim_kinds_[d]; }
    const std::vector<int>& variables() const { return variables_; }
    bool saturated() const { return saturated_; }

    void extract(const CausalGraph& g, const Assignment& row, std::vector<double>& out) const {
        out.assign(dim_kinds_.size(), 0.0);
        if (saturated_) {
            int config = 0;
            for (std::size_t k = 0; k < variables_.size(); ++k)
                config = config * cardinalities_[k] +
                         static_cast<int>(row[variables_[k]].code());
            out[config] = 1.0;
            return;
        }
        std::size_t d = 0;
        std::size_t grid_slot = 0;
        for (int v : variables_) {
            const VarKind& kind = g.variable(v).kind;
            switch (kind.type) {
                case VarType::discrete:
                    out[d + static_cast<std::size_t>(row[v].code())] = 1.0;
                    d += kind.cardinality;
                    break;
                case VarType::continuous:
                    if (kind.length == 1) {
                        out[d++] = row[v].scalar();
                    } else {
                        const Grid& x = row[v].grid();
                        double mean = 0.0;
                        for (int p = 0; p < kind.length; ++p) {
                            out[d + p] = x[p];
                            mean += x[p];
                        }
                        mean /= kind.length;
                        double var = 0.0;
                        for (double px : x) var += (px - mean) * (px - mean);
                        var /= kind.length;
                        d += kind.length;
                        out[d++] = mean;
                        out[d++] = var;
                        const auto& range = grid_ranges_[grid_slot++].second;
                        const double width = (range.second - range.first) / kHistogramBins;
                        for (double px : x) {
                            int bin = width > 0
                                          ? static_cast<int>((px - range.first) / width)
                                          : 0;
                            bin = std::clamp(bin, 0, kHistogramBins - 1);
                            out[d + bin] += 1.0 / kind.length;
                        }
                        d += kHistogramBins;
                    }
                    break;
                case VarType::mask: {
                    const Mask& m = row[v].mask();
                    double fg = 0.0;
                    for (int p = 0; p < kind.length; ++p) {
                        out[d + p] = m[p];
                        fg += m[p];
                    }
                    d += kind.length;
                    out[d++] = fg / kind.length;
                    break;
                }
            }
        }
    }

private:
    static std::pair<double, double> pooled_range(int v, const std::vector<const Dataset*>& pool) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (const Dataset* data : pool) {
            if (!data) continue;
            for (const auto& row : data->rows)
                for (double px : row[v].grid()) {
                    lo = std::min(lo, px);
                    hi = std::max(hi, px);
                }
        }
        if (!std::isfinite(lo) || !std::isfinite(hi)) return {0.0, 1.0};
        return {lo, hi};
    }

    std::vector<int> variables_;
    std::vector<FeatureDimKind> dim_kinds_;
    bool saturated_ = false;
    int saturated_configs_ = 0;
    std::vector<int> cardinalities_;                          // saturated mode
    std::vector<std::pair<int, std::pair<double, double>>> grid_ranges_;  // per grid variable
};

}  // namespace mechshift

#endif

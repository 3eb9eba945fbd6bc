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

#ifndef MECHSHIFT_SCM_HPP
#define MECHSHIFT_SCM_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "mechshift/errors.hpp"
#include "mechshift/graph.hpp"
#include "mechshift/rng.hpp"
#include "mechshift/value.hpp"

namespace mechshift {

// ---------------------------------------------------------------------------
// Mechanism families
// ---------------------------------------------------------------------------

/// Conditional probability table for a discrete child of discrete parents.
/// table[parent_config][value]; rows sum to 1 (validated to 1e-9). Parent
/// configs are mixed-radix codes over the parent list (sorted by declaration
/// index), last parent varying fastest.
struct DiscreteCpt {
    std::vector<std::vector<double>> table;
};

/// Scalar Gaussian child: value = bias + sum_k weights[k] * parent_k + sigma*eps.
/// Discrete parents enter through their integer codes.
struct LinearGaussian {
    std::vector<double> weights;
    double bias = 0.0;
    double sigma = 1.0;
};

/// Binary child with P(v=1 | pa) = sigmoid(bias + sum_k weights[k] * parent_k).
struct BernoulliLogit {
    std::vector<double> weights;
    double bias = 0.0;
};

struct MaskParams {
    double threshold = 0.0;
    int dilation = 0;
    double flip_rate = 0.0;
};

/// Mask-valued child of one vector parent (grid or mask) plus optional
/// discrete parents selecting a parameter set: base = (parent > threshold)
/// dilated by `dilation` (Chebyshev radius on a 2-D grid when grid_width > 0,
/// interval radius otherwise), then every pixel flipped with flip_rate.
struct MaskThreshold {
    int grid_width = 0;  // 0 = 1-D
    std::vector<MaskParams> params;  // one per discrete-parent config
};

/// Grid-valued child of discrete parents: x = means[config] + common_sigma *
/// g * 1 + pixel_sigma * eps with g and eps standard normal. The common-mode
/// term models per-sample global factors (e.g. scanner brightness) and keeps
/// the density ratio between environments low-dimensional.
struct GridGaussian {
    std::vector<std::vector<double>> means;  // [parent_config][pixel]
    std::vector<double> pixel_sigma;         // per config, > 0
    std::vector<double> common_sigma;        // per config, >= 0
};

using MechanismSpec =
    std::variant<DiscreteCpt, LinearGaussian, BernoulliLogit, MaskThreshold, GridGaussian>;

/// Per-mechanism conditional distributions for one environment.
struct Environment {
    std::string label;
    std::vector<MechanismSpec> specs;  // indexed by MechanismId
};

// ---------------------------------------------------------------------------
// Parent configuration helpers
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<int> discrete_parents(const CausalGraph& g, int var_idx) {
    std::vector<int> out;
    for (int p : g.parents(var_idx))
        if (g.variable(p).kind.is_discrete()) out.push_back(p);
    return out;
}

inline int parent_config_count(const CausalGraph& g, int var_idx) {
    int count = 1;
    for (int p : discrete_parents(g, var_idx)) count *= g.variable(p).kind.cardinality;
    return count;
}

inline int parent_config_of(const CausalGraph& g, int var_idx, const Assignment& row) {
    int config = 0;
    for (int p : discrete_parents(g, var_idx)) {
        const int card = g.variable(p).kind.cardinality;
        const auto code = row[p].code();
        if (code < 0 || code >= card)
            throw InvalidSpec("parent '" + g.variable(p).name + "' code out of range");
        config = config * card + static_cast<int>(code);
    }
    return config;
}

inline int vector_parent(const CausalGraph& g, int var_idx) {
    int found = -1;
    for (int p : g.parents(var_idx)) {
        if (g.variable(p).kind.is_vector()) {
            if (found >= 0)
                throw InvalidSpec("mask child '" + g.variable(var_idx).name +
                                  "' must have exactly one vector parent");
            found = p;
        }
    }
    if (found < 0)
        throw InvalidSpec("mask child '" + g.variable(var_idx).name + "' needs a vector parent");
    return found;
}

/// Deterministic part of MaskThreshold: threshold then dilate.
inline Mask mask_base(const Value& parent, int length, const MaskParams& mp, int grid_width) {
    Mask base(length, 0);
    for (int p = 0; p < length; ++p) base[p] = pixel_of(parent, p) > mp.threshold ? 1 : 0;
    if (mp.dilation <= 0) return base;
    Mask dilated(length, 0);
    if (grid_width > 0) {
        const int w = grid_width;
        const int h = length / w;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                bool on = false;
                for (int dy = -mp.dilation; dy <= mp.dilation && !on; ++dy)
                    for (int dx = -mp.dilation; dx <= mp.dilation && !on; ++dx) {
                        const int yy = y + dy, xx = x + dx;
                        if (yy >= 0 && yy < h && xx >= 0 && xx < w && base[yy * w + xx]) on = true;
                    }
                dilated[y * w + x] = on ? 1 : 0;
            }
    } else {
        for (int p = 0; p < length; ++p) {
            bool on = false;
            for (int d = -mp.dilation; d <= mp.dilation && !on; ++d) {
                const int q = p + d;
                if (q >= 0 && q < length && base[q]) on = true;
            }
            dilated[p] = on ? 1 : 0;
        }
    }
    return dilated;
}

inline double scalar_parent_sum(const CausalGraph& g, int var_idx, const Assignment& row,
                                const std::vector<double>& weights, double bias) {
    const auto& parents = g.parents(var_idx);
    if (weights.size() != parents.size())
        throw InvalidSpec("weight count does not match parent count for '" +
                          g.variable(var_idx).name + "'");
    double acc = bias;
    for (std::size_t k = 0; k < parents.size(); ++k) acc += weights[k] * row[parents[k]].scalar();
    return acc;
}

inline double sigmoid(double z) {
    if (z >= 0) {
        const double e = std::exp(-z);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

inline double normal_log_pdf(double x, double mu, double sigma) {
    static constexpr double kLogSqrt2Pi = 0.91893853320467274178;
    const double z = (x - mu) / sigma;
    return -0.5 * z * z - std::log(sigma) - kLogSqrt2Pi;
}

/// Log density of N(mean, pixel_sigma^2 I + common_sigma^2 11^T), evaluated
/// through the mean/residual decomposition (Sherman-Morrison form).
inline double grid_gaussian_log_pdf(const Grid& x, const std::vector<double>& mean,
                                    double pixel_sigma, double common_sigma) {
    static constexpr double kLog2Pi = 1.8378770664093454836;
    const int length = static_cast<int>(x.size());
    double mbar = 0.0;
    for (int p = 0; p < length; ++p) mbar += x[p] - mean[p];
    mbar /= length;
    double rss = 0.0;
    for (int p = 0; p < length; ++p) {
        const double r = (x[p] - mean[p]) - mbar;
        rss += r * r;
    }
    const double s2 = pixel_sigma * pixel_sigma;
    const double mean_var = s2 + length * common_sigma * common_sigma;
    return -0.5 * ((length - 1) * (kLog2Pi + std::log(s2)) + (kLog2Pi + std::log(mean_var)) +
                   rss / s2 + length * mbar * mbar / mean_var);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Environment validation
// ---------------------------------------------------------------------------

/// Checks that an environment provides a compatible, normalized spec for
/// every mechanism of the graph.
inline void validate_environment(const CausalGraph& g, const Environment& env) {
    if (static_cast<int>(env.specs.size()) != g.n())
        throw InvalidSpec("environment '" + env.label + "' must define every mechanism");
    for (MechanismId m = 0; m < g.n(); ++m) {
        const int v = g.mechanism_variable(m);
        const Variable& var = g.variable(v);
        const int configs = detail::parent_config_count(g, v);
        const std::string where = "mechanism of '" + var.name + "' in '" + env.label + "'";

        std::visit(
            [&](const auto& spec) {
                using T = std::decay_t<decltype(spec)>;
                if constexpr (std::is_same_v<T, DiscreteCpt>) {
                    if (!var.kind.is_discrete()) throw InvalidSpec(where + ": child not discrete");
                    for (int p : g.parents(v))
                        if (!g.variable(p).kind.is_discrete())
                            throw InvalidSpec(where + ": CPT parents must be discrete");
                    if (static_cast<int>(spec.table.size()) != configs)
                        throw InvalidSpec(where + ": CPT needs one row per parent config");
                    for (const auto& dist : spec.table) {
                        if (static_cast<int>(dist.size()) != var.kind.cardinality)
                            throw InvalidSpec(where + ": CPT row width != cardinality");
                        double total = 0.0;
                        for (double p : dist) {
                            if (p < 0.0) throw InvalidSpec(where + ": negative CPT entry");
                            total += p;
                        }
                        if (std::abs(total - 1.0) > 1e-9)
                            throw InvalidSpec(where + ": CPT row does not sum to 1");
                    }
                } else if constexpr (std::is_same_v<T, LinearGaussian>) {
                    if (!(var.kind.type == VarType::continuous && var.kind.length == 1))
                        throw InvalidSpec(where + ": child must be continuous scalar");
                    if (spec.sigma <= 0.0) throw InvalidSpec(where + ": sigma must be > 0");
                    if (spec.weights.size() != g.parents(v).size())
                        throw InvalidSpec(where + ": one weight per parent required");
                    for (int p : g.parents(v))
                        if (!g.variable(p).kind.is_scalar())
                            throw InvalidSpec(where + ": parents must be scalar");
                } else if constexpr (std::is_same_v<T, BernoulliLogit>) {
                    if (!(var.kind.is_discrete() && var.kind.cardinality == 2))
                        throw InvalidSpec(where + ": child must be binary");
                    if (spec.weights.size() != g.parents(v).size())
                        throw InvalidSpec(where + ": one weight per parent required");
                    for (int p : g.parents(v))
                        if (!g.variable(p).kind.is_scalar())
                            throw InvalidSpec(where + ": parents must be scalar");
                } else if constexpr (std::is_same_v<T, MaskThreshold>) {
                    if (var.kind.type != VarType::mask)
                        throw InvalidSpec(where + ": child must be a mask");
                    const int vp = detail::vector_parent(g, v);
                    if (g.variable(vp).kind.length != var.kind.length)
                        throw InvalidSpec(where + ": vector parent length mismatch");
                    if (static_cast<int>(spec.params.size()) != configs)
                        throw InvalidSpec(where + ": one parameter set per parent config");
                    if (spec.grid_width > 0 && var.kind.length % spec.grid_width != 0)
                        throw InvalidSpec(where + ": grid width does not divide mask length");
                    for (const auto& mp : spec.params) {
                        if (mp.flip_rate < 0.0 || mp.flip_rate > 1.0)
                            throw InvalidSpec(where + ": flip rate outside [0,1]");
                        if (mp.dilation < 0) throw InvalidSpec(where + ": negative dilation");
                    }
                } else if constexpr (std::is_same_v<T, GridGaussian>) {
                    if (!(var.kind.type == VarType::continuous && var.kind.length > 1))
                        throw InvalidSpec(where + ": child must be a continuous grid");
                    for (int p : g.parents(v))
                        if (!g.variable(p).kind.is_discrete())
                            throw InvalidSpec(where + ": grid parents must be discrete");
                    if (static_cast<int>(spec.means.size()) != configs ||
                        static_cast<int>(spec.pixel_sigma.size()) != configs ||
                        static_cast<int>(spec.common_sigma.size()) != configs)
                        throw InvalidSpec(where + ": one (mean, sigma) set per parent config");
                    for (const auto& mean : spec.means)
                        if (static_cast<int>(mean.size()) != var.kind.length)
                            throw InvalidSpec(where + ": mean length mismatch");
                    for (double s : spec.pixel_sigma)
                        if (s <= 0.0) throw InvalidSpec(where + ": pixel sigma must be > 0");
                    for (double s : spec.common_sigma)
                        if (s < 0.0) throw InvalidSpec(where + ": common sigma must be >= 0");
                }
            },
            env.specs[m]);
    }
}

// ---------------------------------------------------------------------------
// Environment selection (the mixed distribution P_I)
// ---------------------------------------------------------------------------

/// Maps each mechanism to one of the two environments. pick[m] == 1 means the
/// mechanism is intervened on (deploy); 0 keeps the training conditional.
struct EnvironmentSelection {
    std::vector<int> pick;
    std::string train_label;
    std::string deploy_label;

    bool intervened(MechanismId m) const { return pick.at(m) == 1; }

    std::string descriptor(const CausalGraph& g) const {
        bool any = false, all = true;
        for (int p : pick) {
            any = any || p;
            all = all && p;
        }
        if (!any) return train_label;
        if (all) return deploy_label;
        std::string out = "mixed[";
        bool first = true;
        for (MechanismId m = 0; m < static_cast<int>(pick.size()); ++m) {
            if (!pick[m]) continue;
            if (!first) out += ",";
            out += g.variable(g.mechanism_variable(m)).name;
            first = false;
        }
        return out + "]";
    }
};

/// Builds the selection realizing P_I: mechanisms in I take the deployment
/// conditional, the rest keep the training one.
inline EnvironmentSelection mixed_selection(const std::vector<MechanismId>& intervened,
                                            const CausalGraph& g, const Environment& train,
                                            const Environment& deploy) {
    EnvironmentSelection sel;
    sel.pick.assign(g.n(), 0);
    sel.train_label = train.label;
    sel.deploy_label = deploy.label;
    for (MechanismId m : intervened) {
        if (m < 0 || m >= g.n())
            throw UnknownMechanism("mechanism index " + std::to_string(m) + " not declared");
        sel.pick[m] = 1;
    }
    return sel;
}

/// A causal graph bound to two environments and a selection between them.
struct Scm {
    const CausalGraph* graph;
    const Environment* train;
    const Environment* deploy;
    EnvironmentSelection selection;

    const MechanismSpec& spec_for(MechanismId m) const {
        return selection.intervened(m) ? deploy->specs[m] : train->specs[m];
    }
};

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

namespace detail {

inline Value sample_mechanism(const CausalGraph& g, int var_idx, const MechanismSpec& spec,
                              const Assignment& row, SubstreamRng& rng) {
    const VarKind& kind = g.variable(var_idx).kind;
    return std::visit(
        [&](const auto& s) -> Value {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, DiscreteCpt>) {
                const auto& dist = s.table[parent_config_of(g, var_idx, row)];
                const double u = rng.next_uniform();
                double acc = 0.0;
                for (std::size_t v = 0; v < dist.size(); ++v) {
                    acc += dist[v];
                    if (u < acc) return Value(static_cast<std::int64_t>(v));
                }
                return Value(static_cast<std::int64_t>(dist.size() - 1));
            } else if constexpr (std::is_same_v<T, LinearGaussian>) {
                const double mu = scalar_parent_sum(g, var_idx, row, s.weights, s.bias);
                return Value(mu + s.sigma * rng.next_normal());
            } else if constexpr (std::is_same_v<T, BernoulliLogit>) {
                const double p =
                    sigmoid(scalar_parent_sum(g, var_idx, row, s.weights, s.bias));
                return Value(static_cast<std::int64_t>(rng.next_bernoulli(p) ? 1 : 0));
            } else if constexpr (std::is_same_v<T, GridGaussian>) {
                const int config = parent_config_of(g, var_idx, row);
                const auto& mean = s.means[config];
                const double common = s.common_sigma[config] * rng.next_normal();
                Grid x(kind.length);
                for (int p = 0; p < kind.length; ++p)
                    x[p] = mean[p] + common + s.pixel_sigma[config] * rng.next_normal();
                return Value(std::move(x));
            } else {  // MaskThreshold
                const int config = parent_config_of(g, var_idx, row);
                const MaskParams& mp = s.params[config];
                const int vp = vector_parent(g, var_idx);
                Mask mask = mask_base(row[vp], kind.length, mp, s.grid_width);
                for (int p = 0; p < kind.length; ++p)
                    if (rng.next_bernoulli(mp.flip_rate)) mask[p] ^= 1;
                return Value(std::move(mask));
            }
        },
        spec);
}

}  // namespace detail

/// Draws n i.i.d. rows ancestrally in topological order. Deterministic given
/// the seed; each (row, variable) pair has its own counter-based substream,
/// so rows can be generated in any order or in parallel with identical
/// results.
inline Dataset sample(const Scm& scm, std::size_t n, std::uint64_t seed) {
    const CausalGraph& g = *scm.graph;
    Dataset data;
    data.origin = scm.selection.descriptor(g);
    data.seed = seed;
    data.rows.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
        Assignment row(g.n());
        for (MechanismId m = 0; m < g.n(); ++m) {
            const int v = g.mechanism_variable(m);
            SubstreamRng rng(seed, r, fnv1a(g.variable(v).name));
            row[v] = detail::sample_mechanism(g, v, scm.spec_for(m), row, rng);
        }
        data.rows[r] = std::move(row);
    }
    return data;
}

// ---------------------------------------------------------------------------
// Exact joint (oracle for fully discrete SCMs)
// ---------------------------------------------------------------------------

/// Dense probability table over all assignments of a fully discrete SCM.
/// Assignments are mixed-radix codes over variables in declaration order,
/// last variable varying fastest.
struct JointTable {
    std::vector<int> cardinalities;  // per declaration index
    std::vector<double> prob;

    std::size_t encode(const Assignment& row) const {
        std::size_t idx = 0;
        for (std::size_t v = 0; v < cardinalities.size(); ++v)
            idx = idx * cardinalities[v] + static_cast<std::size_t>(row[v].code());
        return idx;
    }

    Assignment decode(std::size_t idx) const {
        Assignment row(cardinalities.size());
        for (int v = static_cast<int>(cardinalities.size()) - 1; v >= 0; --v) {
            row[v] = Value(static_cast<std::int64_t>(idx % cardinalities[v]));
            idx /= cardinalities[v];
        }
        return row;
    }

    double probability(const Assignment& row) const { return prob[encode(row)]; }
};

namespace detail {

inline double discrete_mass(const CausalGraph& g, int var_idx, const MechanismSpec& spec,
                            const Assignment& row) {
    return std::visit(
        [&](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, DiscreteCpt>) {
                return s.table[parent_config_of(g, var_idx, row)][row[var_idx].code()];
            } else if constexpr (std::is_same_v<T, BernoulliLogit>) {
                const double p = sigmoid(scalar_parent_sum(g, var_idx, row, s.weights, s.bias));
                return row[var_idx].code() == 1 ? p : 1.0 - p;
            } else {
                throw NonDiscreteVariable("mechanism of '" + g.variable(var_idx).name +
                                          "' has no discrete mass");
            }
        },
        spec);
}

}  // namespace detail

constexpr std::size_t kMaxJointStates = 10'000'000;

/// Enumerates the full joint of a discrete SCM under the given selection.
inline JointTable exact_joint(const Scm& scm) {
    const CausalGraph& g = *scm.graph;
    JointTable table;
    std::size_t states = 1;
    for (int v = 0; v < g.n(); ++v) {
        const VarKind& kind = g.variable(v).kind;
        if (!kind.is_discrete())
            throw NonDiscreteVariable("variable '" + g.variable(v).name +
                                      "' is not discrete; exact joint unavailable");
        table.cardinalities.push_back(kind.cardinality);
        states *= static_cast<std::size_t>(kind.cardinality);
        if (states > kMaxJointStates)
            throw StateSpaceTooLarge("joint state space exceeds " +
                                     std::to_string(kMaxJointStates));
    }
    table.prob.resize(states);
    for (std::size_t idx = 0; idx < states; ++idx) {
        const Assignment row = table.decode(idx);
        double p = 1.0;
        for (MechanismId m = 0; m < g.n() && p > 0.0; ++m)
            p *= detail::discrete_mass(g, g.mechanism_variable(m), scm.spec_for(m), row);
        table.prob[idx] = p;
    }
    return table;
}

// ---------------------------------------------------------------------------
// Exact per-mechanism density ratios (oracle for importance weights)
// ---------------------------------------------------------------------------

namespace detail {

/// Log mass/density of one mechanism at a row; -inf encodes zero mass.
inline double mechanism_log_density(const CausalGraph& g, int var_idx, const MechanismSpec& spec,
                                    const Assignment& row) {
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    return std::visit(
        [&](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, DiscreteCpt> || std::is_same_v<T, BernoulliLogit>) {
                const double p = discrete_mass(g, var_idx, spec, row);
                return p > 0.0 ? std::log(p) : kNegInf;
            } else if constexpr (std::is_same_v<T, LinearGaussian>) {
                const double mu = scalar_parent_sum(g, var_idx, row, s.weights, s.bias);
                return normal_log_pdf(row[var_idx].scalar(), mu, s.sigma);
            } else if constexpr (std::is_same_v<T, GridGaussian>) {
                const int config = parent_config_of(g, var_idx, row);
                return grid_gaussian_log_pdf(row[var_idx].grid(), s.means[config],
                                             s.pixel_sigma[config], s.common_sigma[config]);
            } else {  // MaskThreshold
                const int config = parent_config_of(g, var_idx, row);
                const MaskParams& mp = s.params[config];
                const int vp = vector_parent(g, var_idx);
                const int length = g.variable(var_idx).kind.length;
                const Mask base = mask_base(row[vp], length, mp, s.grid_width);
                const Mask& actual = row[var_idx].mask();
                int mismatches = 0;
                for (int p = 0; p < length; ++p) mismatches += base[p] != actual[p];
                if (mp.flip_rate <= 0.0) return mismatches == 0 ? 0.0 : kNegInf;
                if (mp.flip_rate >= 1.0) return mismatches == length ? 0.0 : kNegInf;
                return mismatches * std::log(mp.flip_rate) +
                       (length - mismatches) * std::log1p(-mp.flip_rate);
            }
        },
        spec);
}

}  // namespace detail

/// Exact log of the deploy/train conditional density ratio of mechanism m at
/// a row. Raises ZeroTrainDensity when the row has zero training density (the
/// importance weight is undefined there); returns -inf when only the deploy
/// density vanishes (the row simply gets weight zero).
inline double true_log_ratio(const CausalGraph& g, const Environment& train,
                             const Environment& deploy, MechanismId m, const Assignment& row) {
    if (m < 0 || m >= g.n())
        throw UnknownMechanism("mechanism index " + std::to_string(m) + " not declared");
    const int v = g.mechanism_variable(m);
    const double log_tr = detail::mechanism_log_density(g, v, train.specs[m], row);
    if (std::isinf(log_tr) && log_tr < 0)
        throw ZeroTrainDensity("support violation: training density of mechanism '" +
                               g.mechanism_label(m) + "' is zero at this row");
    const double log_dep = detail::mechanism_log_density(g, v, deploy.specs[m], row);
    return log_dep - log_tr;
}

}  // namespace mechshift

#endif

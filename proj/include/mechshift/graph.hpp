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

#ifndef MECHSHIFT_GRAPH_HPP
#define MECHSHIFT_GRAPH_HPP

#include <algorithm>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mechshift/errors.hpp"

namespace mechshift {

/// Shape of a variable's value space.
enum class VarType { discrete, continuous, mask };

struct VarKind {
    VarType type = VarType::continuous;
    int cardinality = 0;  // discrete only, >= 2
    int length = 1;       // continuous: vector length (1 = scalar); mask: pixel count

    static VarKind make_discrete(int cardinality) { return {VarType::discrete, cardinality, 1}; }
    static VarKind make_continuous(int length = 1) { return {VarType::continuous, 0, length}; }
    static VarKind make_mask(int length) { return {VarType::mask, 0, length}; }

    bool is_discrete() const { return type == VarType::discrete; }
    bool is_scalar() const { return type != VarType::mask && length == 1; }
    bool is_vector() const { return type == VarType::mask || length > 1; }

    bool operator==(const VarKind&) const = default;
};

struct Variable {
    std::string name;
    VarKind kind;
};

/// Index of a mechanism; bijective with variables via topological position.
using MechanismId = int;

/// Directed acyclic graph over named variables. One mechanism per variable,
/// P(V) = prod_i P(V_i | PA_i). Immutable after construction, safe to share
/// across threads.
class CausalGraph {
public:
    /// Validates names, edges and acyclicity. Parent sets are kept sorted by
    /// declaration index so that parent-dependent tables have a stable layout.
    static CausalGraph build(std::vector<Variable> variables,
                             const std::vector<std::pair<std::string, std::string>>& edges) {
        CausalGraph g;
        g.vars_ = std::move(variables);
        const int n = static_cast<int>(g.vars_.size());
        for (int i = 0; i < n; ++i) {
            const Variable& v = g.vars_[i];
            if (g.index_.count(v.name))
                throw DuplicateName("duplicate variable name '" + v.name + "'");
            if (v.kind.type == VarType::discrete && v.kind.cardinality < 2)
                throw InvalidSpec("discrete variable '" + v.name + "' needs cardinality >= 2");
            if (v.kind.type != VarType::discrete && v.kind.length < 1)
                throw InvalidSpec("variable '" + v.name + "' needs length >= 1");
            g.index_[v.name] = i;
        }
        g.parents_.assign(n, {});
        for (const auto& [parent, child] : edges) {
            const int p = g.index_of(parent);
            const int c = g.index_of(child);
            if (std::find(g.parents_[c].begin(), g.parents_[c].end(), p) == g.parents_[c].end())
                g.parents_[c].push_back(p);
        }
        for (auto& ps : g.parents_) std::sort(ps.begin(), ps.end());
        g.topo_ = g.compute_topological_order();
        g.mech_of_.assign(n, -1);
        for (int m = 0; m < n; ++m) g.mech_of_[g.topo_[m]] = m;
        return g;
    }

    int n() const { return static_cast<int>(vars_.size()); }

    const Variable& variable(int var_idx) const {
        check_var(var_idx);
        return vars_[var_idx];
    }

    int index_of(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw UnknownVariable("unknown variable '" + name + "'");
        return it->second;
    }

    bool has_variable(const std::string& name) const { return index_.count(name) > 0; }

    const std::vector<int>& parents(int var_idx) const {
        check_var(var_idx);
        return parents_[var_idx];
    }

    /// Variable indices, every variable after all of its parents; ties broken
    /// by declaration order.
    const std::vector<int>& topological_order() const { return topo_; }

    /// Variable owned by mechanism m (m-th topological position).
    int mechanism_variable(MechanismId m) const {
        if (m < 0 || m >= n()) throw IndexOutOfRange("mechanism index out of range");
        return topo_[m];
    }

    MechanismId mechanism_of(int var_idx) const {
        check_var(var_idx);
        return mech_of_[var_idx];
    }

    MechanismId mechanism_of(const std::string& name) const { return mechanism_of(index_of(name)); }

    /// The (variable, parent set) pair a mechanism's discriminator sees.
    std::pair<int, const std::vector<int>&> mechanism_signature(MechanismId m) const {
        const int v = mechanism_variable(m);
        return {v, parents_[v]};
    }

    std::string mechanism_label(MechanismId m) const {
        const int v = mechanism_variable(m);
        std::string label = "P(" + vars_[v].name;
        if (!parents_[v].empty()) {
            label += "|";
            for (std::size_t k = 0; k < parents_[v].size(); ++k) {
                if (k) label += ",";
                label += vars_[parents_[v][k]].name;
            }
        }
        return label + ")";
    }

private:
    void check_var(int var_idx) const {
        if (var_idx < 0 || var_idx >= n()) throw IndexOutOfRange("variable index out of range");
    }

    // Kahn's algorithm with declaration-order tie break.
    std::vector<int> compute_topological_order() const {
        const int n = static_cast<int>(vars_.size());
        std::vector<int> remaining_parents(n);
        for (int i = 0; i < n; ++i) remaining_parents[i] = static_cast<int>(parents_[i].size());
        std::vector<std::vector<int>> children(n);
        for (int c = 0; c < n; ++c)
            for (int p : parents_[c]) children[p].push_back(c);

        std::vector<int> order;
        order.reserve(n);
        std::vector<bool> placed(n, false);
        for (int round = 0; round < n; ++round) {
            int next = -1;
            for (int i = 0; i < n; ++i) {
                if (!placed[i] && remaining_parents[i] == 0) {
                    next = i;
                    break;
                }
            }
            if (next < 0) {
                for (int i = 0; i < n; ++i)
                    if (!placed[i])
                        throw CycleDetected("graph has a cycle involving '" + vars_[i].name + "'");
            }
            placed[next] = true;
            order.push_back(next);
            for (int c : children[next]) --remaining_parents[c];
        }
        return order;
    }

    std::vector<Variable> vars_;
    std::vector<std::vector<int>> parents_;
    std::vector<int> topo_;     // mechanism id -> variable index
    std::vector<int> mech_of_;  // variable index -> mechanism id
    std::unordered_map<std::string, int> index_;
};

}  // namespace mechshift

#endif

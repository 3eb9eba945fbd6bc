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

#ifndef MECHSHIFT_VALUE_HPP
#define MECHSHIFT_VALUE_HPP

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "mechshift/errors.hpp"
#include "mechshift/graph.hpp"

namespace mechshift {

using Mask = std::vector<std::uint8_t>;  // binary pixels
using Grid = std::vector<double>;        // continuous pixels

/// One cell of a dataset row: a categorical code, a scalar, a continuous
/// grid, or a binary mask.
class Value {
public:
    Value() : v_(0.0) {}
    Value(std::int64_t code) : v_(code) {}        // NOLINT(google-explicit-constructor)
    Value(double x) : v_(x) {}                    // NOLINT(google-explicit-constructor)
    Value(Grid grid) : v_(std::move(grid)) {}     // NOLINT(google-explicit-constructor)
    Value(Mask mask) : v_(std::move(mask)) {}     // NOLINT(google-explicit-constructor)

    bool is_code() const { return std::holds_alternative<std::int64_t>(v_); }
    bool is_scalar() const { return std::holds_alternative<double>(v_); }
    bool is_grid() const { return std::holds_alternative<Grid>(v_); }
    bool is_mask() const { return std::holds_alternative<Mask>(v_); }

    std::int64_t code() const {
        if (!is_code()) throw InvalidSpec("value is not a categorical code");
        return std::get<std::int64_t>(v_);
    }
    double scalar() const {
        if (is_code()) return static_cast<double>(std::get<std::int64_t>(v_));
        if (!is_scalar()) throw InvalidSpec("value is not a scalar");
        return std::get<double>(v_);
    }
    const Grid& grid() const {
        if (!is_grid()) throw InvalidSpec("value is not a grid");
        return std::get<Grid>(v_);
    }
    const Mask& mask() const {
        if (!is_mask()) throw InvalidSpec("value is not a mask");
        return std::get<Mask>(v_);
    }

    bool operator==(const Value&) const = default;

private:
    std::variant<std::int64_t, double, Grid, Mask> v_;
};

/// A full assignment of every graph variable, indexed by declaration order.
using Assignment = std::vector<Value>;

namespace detail {

/// Component p of a vector-valued cell; masks read as 0/1 intensities.
inline double pixel_of(const Value& v, int p) {
    if (v.is_grid()) return v.grid()[p];
    if (v.is_mask()) return static_cast<double>(v.mask()[p]);
    throw InvalidSpec("expected a vector-valued parent");
}

}  // namespace detail

/// Rows of variable assignments plus provenance. `origin` is an environment
/// label or a selection descriptor; `seed` is the master seed the rows were
/// drawn with (0 for ingested data).
struct Dataset {
    std::vector<Assignment> rows;
    std::string origin;
    std::uint64_t seed = 0;

    std::size_t size() const { return rows.size(); }
    bool empty() const { return rows.empty(); }
};

/// Checks that every row assigns every variable with a value matching the
/// declared kind. Throws InvalidSpec on the first violation.
inline void validate_dataset(const CausalGraph& graph, const Dataset& data) {
    for (std::size_t r = 0; r < data.rows.size(); ++r) {
        const Assignment& row = data.rows[r];
        if (static_cast<int>(row.size()) != graph.n())
            throw InvalidSpec("row " + std::to_string(r) + " does not assign every variable");
        for (int v = 0; v < graph.n(); ++v) {
            const VarKind& kind = graph.variable(v).kind;
            const Value& val = row[v];
            const std::string where =
                "row " + std::to_string(r) + ", variable '" + graph.variable(v).name + "'";
            switch (kind.type) {
                case VarType::discrete:
                    if (!val.is_code() || val.code() < 0 || val.code() >= kind.cardinality)
                        throw InvalidSpec(where + ": code outside [0, cardinality)");
                    break;
                case VarType::continuous:
                    if (kind.length == 1) {
                        if (!val.is_scalar()) throw InvalidSpec(where + ": expected scalar");
                    } else if (!val.is_grid() ||
                               static_cast<int>(val.grid().size()) != kind.length) {
                        throw InvalidSpec(where + ": expected grid of length " +
                                          std::to_string(kind.length));
                    }
                    break;
                case VarType::mask:
                    if (!val.is_mask() || static_cast<int>(val.mask().size()) != kind.length)
                        throw InvalidSpec(where + ": expected mask of length " +
                                          std::to_string(kind.length));
                    for (auto px : val.mask())
                        if (px > 1) throw InvalidSpec(where + ": mask pixels must be 0/1");
                    break;
            }
        }
    }
}

}  // namespace mechshift

#endif

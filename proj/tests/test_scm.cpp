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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <random>
#include <vector>

#include "mechshift/scm.hpp"

using namespace mechshift;
using Catch::Matchers::WithinAbs;

namespace {

// Two binary variables, X -> Y, CPTs free.
struct TwoVarScm {
    CausalGraph graph = CausalGraph::build(
        {{"X", VarKind::make_discrete(2)}, {"Y", VarKind::make_discrete(2)}}, {{"X", "Y"}});
    Environment train;
    Environment deploy;

    TwoVarScm(double px1_tr, double py1x0_tr, double py1x1_tr, double px1_dep, double py1x0_dep,
              double py1x1_dep) {
        train.label = "train";
        train.specs = {DiscreteCpt{{{1 - px1_tr, px1_tr}}},
                       DiscreteCpt{{{1 - py1x0_tr, py1x0_tr}, {1 - py1x1_tr, py1x1_tr}}}};
        deploy.label = "deploy";
        deploy.specs = {DiscreteCpt{{{1 - px1_dep, px1_dep}}},
                        DiscreteCpt{{{1 - py1x0_dep, py1x0_dep}, {1 - py1x1_dep, py1x1_dep}}}};
        validate_environment(graph, train);
        validate_environment(graph, deploy);
    }

    Scm scm(const std::vector<MechanismId>& intervened) const {
        return Scm{&graph, &train, &deploy, mixed_selection(intervened, graph, train, deploy)};
    }
};

// Dense multivariate normal log density via Cholesky; independent oracle for
// the common-mode grid Gaussian.
double dense_mvn_log_pdf(const Grid& x, const std::vector<double>& mu,
                         std::vector<std::vector<double>> cov) {
    const int n = static_cast<int>(x.size());
    std::vector<std::vector<double>> chol(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = cov[i][j];
            for (int k = 0; k < j; ++k) s -= chol[i][k] * chol[j][k];
            chol[i][j] = (i == j) ? std::sqrt(s) : s / chol[j][j];
        }
    }
    // solve L z = (x - mu)
    std::vector<double> z(n);
    for (int i = 0; i < n; ++i) {
        double s = x[i] - mu[i];
        for (int k = 0; k < i; ++k) s -= chol[i][k] * z[k];
        z[i] = s / chol[i][i];
    }
    double quad = 0.0, logdet = 0.0;
    for (int i = 0; i < n; ++i) {
        quad += z[i] * z[i];
        logdet += 2.0 * std::log(chol[i][i]);
    }
    return -0.5 * (n * std::log(2.0 * 3.14159265358979323846) + logdet + quad);
}

}  // namespace

TEST_CASE("mixed selection maps intervened mechanisms to deploy") {
    TwoVarScm s(0.3, 0.2, 0.7, 0.5, 0.4, 0.9);
    const auto none = mixed_selection({}, s.graph, s.train, s.deploy);
    CHECK(none.pick == std::vector<int>{0, 0});
    CHECK(none.descriptor(s.graph) == "train");

    const auto all = mixed_selection({0, 1}, s.graph, s.train, s.deploy);
    CHECK(all.pick == std::vector<int>{1, 1});
    CHECK(all.descriptor(s.graph) == "deploy");

    const auto only_y = mixed_selection({s.graph.mechanism_of("Y")}, s.graph, s.train, s.deploy);
    CHECK(only_y.pick == std::vector<int>{0, 1});
    CHECK(only_y.descriptor(s.graph) == "mixed[Y]");

    CHECK_THROWS_AS(mixed_selection({5}, s.graph, s.train, s.deploy), UnknownMechanism);
}

TEST_CASE("degenerate Bernoulli root always samples 1") {
    CausalGraph g = CausalGraph::build({{"B", VarKind::make_discrete(2)}}, {});
    Environment env{"train", {DiscreteCpt{{{0.0, 1.0}}}}};
    validate_environment(g, env);
    Scm scm{&g, &env, &env, mixed_selection({}, g, env, env)};
    const Dataset data = sample(scm, 200, 7);
    for (const auto& row : data.rows) REQUIRE(row[0].code() == 1);
}

TEST_CASE("sampling is bit-identical for identical seeds") {
    TwoVarScm s(0.3, 0.2, 0.7, 0.5, 0.4, 0.9);
    const Scm scm = s.scm({0});
    const Dataset a = sample(scm, 500, 42);
    const Dataset b = sample(scm, 500, 42);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t r = 0; r < a.rows.size(); ++r) REQUIRE(a.rows[r] == b.rows[r]);
    const Dataset c = sample(scm, 500, 43);
    bool all_equal = true;
    for (std::size_t r = 0; r < a.rows.size(); ++r) all_equal = all_equal && a.rows[r] == c.rows[r];
    CHECK_FALSE(all_equal);
}

TEST_CASE("adding a variable does not perturb existing draws") {
    CausalGraph g1 = CausalGraph::build({{"D", VarKind::make_discrete(2)}}, {});
    Environment e1{"train", {DiscreteCpt{{{0.4, 0.6}}}}};
    Scm scm1{&g1, &e1, &e1, mixed_selection({}, g1, e1, e1)};

    CausalGraph g2 =
        CausalGraph::build({{"D", VarKind::make_discrete(2)}, {"E", VarKind::make_discrete(2)}}, {});
    Environment e2{"train", {DiscreteCpt{{{0.4, 0.6}}}, DiscreteCpt{{{0.5, 0.5}}}}};
    Scm scm2{&g2, &e2, &e2, mixed_selection({}, g2, e2, e2)};

    const Dataset a = sample(scm1, 300, 99);
    const Dataset b = sample(scm2, 300, 99);
    for (std::size_t r = 0; r < a.rows.size(); ++r)
        REQUIRE(a.rows[r][0].code() == b.rows[r][0].code());
}

TEST_CASE("empirical joint matches exact joint in total variation") {
    TwoVarScm s(0.3, 0.2, 0.7, 0.5, 0.4, 0.9);
    const Scm scm = s.scm({});
    const std::size_t n = 100000;
    const Dataset data = sample(scm, n, 13);
    const JointTable joint = exact_joint(scm);

    std::vector<double> freq(joint.prob.size(), 0.0);
    for (const auto& row : data.rows) freq[joint.encode(row)] += 1.0 / n;
    double tv = 0.0;
    for (std::size_t i = 0; i < freq.size(); ++i) tv += std::abs(freq[i] - joint.prob[i]);
    tv /= 2.0;
    CHECK(tv < 0.01);
    CHECK(tv < 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("exact joint of independent fair coins is uniform") {
    CausalGraph g = CausalGraph::build(
        {{"A", VarKind::make_discrete(2)}, {"B", VarKind::make_discrete(2)}}, {});
    Environment env{"train", {DiscreteCpt{{{0.5, 0.5}}}, DiscreteCpt{{{0.5, 0.5}}}}};
    Scm scm{&g, &env, &env, mixed_selection({}, g, env, env)};
    const JointTable joint = exact_joint(scm);
    REQUIRE(joint.prob.size() == 4);
    for (double p : joint.prob) CHECK_THAT(p, WithinAbs(0.25, 1e-15));
}

TEST_CASE("exact joint of a chain equals the hand product") {
    TwoVarScm s(0.3, 0.2, 0.7, 0.5, 0.4, 0.9);
    const JointTable joint = exact_joint(s.scm({}));
    // index = x * 2 + y
    CHECK_THAT(joint.prob[0], WithinAbs(0.7 * 0.8, 1e-15));
    CHECK_THAT(joint.prob[1], WithinAbs(0.7 * 0.2, 1e-15));
    CHECK_THAT(joint.prob[2], WithinAbs(0.3 * 0.3, 1e-15));
    CHECK_THAT(joint.prob[3], WithinAbs(0.3 * 0.7, 1e-15));
    double total = 0.0;
    for (double p : joint.prob) total += p;
    CHECK_THAT(total, WithinAbs(1.0, 1e-9));
}

TEST_CASE("mixed-selection joint swaps exactly the intervened row") {
    TwoVarScm s(0.3, 0.2, 0.7, 0.5, 0.4, 0.9);
    const JointTable joint = exact_joint(s.scm({s.graph.mechanism_of("X")}));
    // deploy P(X), train P(Y|X)
    CHECK_THAT(joint.prob[0], WithinAbs(0.5 * 0.8, 1e-15));
    CHECK_THAT(joint.prob[1], WithinAbs(0.5 * 0.2, 1e-15));
    CHECK_THAT(joint.prob[2], WithinAbs(0.5 * 0.3, 1e-15));
    CHECK_THAT(joint.prob[3], WithinAbs(0.5 * 0.7, 1e-15));
}

TEST_CASE("selection endpoints reproduce the pure-environment joints") {
    TwoVarScm s(0.3, 0.2, 0.7, 0.5, 0.4, 0.9);
    const JointTable empty_sel = exact_joint(s.scm({}));
    Scm train_only{&s.graph, &s.train, &s.train, mixed_selection({}, s.graph, s.train, s.train)};
    const JointTable pure_train = exact_joint(train_only);
    for (std::size_t i = 0; i < empty_sel.prob.size(); ++i)
        CHECK_THAT(empty_sel.prob[i], WithinAbs(pure_train.prob[i], 1e-12));

    const JointTable full_sel = exact_joint(s.scm({0, 1}));
    Scm dep_only{&s.graph, &s.deploy, &s.deploy, mixed_selection({}, s.graph, s.deploy, s.deploy)};
    const JointTable pure_dep = exact_joint(dep_only);
    for (std::size_t i = 0; i < full_sel.prob.size(); ++i)
        CHECK_THAT(full_sel.prob[i], WithinAbs(pure_dep.prob[i], 1e-12));
}

TEST_CASE("exact joint rejects non-discrete variables and huge state spaces") {
    CausalGraph g = CausalGraph::build({{"X", VarKind::make_continuous()}}, {});
    Environment env{"train", {LinearGaussian{{}, 0.0, 1.0}}};
    Scm scm{&g, &env, &env, mixed_selection({}, g, env, env)};
    CHECK_THROWS_AS(exact_joint(scm), NonDiscreteVariable);

    std::vector<Variable> vars;
    std::vector<MechanismSpec> specs;
    for (int i = 0; i < 9; ++i) {
        vars.push_back({"v" + std::to_string(i), VarKind::make_discrete(10)});
        specs.push_back(DiscreteCpt{{std::vector<double>(10, 0.1)}});
    }
    CausalGraph big = CausalGraph::build(vars, {});
    Environment benv{"train", specs};
    Scm bscm{&big, &benv, &benv, mixed_selection({}, big, benv, benv)};
    CHECK_THROWS_AS(exact_joint(bscm), StateSpaceTooLarge);
}

TEST_CASE("identical specs give zero log ratio for every row") {
    TwoVarScm s(0.3, 0.2, 0.7, 0.3, 0.2, 0.7);
    const Dataset data = sample(s.scm({}), 50, 5);
    for (const auto& row : data.rows) {
        CHECK_THAT(true_log_ratio(s.graph, s.train, s.deploy, 0, row), WithinAbs(0.0, 1e-12));
        CHECK_THAT(true_log_ratio(s.graph, s.train, s.deploy, 1, row), WithinAbs(0.0, 1e-12));
    }
}

TEST_CASE("Gaussian mean shift log ratio vanishes at the midpoint") {
    CausalGraph g = CausalGraph::build({{"X", VarKind::make_continuous()}}, {});
    Environment train{"train", {LinearGaussian{{}, 0.0, 1.0}}};
    Environment deploy{"deploy", {LinearGaussian{{}, 1.0, 1.0}}};
    Assignment row{Value(0.5)};
    CHECK_THAT(true_log_ratio(g, train, deploy, 0, row), WithinAbs(0.0, 1e-12));
    // off the midpoint: (v*(mu_dep - mu_tr) + (mu_tr^2 - mu_dep^2)/2) / sigma^2
    Assignment row2{Value(1.5)};
    CHECK_THAT(true_log_ratio(g, train, deploy, 0, row2), WithinAbs(1.5 - 0.5, 1e-12));
}

TEST_CASE("CPT mass ratio is the direct log ratio") {
    TwoVarScm s(0.3, 0.4, 0.4, 0.3, 0.8, 0.8);
    Assignment row{Value(std::int64_t{0}), Value(std::int64_t{1})};
    CHECK_THAT(true_log_ratio(s.graph, s.train, s.deploy, s.graph.mechanism_of("Y"), row),
               WithinAbs(std::log(2.0), 1e-12));
}

TEST_CASE("support violations raise; vanishing deploy mass gives -inf") {
    TwoVarScm s(0.3, 0.0, 0.5, 0.3, 0.5, 0.5);
    Assignment row{Value(std::int64_t{0}), Value(std::int64_t{1})};  // train mass 0 at y=1|x=0
    CHECK_THROWS_AS(true_log_ratio(s.graph, s.train, s.deploy, s.graph.mechanism_of("Y"), row),
                    ZeroTrainDensity);

    TwoVarScm t(0.3, 0.5, 0.5, 0.3, 0.0, 0.5);
    const double lr = true_log_ratio(t.graph, t.train, t.deploy, t.graph.mechanism_of("Y"), row);
    CHECK(std::isinf(lr));
    CHECK(lr < 0);
}

TEST_CASE("log ratios sum to the log joint ratio over any subset") {
    std::mt19937_64 rng(777);
    auto unif = [&](double lo, double hi) {
        return lo + (hi - lo) * std::generate_canonical<double, 53>(rng);
    };
    for (int trial = 0; trial < 20; ++trial) {
        TwoVarScm s(unif(0.1, 0.9), unif(0.1, 0.9), unif(0.1, 0.9), unif(0.1, 0.9),
                    unif(0.1, 0.9), unif(0.1, 0.9));
        const std::vector<std::vector<MechanismId>> subsets = {{}, {0}, {1}, {0, 1}};
        const JointTable base = exact_joint(s.scm({}));
        const Dataset data = sample(s.scm({}), 25, trial);
        for (const auto& subset : subsets) {
            const JointTable mixed = exact_joint(s.scm(subset));
            for (const auto& row : data.rows) {
                double lr_sum = 0.0;
                for (MechanismId m : subset)
                    lr_sum += true_log_ratio(s.graph, s.train, s.deploy, m, row);
                const double expected =
                    std::log(mixed.probability(row)) - std::log(base.probability(row));
                REQUIRE_THAT(lr_sum, WithinAbs(expected, 1e-9));
            }
        }
    }
}

TEST_CASE("grid Gaussian density matches a dense Cholesky evaluation") {
    const int length = 4;
    CausalGraph g = CausalGraph::build(
        {{"C", VarKind::make_discrete(2)}, {"X", VarKind::make_continuous(length)}},
        {{"C", "X"}});
    GridGaussian tr;
    tr.means = {{0.0, 0.1, 0.2, 0.3}, {1.0, 1.1, 1.2, 1.3}};
    tr.pixel_sigma = {0.5, 0.7};
    tr.common_sigma = {0.0, 0.4};
    GridGaussian dep;
    dep.means = {{0.2, 0.1, 0.0, -0.1}, {0.9, 1.0, 1.1, 1.2}};
    dep.pixel_sigma = {0.6, 0.65};
    dep.common_sigma = {0.3, 0.5};
    Environment train{"train", {DiscreteCpt{{{0.5, 0.5}}}, tr}};
    Environment deploy{"deploy", {DiscreteCpt{{{0.5, 0.5}}}, dep}};
    validate_environment(g, train);
    validate_environment(g, deploy);

    auto covariance = [&](double sigma, double common) {
        std::vector<std::vector<double>> cov(length, std::vector<double>(length, common * common));
        for (int i = 0; i < length; ++i) cov[i][i] += sigma * sigma;
        return cov;
    };

    std::mt19937_64 rng(4242);
    std::normal_distribution<double> nd(0.6, 0.8);
    for (int trial = 0; trial < 10; ++trial) {
        const std::int64_t c = static_cast<std::int64_t>(trial % 2);
        Grid x(length);
        for (double& v : x) v = nd(rng);
        Assignment row{Value(c), Value(x)};
        const double got = true_log_ratio(g, train, deploy, g.mechanism_of("X"), row);
        const double want =
            dense_mvn_log_pdf(x, dep.means[c], covariance(dep.pixel_sigma[c], dep.common_sigma[c])) -
            dense_mvn_log_pdf(x, tr.means[c], covariance(tr.pixel_sigma[c], tr.common_sigma[c]));
        REQUIRE_THAT(got, WithinAbs(want, 1e-9));
    }
}

TEST_CASE("mask threshold ratio counts flips against each base mask") {
    CausalGraph g = CausalGraph::build(
        {{"X", VarKind::make_continuous(4)}, {"Y", VarKind::make_mask(4)}}, {{"X", "Y"}});
    Environment train{"train",
                      {GridGaussian{{{0, 0, 0, 0}}, {1.0}, {0.0}},
                       MaskThreshold{0, {{1.0, 0, 0.1}}}}};
    Environment deploy{"deploy",
                       {GridGaussian{{{0, 0, 0, 0}}, {1.0}, {0.0}},
                        MaskThreshold{0, {{0.8, 0, 0.2}}}}};
    validate_environment(g, train);
    validate_environment(g, deploy);

    Assignment row{Value(Grid{0.2, 0.9, 1.1, 0.4}), Value(Mask{0, 0, 1, 0})};
    // base(train, thr 1.0) = [0,0,1,0]: 0 mismatches; base(deploy, thr 0.8) = [0,1,1,0]: 1
    const double want = (std::log(0.2) + 3 * std::log(0.8)) - (4 * std::log(0.9));
    CHECK_THAT(true_log_ratio(g, train, deploy, g.mechanism_of("Y"), row), WithinAbs(want, 1e-12));
}

TEST_CASE("masks are bit-exact functions of the parent when flips are off") {
    CausalGraph g = CausalGraph::build(
        {{"X", VarKind::make_continuous(9)}, {"Y", VarKind::make_mask(9)}}, {{"X", "Y"}});
    Environment env{"train",
                    {GridGaussian{{{0, 0, 0, 0, 2, 0, 0, 0, 0}}, {0.5}, {0.1}},
                     MaskThreshold{3, {{1.0, 1, 0.0}}}}};
    validate_environment(g, env);
    Scm scm{&g, &env, &env, mixed_selection({}, g, env, env)};
    const Dataset a = sample(scm, 50, 11);
    const Dataset b = sample(scm, 50, 11);
    for (std::size_t r = 0; r < a.rows.size(); ++r) {
        REQUIRE(a.rows[r][1].mask() == b.rows[r][1].mask());
        // center pixel above threshold dilates to the full 3x3 block exactly
        bool center_on = a.rows[r][0].grid()[4] > 1.0;
        if (center_on)
            for (int p = 0; p < 9; ++p) REQUIRE(a.rows[r][1].mask()[p] == 1);
    }
}

TEST_CASE("dataset validation catches kind mismatches") {
    CausalGraph g = CausalGraph::build(
        {{"D", VarKind::make_discrete(2)}, {"X", VarKind::make_continuous()}}, {{"D", "X"}});
    Dataset good;
    good.rows = {{Value(std::int64_t{1}), Value(0.5)}};
    CHECK_NOTHROW(validate_dataset(g, good));
    Dataset bad;
    bad.rows = {{Value(std::int64_t{3}), Value(0.5)}};
    CHECK_THROWS_AS(validate_dataset(g, bad), InvalidSpec);
    Dataset short_row;
    short_row.rows = {{Value(std::int64_t{1})}};
    CHECK_THROWS_AS(validate_dataset(g, short_row), InvalidSpec);
}

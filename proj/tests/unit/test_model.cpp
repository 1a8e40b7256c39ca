#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "hmmforget/errors.hpp"
#include "hmmforget/model.hpp"
#include "hmmforget/model_io.hpp"
#include "oracles.hpp"

using namespace hmmforget;

namespace {

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<int>(rows.size()), static_cast<int>(rows.begin()->size()));
  int i = 0;
  for (auto& r : rows) {
    int j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

}  // namespace

TEST(BuildModel, SymmetricChainHasUniformStationaryLaw) {
  auto m = build_model(mat({{0.5, 0.5}, {0.5, 0.5}}), mat({{0.3, 0.7}, {0.6, 0.4}}));
  EXPECT_NEAR(m.stationary()(0), 0.5, 1e-12);
  EXPECT_NEAR(m.stationary()(1), 0.5, 1e-12);
}

TEST(BuildModel, TwoStateStationaryByHand) {
  auto m = build_model(mat({{0.9, 0.1}, {0.2, 0.8}}), mat({{1.0}, {1.0}}));
  EXPECT_NEAR(m.stationary()(0), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(m.stationary()(1), 1.0 / 3.0, 1e-12);
  Vector res = m.stationary().transpose() * m.transition() - m.stationary().transpose();
  EXPECT_LT(res.lpNorm<1>(), 1e-12);
}

TEST(BuildModel, RejectsIdentity) {
  EXPECT_THROW(build_model(Matrix::Identity(2, 2), mat({{1.0}, {1.0}})), ReducibleChainError);
}

TEST(BuildModel, RejectsPeriodicChain) {
  EXPECT_THROW(build_model(mat({{0, 1}, {1, 0}}), mat({{1.0}, {1.0}})), PeriodicChainError);
}

TEST(BuildModel, RejectsBadRowsAndShapes) {
  EXPECT_THROW(build_model(mat({{0.5, 0.6}, {0.5, 0.5}}), mat({{1.0}, {1.0}})), RowSumError);
  EXPECT_THROW(build_model(mat({{1.5, -0.5}, {0.5, 0.5}}), mat({{1.0}, {1.0}})),
               NegativeEntryError);
  EXPECT_THROW(build_model(mat({{0.5, 0.5}, {0.5, 0.5}}), mat({{1.0}})), DimensionMismatchError);
  // within the ingest tolerance: accepted and renormalized
  auto m = build_model(mat({{0.5, 0.5 + 5e-10}, {0.5, 0.5}}), mat({{1.0}, {1.0}}));
  EXPECT_NEAR(m.transition().row(0).sum(), 1.0, 1e-15);
}

TEST(BuildModel, RandomModelsSatisfyStationarity) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    auto m = oracle::random_model(rng, 2 + trial % 5, 3, 0.3);
    Vector res = m.stationary().transpose() * m.transition() - m.stationary().transpose();
    EXPECT_LT(res.lpNorm<1>(), 1e-10);
    EXPECT_NEAR(m.stationary().sum(), 1.0, 1e-12);
    EXPECT_TRUE((m.stationary().array() > 0).all());
  }
}

TEST(Clusters, FullCommonSupportGivesWholeStateSpace) {
  auto m = build_model(mat({{0.7, 0.3}, {0.4, 0.6}}), mat({{0.2, 0.8}, {0.5, 0.5}}));
  auto cs = detect_clusters(m);
  ASSERT_EQ(cs.size(), 1u);
  EXPECT_EQ(cs[0].states, (std::vector<int>{0, 1}));
  EXPECT_EQ(cs[0].common_support, (std::vector<int>{0, 1}));
  EXPECT_DOUBLE_EQ(cs[0].eps_lower, 0.2);
  EXPECT_DOUBLE_EQ(cs[0].density_ceiling, 0.8);
}

TEST(Clusters, DisjointSupportsGiveSingletons) {
  auto m = build_model(mat({{0.7, 0.3}, {0.4, 0.6}}), mat({{1, 0}, {0, 1}}));
  auto cs = detect_clusters(m);
  ASSERT_EQ(cs.size(), 2u);
  EXPECT_EQ(cs[0].states, std::vector<int>{0});
  EXPECT_EQ(cs[0].common_support, std::vector<int>{0});
  EXPECT_EQ(cs[1].states, std::vector<int>{1});
  EXPECT_EQ(cs[1].common_support, std::vector<int>{1});
}

TEST(Clusters, OverlappingClustersOfThreeStateModel) {
  auto m = build_model(mat({{0.4, 0.3, 0.3}, {0.3, 0.4, 0.3}, {0.3, 0.3, 0.4}}),
                       mat({{0.5, 0.5, 0}, {0.5, 0.25, 0.25}, {0, 0, 1}}));
  auto cs = detect_clusters(m);
  // state 2 emits none of {0, 1}, so {0, 1} keeps both symbols; {1, 2} share symbol 2
  ASSERT_EQ(cs.size(), 2u);
  EXPECT_EQ(cs[0].states, (std::vector<int>{0, 1}));
  EXPECT_EQ(cs[0].common_support, (std::vector<int>{0, 1}));
  EXPECT_EQ(cs[1].states, (std::vector<int>{1, 2}));
  EXPECT_EQ(cs[1].common_support, std::vector<int>{2});
  auto brute = oracle::clusters(m);
  ASSERT_EQ(brute.size(), cs.size());
}

TEST(Clusters, MatchBruteForceEnumeration) {
  Rng rng(17);
  int nonempty = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int k = 2 + trial % 5, mm = 2 + trial % 4;
    auto m = oracle::random_model(rng, k, mm, 0.2, 0.5);
    auto cs = detect_clusters(m);
    auto brute = oracle::clusters(m);
    ASSERT_EQ(cs.size(), brute.size()) << "trial " << trial;
    for (std::size_t i = 0; i < cs.size(); ++i) {
      auto it = std::find_if(brute.begin(), brute.end(),
                             [&](const auto& b) { return b.states == cs[i].states; });
      ASSERT_NE(it, brute.end());
      EXPECT_EQ(it->symbols, cs[i].common_support);
      // definitional inequalities, exact on the zero side
      for (int j = 0; j < k; ++j) {
        double mass = 0;
        for (int x : cs[i].common_support) mass += m.emit(j, x);
        if (cs[i].contains(j)) EXPECT_GT(mass, 0.0);
        else EXPECT_EQ(mass, 0.0);
      }
      EXPECT_GT(cs[i].eps_lower, 0.0);
    }
    nonempty += !cs.empty();
  }
  EXPECT_GT(nonempty, 100);
}

TEST(AssumptionA, PositiveMatrixHasExponentOne) {
  auto m = build_model(mat({{0.7, 0.3}, {0.4, 0.6}}), mat({{0.2, 0.8}, {0.5, 0.5}}));
  auto c = verify_assumption_a(m, detect_clusters(m).at(0));
  EXPECT_EQ(*c.primitivity_exponent, 1);
  EXPECT_GT(*c.rho, 0.0);
  EXPECT_LT(*c.rho, 1.0);
  EXPECT_NEAR(*c.p_r, 1.0, 1e-12);
}

TEST(AssumptionA, ZeroCornerNeedsSquare) {
  auto m = build_model(mat({{0, 1}, {0.5, 0.5}}), mat({{0.5, 0.5}, {0.5, 0.5}}));
  auto c = verify_assumption_a(m, detect_clusters(m).at(0));
  // block [[0, 1], [0.5, 0.5]] squared is positive
  EXPECT_EQ(*c.primitivity_exponent, 2);
}

TEST(AssumptionA, SubBlockExamplesFromThreeStateChains) {
  // cluster {0, 1} with R = [[0, .5], [.5, .5]]; state 2 is exposed by symbol 1
  auto m = build_model(mat({{0, 0.5, 0.5}, {0.5, 0.5, 0}, {0.5, 0, 0.5}}),
                       mat({{1, 0}, {1, 0}, {0, 1}}));
  auto cs = detect_clusters(m);
  ASSERT_EQ(cs.size(), 2u);
  ASSERT_EQ(cs[0].states, (std::vector<int>{0, 1}));
  EXPECT_EQ(*verify_assumption_a(m, cs[0]).primitivity_exponent, 2);

  // R = [[0, .5], [.5, 0]] is periodic inside the cluster
  auto p = build_model(mat({{0, 0.5, 0.5}, {0.5, 0, 0.5}, {0.4, 0.3, 0.3}}),
                       mat({{1, 0}, {1, 0}, {0, 1}}));
  auto pc = detect_clusters(p);
  ASSERT_EQ(pc.at(0).states, (std::vector<int>{0, 1}));
  EXPECT_THROW(verify_assumption_a(p, pc[0]), NotPrimitiveError);
}

TEST(AssumptionA, ExponentIsMinimal) {
  Rng rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    auto m = oracle::random_model(rng, 2 + trial % 4, 3, 0.45, 0.3);
    for (const auto& c : detect_clusters(m)) {
      Matrix r = cluster_block(m, c);
      try {
        auto e = verify_assumption_a(m, c);
        const int k = *e.primitivity_exponent;
        Matrix pw = Matrix::Identity(r.rows(), r.cols());
        for (int i = 1; i < k; ++i) pw = pw * r;
        if (k > 1) EXPECT_TRUE((pw.array() == 0).any());
        EXPECT_TRUE(((pw * r).array() > 0).all());
      } catch (const NotPrimitiveError&) {
        Matrix pw = r;
        const int cutoff = (static_cast<int>(r.rows()) - 1) * (static_cast<int>(r.rows()) - 1) + 1;
        for (int i = 1; i < cutoff; ++i) pw = pw * r;
        EXPECT_TRUE((pw.array() == 0).any());
      }
    }
  }
}

TEST(PR, OneStepIsStationaryMarginal) {
  auto m = build_model(mat({{0.9, 0.1}, {0.2, 0.8}}), mat({{0.5, 0.5}, {0.3, 0.7}}));
  auto c = detect_clusters(m).at(0);
  c.common_support = {1};
  EXPECT_NEAR(compute_p_r(m, c, 1), 2.0 / 3 * 0.5 + 1.0 / 3 * 0.7, 1e-14);
}

TEST(PR, TwoStateByDynamicProgrammingAndMonteCarlo) {
  // P_0(X_o) = 0.5, P_1(X_o) = 1: symbol 2 is only emitted by state 0
  auto m = build_model(mat({{0.9, 0.1}, {0.2, 0.8}}), mat({{0.25, 0.25, 0.5}, {0.5, 0.5, 0}}));
  Cluster c;
  c.states = {0, 1};
  c.common_support = {0, 1};
  const double dp = compute_p_r(m, c, 2);
  // by hand: pi' D P D 1 with D = diag(.5, 1)
  const double hand = 2.0 / 3 * 0.5 * (0.9 * 0.5 + 0.1) + 1.0 / 3 * (0.2 * 0.5 + 0.8);
  EXPECT_NEAR(dp, hand, 1e-14);
  EXPECT_NEAR(dp, oracle::p_r(m, c.common_support, 2), 1e-14);
  auto mc = oracle::p_r_monte_carlo(m, c.common_support, 2, 1'000'000, 99);
  EXPECT_LT(std::abs(mc.mean - dp), 4 * mc.se);
}

TEST(PR, AgreesWithPathEnumeration) {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    auto m = oracle::random_model(rng, 2 + trial % 3, 3, 0.2, 0.3);
    std::vector<int> xo;
    for (int x = 0; x < 3; ++x)
      if (rng.uniform() < 0.6) xo.push_back(x);
    Cluster c;
    c.common_support = xo;
    for (int r = 1; r <= 4; ++r) {
      EXPECT_NEAR(compute_p_r(m, c, r), oracle::p_r(m, xo, r), 1e-12);
    }
  }
}

TEST(Simulate, ReproducibleAndStationary) {
  auto m = build_model(mat({{0.9, 0.1}, {0.2, 0.8}}), mat({{0.5, 0.5}, {0.1, 0.9}}));
  auto a = simulate(m, 1000, -5, 42);
  auto b = simulate(m, 1000, -5, 42);
  EXPECT_EQ(a.states, b.states);
  EXPECT_EQ(a.observations, b.observations);
  EXPECT_EQ(a.first(), -5);
  EXPECT_EQ(a.last(), 994);

  const std::size_t n = 1'000'000;
  auto p = simulate(m, n, 1, 7);
  double ones = std::count(p.states.begin(), p.states.end(), 1);
  const double pi1 = 1.0 / 3;
  // the chain is autocorrelated: widen the iid band by the integrated
  // autocorrelation factor (1 + lambda) / (1 - lambda), lambda = 0.7
  const double band = 3 * std::sqrt(pi1 * (1 - pi1) / n * (1.7 / 0.3));
  EXPECT_NEAR(ones / n, pi1, band);
}

TEST(Simulate, OneHotEmissionsRevealStates) {
  auto m = build_model(mat({{0.6, 0.4}, {0.3, 0.7}}), mat({{1, 0}, {0, 1}}));
  auto p = simulate(m, 500, 1, 3);
  EXPECT_EQ(p.states, p.observations);
}

TEST(ModelIo, RoundTripAndErrors) {
  auto m = build_model(mat({{0.9, 0.1}, {0.2, 0.8}}), mat({{0.5, 0.5}, {0.1, 0.9}}), "demo");
  auto back = parse_model_json(model_to_json(m));
  EXPECT_EQ(back.name(), "demo");
  EXPECT_LT((back.transition() - m.transition()).norm(), 1e-15);
  EXPECT_LT((back.emission() - m.emission()).norm(), 1e-15);

  try {
    parse_model_json("{\n  \"transition\": [[1, 0],\n  oops }");
    FAIL();
  } catch (const ConfigParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_model_json(R"({"transition": [[0, 1], [1, 0]], "emission": [[1], [1]]})"),
               PeriodicChainError);
  EXPECT_THROW(parse_model_json(R"({"emission": [[1], [1]]})"), ConfigParseError);
  EXPECT_THROW(load_model("/nonexistent/model.json"), IoError);
}

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "racesim/core_game.hpp"

using namespace racesim;

namespace {

RaceParameters early(double p_r = 0.5) {
  RaceParameters p;
  p.c = 1;
  p.b = 4;
  p.B = 1e4;
  p.W = 100;
  p.s = 1.5;
  p.p_fo = 0.5;
  p.p_r = p_r;
  return p;
}

void expect_matrix(const PayoffMatrix2& m, double a, double b, double c, double d, double tol = 1e-12) {
  EXPECT_NEAR(m(0, 0), a, tol);
  EXPECT_NEAR(m(0, 1), b, tol);
  EXPECT_NEAR(m(1, 0), c, tol);
  EXPECT_NEAR(m(1, 1), d, tol);
}

// Sign change of f over [0,1] by bisection; f(0) and f(1) must differ in sign.
template <class F>
double bisect(F f, double lo = 0.0, double hi = 1.0) {
  const bool lo_sign = f(lo) > 0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if ((f(mid) > 0) == lo_sign) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST(StageMatrix, HandEvaluatedExamples) {
  RaceParameters p = early();
  expect_matrix(stage_payoff_matrix(p), 1, 1.8, 1.2, 1.5);
  p.p_fo = 1;
  expect_matrix(stage_payoff_matrix(p), 1, 3, 0, 0);
  p.p_fo = 0;
  expect_matrix(stage_payoff_matrix(p), 1, 0.6, 2.4, 2);
}

TEST(StageMatrix, ValidationNamesField) {
  RaceParameters p = early();
  p.p_fo = 1.5;
  try {
    stage_payoff_matrix(p);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "p_fo");
  }
  p = early();
  p.s = 0.5;
  EXPECT_THROW(stage_payoff_matrix(p), ValidationError);
  p = early();
  p.W = 0;
  EXPECT_THROW(race_payoff_matrix(p), ValidationError);
  p = early();
  p.beta = -1;
  EXPECT_THROW(race_payoff_matrix(p), ValidationError);
}

TEST(RaceMatrix, HandEvaluatedExamples) {
  expect_matrix(race_payoff_matrix(early()), 51, 1.8, 75.6, 38.25);

  RaceParameters p = early();
  p.p_r = 1;
  const auto m = race_payoff_matrix(p);
  EXPECT_EQ(m(1, 0), 0.0);
  EXPECT_EQ(m(1, 1), 0.0);

  p = early(0);
  p.B = 0;
  expect_matrix(race_payoff_matrix(p), 1, 1.8, 1.2, 1.5);
}

// Golden values re-derived with exact rationals by tools/oracles/race_matrices.py.
TEST(RaceMatrix, MatchesRationalFixture) {
  std::ifstream in(RACESIM_FIXTURE_DIR "/race_matrices.csv");
  ASSERT_TRUE(in) << "fixture missing";
  std::string line;
  std::getline(in, line);
  int rows = 0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::vector<double> v;
    std::string cell;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    ASSERT_EQ(v.size(), 15u);
    RaceParameters p;
    p.c = v[0];
    p.b = v[1];
    p.B = v[2];
    p.W = v[3];
    p.s = v[4];
    p.p_fo = v[5];
    p.p_r = v[6];
    SCOPED_TRACE(line);
    expect_matrix(stage_payoff_matrix(p), v[7], v[8], v[9], v[10]);
    expect_matrix(race_payoff_matrix(p), v[11], v[12], v[13], v[14]);
    ++rows;
  }
  EXPECT_GE(rows, 5);
}

TEST(RaceMatrix, ReducesToStageMatrixWithoutPrizeOrRisk) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 500; ++i) {
    RaceParameters p;
    p.c = 5 * u(gen);
    p.b = 0.1 + 10 * u(gen);
    p.B = 0;
    p.W = 0.5 + 1000 * u(gen);
    p.s = 1 + 4 * u(gen);
    p.p_fo = u(gen);
    p.p_r = 0;
    EXPECT_EQ(race_payoff_matrix(p), stage_payoff_matrix(p));
  }
}

TEST(RaceMatrix, UnsafeRowScalesWithSurvival) {
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 500; ++i) {
    RaceParameters p;
    p.c = 5 * u(gen);
    p.b = 0.1 + 10 * u(gen);
    p.B = 1e4 * u(gen);
    p.W = 1 + 1e3 * u(gen);
    p.s = 1 + 4 * u(gen);
    p.p_fo = u(gen);
    p.p_r = 0;
    const auto base = race_payoff_matrix(p);
    p.p_r = u(gen);
    const auto scaled = race_payoff_matrix(p);
    for (int col = 0; col < 2; ++col)
      EXPECT_NEAR(scaled(1, col), (1 - p.p_r) * base(1, col), 1e-12 * std::max(1.0, std::abs(base(1, col))));
    EXPECT_EQ(scaled(0, 0), base(0, 0));
    EXPECT_EQ(scaled(0, 1), base(0, 1));
  }
}

TEST(Comparators, CollectivePreference) {
  EXPECT_EQ(collective_preference(early()), CollectivePreference::SafePreferred);

  RaceParameters p = early();
  p.W = 1e6;
  p.p_fo = 0.6;
  p.p_r = 0.1;
  EXPECT_EQ(collective_preference(p), CollectivePreference::UnsafePreferred);

  p = early(1.0);
  EXPECT_EQ(collective_preference(p), CollectivePreference::SafePreferred);

  // AS,AS = -c + b/2 = 1 vs AU,AU = (1 - p_r) * b / 2 = 1 at p_fo = 0, p_r = 0.5.
  p = RaceParameters{};
  p.B = 0;
  p.p_fo = 0;
  p.p_r = 0.5;
  EXPECT_EQ(collective_preference(p), CollectivePreference::Tie);
}

TEST(Comparators, RiskDominance) {
  EXPECT_EQ(risk_dominance(early()), RiskDominance::AUDominant);
  EXPECT_EQ(risk_dominance(early(1.0)), RiskDominance::ASDominant);

  RaceParameters p;
  p.c = 1;
  p.b = 4;
  p.B = 0;
  p.W = 1;
  p.s = 1.5;
  p.p_fo = 0;
  p.p_r = 7.0 / 11.0;
  EXPECT_EQ(risk_dominance(p), RiskDominance::Tie);
}

TEST(Boundaries, Early) {
  const auto [lo, hi] = early_region_boundaries(1.5);
  EXPECT_NEAR(lo, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(hi, 7.0 / 9.0, 1e-15);
  EXPECT_EQ(early_region_boundaries(1).lo, 0.0);
  EXPECT_NEAR(early_region_boundaries(1).hi, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(early_region_boundaries(2).lo, 0.5, 1e-15);
  EXPECT_NEAR(early_region_boundaries(2).hi, 5.0 / 6.0, 1e-15);
  EXPECT_THROW(early_region_boundaries(0.99), ValidationError);
}

TEST(Boundaries, EarlyOrderingAndLimit) {
  for (double s = 1.0 + 1e-9; s < 1e6; s *= 1.7) {
    const auto [lo, hi] = early_region_boundaries(s);
    EXPECT_GE(lo, 0.0);
    EXPECT_LT(lo, hi);
    EXPECT_LT(hi, 1.0);
  }
  const auto far = early_region_boundaries(1e9);
  EXPECT_NEAR(far.lo, 1.0, 1e-8);
  EXPECT_NEAR(far.hi, 1.0, 1e-8);
}

TEST(Boundaries, LateWelfare) {
  RaceParameters p;
  p.b = 4;
  p.c = 1;
  p.p_fo = 0.6;
  EXPECT_NEAR(late_welfare_boundary(p), 0.21875, 1e-15);
  p.c = 2;
  p.p_fo = 0;
  EXPECT_NEAR(late_welfare_boundary(p), 1.0, 1e-15);
  p.c = 1;
  EXPECT_NEAR(late_welfare_boundary(p), 0.5, 1e-15);
  // Not clamped.
  p.c = 0;
  p.p_fo = 0.9;
  EXPECT_LT(late_welfare_boundary(p), 0.0);
  p.p_fo = 1;
  EXPECT_THROW(late_welfare_boundary(p), SingularBoundaryError);
}

TEST(Boundaries, LateRiskDominanceClosedForm) {
  RaceParameters p;
  p.c = 1;
  p.b = 4;
  p.s = 1.5;
  EXPECT_NEAR(late_risk_dominance_boundary(p), 7.0 / 11.0, 1e-15);
  p.c = 0;
  p.s = 1;
  EXPECT_EQ(late_risk_dominance_boundary(p), 0.0);
  p.c = 1;
  p.s = 5;
  EXPECT_NEAR(late_risk_dominance_boundary(p), 0.875, 1e-15);
}

TEST(Boundaries, RiskClosedFormMatchesBisectionOracleAtZeroExposure) {
  for (double s = 1.25; s <= 5.0 + 1e-12; s += 0.25) {
    RaceParameters p;
    p.c = 1;
    p.b = 4;
    p.B = 0;
    p.W = 1;
    p.s = s;
    p.p_fo = 0;
    auto diff = [&](double pr) {
      RaceParameters q = p;
      q.p_r = pr;
      const auto m = race_payoff_matrix(q);
      return (m(0, 0) + m(0, 1)) - (m(1, 0) + m(1, 1));
    };
    SCOPED_TRACE(s);
    EXPECT_NEAR(bisect(diff), late_risk_dominance_boundary(p), 1e-6);
  }
}

TEST(Boundaries, WelfareFlipMatchesClosedForm) {
  for (double pfo : {0.0, 0.2, 0.6}) {
    RaceParameters p;
    p.c = 1;
    p.b = 4;
    p.B = 0;
    p.W = 1;
    p.p_fo = pfo;
    auto diff = [&](double pr) {
      RaceParameters q = p;
      q.p_r = pr;
      return collective_preference(q) == CollectivePreference::SafePreferred ? 1.0 : -1.0;
    };
    SCOPED_TRACE(pfo);
    EXPECT_NEAR(bisect(diff), late_welfare_boundary(p), 1e-9);
  }
}

TEST(Regions, LabelSpotChecks) {
  EXPECT_EQ(classify_region(early(0.5), Regime::Early), Region::II);
  EXPECT_EQ(classify_region(early(0.1), Regime::Early), Region::III);
  EXPECT_EQ(classify_region(early(0.9), Regime::Early), Region::I);

  RaceParameters late;
  late.W = 1e6;
  late.p_fo = 0.6;
  late.p_r = 0.3;
  EXPECT_EQ(classify_region(late, Regime::Late), Region::I);
  late.p_r = 0.1;
  EXPECT_EQ(classify_region(late, Regime::Late), Region::II);
  late.p_r = 0.9;
  late.p_fo = 0;
  EXPECT_EQ(classify_region(late, Regime::Late), Region::I);
  // Above the risk threshold: AU risk dominant.
  late.p_r = 0.05;
  late.s = 5;
  late.c = 1;
  late.p_fo = 0;
  EXPECT_EQ(classify_region(late, Regime::Late), Region::III);
}

TEST(Regions, BoundaryTiesResolveToLowerRegion) {
  RaceParameters p = early();
  p.p_r = early_region_boundaries(p.s).lo;
  EXPECT_EQ(classify_region(p, Regime::Early), Region::II);
  p.p_r = early_region_boundaries(p.s).hi;
  EXPECT_EQ(classify_region(p, Regime::Early), Region::II);

  // Exact welfare tie at p_fo = 0, p_r = 0.5, with AS risk dominant there.
  RaceParameters late;
  late.p_fo = 0;
  late.p_r = 0.5;
  late.s = 1;
  EXPECT_EQ(collective_preference([&] { auto q = late; q.B = 0; return q; }()), CollectivePreference::Tie);
  EXPECT_EQ(classify_region(late, Regime::Late), Region::I);

  // Exact risk tie at p_r = 7/11 resolves as AS-selected.
  late.s = 1.5;
  late.p_r = 7.0 / 11.0;
  EXPECT_NE(classify_region(late, Regime::Late), Region::III);
}

TEST(Regions, TotalOverGrid) {
  for (Regime regime : {Regime::Early, Regime::Late}) {
    for (int i = 0; i <= 100; ++i) {
      for (double pfo : {0.0, 0.3, 0.6, 0.95}) {
        RaceParameters p;
        p.p_fo = pfo;
        p.p_r = i / 100.0;
        const Region r = classify_region(p, regime);
        EXPECT_TRUE(r == Region::I || r == Region::II || r == Region::III);
        EXPECT_EQ(r, classify_region(p, regime));
      }
    }
  }
  RaceParameters p;
  p.p_fo = 1;
  EXPECT_THROW(classify_region(p, Regime::Late), ValidationError);
  EXPECT_THROW(parse_regime("middle"), ValidationError);
}

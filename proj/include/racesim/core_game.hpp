#pragma once

// Closed-form layer of the AI development race game: per-round stage payoffs,
// the averaged race matrix over unconditional strategies, welfare and
// risk-dominance comparators, and the regime boundaries used for phase
// diagram overlays.

#include <array>
#include <cmath>
#include <string>
#include <string_view>

#include "racesim/errors.hpp"

namespace racesim {

struct RaceParameters {
  double c = 1.0;      // safety cost per round
  double b = 4.0;      // intermediate benefit per round
  double B = 1.0e4;    // prize for reaching supremacy
  double W = 100.0;    // development rounds to supremacy
  double s = 1.5;      // unsafe speed multiplier
  double p_fo = 0.5;   // probability an unsafe act is found out
  double p_r = 0.5;    // disaster probability under fully unsafe winning
  double beta = 1.0;   // selection intensity

  // Throws ValidationError naming the first offending field.
  void validate() const {
    auto finite = [](const char* name, double v) {
      if (!std::isfinite(v)) throw ValidationError(name, "must be finite");
    };
    finite("c", c);
    finite("b", b);
    finite("B", B);
    finite("W", W);
    finite("s", s);
    finite("p_fo", p_fo);
    finite("p_r", p_r);
    finite("beta", beta);
    if (c < 0) throw ValidationError("c", "must be >= 0");
    if (b <= 0) throw ValidationError("b", "must be > 0");
    if (B < 0) throw ValidationError("B", "must be >= 0");
    if (W <= 0) throw ValidationError("W", "must be > 0");
    if (s < 1) throw ValidationError("s", "must be >= 1");
    if (p_fo < 0 || p_fo > 1) throw ValidationError("p_fo", "must lie in [0,1]");
    if (p_r < 0 || p_r > 1) throw ValidationError("p_r", "must lie in [0,1]");
    if (beta < 0) throw ValidationError("beta", "must be >= 0");
  }
};

// Row/column 0 is the safe strategy (SAFE or AS), 1 the unsafe one.
struct PayoffMatrix2 {
  std::array<std::array<double, 2>, 2> entries{};

  double operator()(int row, int col) const { return entries[row][col]; }
  double& operator()(int row, int col) { return entries[row][col]; }

  friend bool operator==(const PayoffMatrix2&, const PayoffMatrix2&) = default;
};

enum class Regime { Early, Late };
enum class Region { I = 1, II = 2, III = 3 };
enum class CollectivePreference { SafePreferred, UnsafePreferred, Tie };
enum class RiskDominance { ASDominant, AUDominant, Tie };

inline std::string_view to_string(Regime r) { return r == Regime::Early ? "early" : "late"; }

inline std::string_view to_string(Region r) {
  switch (r) {
    case Region::I: return "I";
    case Region::II: return "II";
    case Region::III: return "III";
  }
  return "?";
}

inline Regime parse_regime(std::string_view text) {
  if (text == "early") return Regime::Early;
  if (text == "late") return Regime::Late;
  throw ValidationError("regime", "expected 'early' or 'late', got '" + std::string(text) + "'");
}

// One round of the innovation game between SAFE and UNSAFE.
inline PayoffMatrix2 stage_payoff_matrix(const RaceParameters& p) {
  p.validate();
  const double found = p.p_fo;
  PayoffMatrix2 m;
  m(0, 0) = -p.c + p.b / 2.0;
  m(0, 1) = -p.c + (1.0 - found) * p.b / (p.s + 1.0) + found * p.b;
  m(1, 0) = (1.0 - found) * p.s * p.b / (p.s + 1.0);
  m(1, 1) = (1.0 - found * found) * p.b / 2.0;
  return m;
}

// Per-round payoffs of AS vs AU averaged over the whole race. The AU row
// carries the survival factor (1 - p_r).
inline PayoffMatrix2 race_payoff_matrix(const RaceParameters& p) {
  const PayoffMatrix2 stage = stage_payoff_matrix(p);
  const double prize_rate = p.B / p.W;
  const double survive = 1.0 - p.p_r;
  PayoffMatrix2 m;
  m(0, 0) = prize_rate / 2.0 + stage(0, 0);
  m(0, 1) = stage(0, 1);
  m(1, 0) = survive * (p.s * prize_rate + stage(1, 0));
  m(1, 1) = survive * (p.s * prize_rate / 2.0 + stage(1, 1));
  return m;
}

inline CollectivePreference collective_preference(const RaceParameters& p) {
  const PayoffMatrix2 m = race_payoff_matrix(p);
  if (m(0, 0) > m(1, 1)) return CollectivePreference::SafePreferred;
  if (m(0, 0) < m(1, 1)) return CollectivePreference::UnsafePreferred;
  return CollectivePreference::Tie;
}

inline RiskDominance risk_dominance(const RaceParameters& p) {
  const PayoffMatrix2 m = race_payoff_matrix(p);
  const double safe_sum = m(0, 0) + m(0, 1);
  const double unsafe_sum = m(1, 0) + m(1, 1);
  if (safe_sum > unsafe_sum) return RiskDominance::ASDominant;
  if (safe_sum < unsafe_sum) return RiskDominance::AUDominant;
  return RiskDominance::Tie;
}

struct EarlyBoundaries {
  double lo;
  double hi;
};

// Early-regime dilemma interval [1 - 1/s, 1 - 1/(3s)].
inline EarlyBoundaries early_region_boundaries(double s) {
  if (!(s >= 1.0) || !std::isfinite(s)) throw ValidationError("s", "must be >= 1");
  return {1.0 - 1.0 / s, 1.0 - 1.0 / (3.0 * s)};
}

// p_r below which safety is the collective preference in the late limit.
// Not clamped; a negative value means safety is preferred at every p_r.
inline double late_welfare_boundary(const RaceParameters& p) {
  p.validate();
  const double denom = p.b * (1.0 - p.p_fo * p.p_fo);
  if (denom == 0.0) throw SingularBoundaryError("late welfare boundary is singular at p_fo = 1");
  return 1.0 - (p.b - 2.0 * p.c) / denom;
}

// Closed form of the late-limit risk-dominance threshold. Agrees with the
// direct row-sum comparator only at p_fo = 0.
inline double late_risk_dominance_boundary(const RaceParameters& p) {
  p.validate();
  return (4.0 * p.c * (p.s + 1.0) + 2.0 * p.b * (p.s - 1.0)) / (p.b * (1.0 + 3.0 * p.s));
}

// Early regime uses the printed closed interval. Late regime evaluates the
// comparators with B = 0 so the p_fo dependence is kept; ties go to the
// safety-favouring (lower-numbered) region.
inline Region classify_region(const RaceParameters& p, Regime regime) {
  p.validate();
  if (regime == Regime::Early) {
    const auto [lo, hi] = early_region_boundaries(p.s);
    if (p.p_r > hi) return Region::I;
    if (p.p_r >= lo) return Region::II;
    return Region::III;
  }
  if (p.p_fo >= 1.0) throw ValidationError("p_fo", "late regime classification requires p_fo < 1");
  RaceParameters limit = p;
  limit.B = 0.0;
  const bool safe_selected = risk_dominance(limit) != RiskDominance::AUDominant;
  const bool safe_preferred = collective_preference(limit) != CollectivePreference::UnsafePreferred;
  if (!safe_selected) return Region::III;
  return safe_preferred ? Region::I : Region::II;
}

}  // namespace racesim

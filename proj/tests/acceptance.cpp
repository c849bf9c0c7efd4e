// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails. Criterion 9 is soft: between 40% and
// 60% it prints REPORT and does not fail the run.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "racesim/cli.hpp"
#include "racesim/core_game.hpp"
#include "racesim/dynamics.hpp"
#include "racesim/experiments.hpp"
#include "racesim/generators.hpp"

using namespace racesim;

namespace {

constexpr std::uint64_t kMasterSeed = 2024;

struct Outcome {
  enum Kind { Pass, Fail, Report } kind;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& check) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {Outcome::Fail, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const char* tag = o.kind == Outcome::Pass ? "PASS" : o.kind == Outcome::Fail ? "FAIL" : "REPORT";
  if (o.kind == Outcome::Fail) ++failures;
  std::printf("%-6s criterion %2d: %s (%s) [%.1fs]\n", tag, id, title.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Outcome verdict(bool ok, std::string detail) { return {ok ? Outcome::Pass : Outcome::Fail, std::move(detail)}; }

RaceParameters early(double p_r) {
  RaceParameters p;
  p.p_r = p_r;
  return p;
}

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

double mean_of(const std::vector<SweepRecord>& records, bool non_zealot, std::size_t fraction_index = 0) {
  double sum = 0;
  std::size_t n = 0;
  for (const auto& r : records) {
    if (r.fraction_index != fraction_index) continue;
    sum += non_zealot ? r.result.au_freq_non_zealot : r.result.au_freq_all;
    ++n;
  }
  return sum / static_cast<double>(n);
}

std::vector<SweepRecord> run_cell(std::span<const Graph> nets, const RaceParameters& params, const RunProtocol& protocol,
                                  DynamicsConfig cfg = {}, std::vector<double> fractions = {0.0},
                                  ZealotSpec zealots = {}) {
  Experiment exp;
  exp.grid = ParameterGrid(params);
  exp.zealot_fractions = std::move(fractions);
  exp.zealots = zealots;
  exp.dynamics = cfg;
  exp.protocol = protocol;
  return run_experiment(exp, nets, 1);
}

// Desk-scale scale-free setup shared by criteria 6 to 9.
constexpr std::size_t kDeskNodes = 500;
const RunProtocol kDeskProtocol{2000, 1000, 10, 5, kMasterSeed};

const std::vector<Graph>& desk_networks(NetworkType type) {
  static std::vector<Graph> ba = build_networks({NetworkType::BarabasiAlbert, kDeskNodes, 0, 2}, 5, kMasterSeed);
  static std::vector<Graph> dms_nets = build_networks({NetworkType::Dms, kDeskNodes, 0, 2}, 5, kMasterSeed);
  return type == NetworkType::Dms ? dms_nets : ba;
}

// Criterion 5 means are reused by criterion 7.
double wm_means[3] = {NAN, NAN, NAN};
const double kRiskPoints[3] = {0.1, 0.5, 0.9};

}  // namespace

int main() {
  report(1, "closed-form stage and race matrices", [] {
    const auto stage = stage_payoff_matrix(early(0.5));
    const auto race = race_payoff_matrix(early(0.5));
    const double want_stage[4] = {1.0, 1.8, 1.2, 1.5};
    const double want_race[4] = {51.0, 1.8, 75.6, 38.25};
    double err = 0;
    for (int i = 0; i < 4; ++i) {
      err = std::max(err, std::abs(stage(i / 2, i % 2) - want_stage[i]));
      err = std::max(err, std::abs(race(i / 2, i % 2) - want_race[i]));
    }
    // Independent rational re-derivation committed as a fixture.
    std::ifstream in(std::string(RACESIM_FIXTURE_DIR) + "/race_matrices.csv");
    if (!in) return Outcome{Outcome::Fail, "fixture missing"};
    std::string line;
    std::getline(in, line);
    std::size_t rows = 0;
    while (std::getline(in, line)) {
      std::vector<double> v;
      std::stringstream ss(line);
      for (std::string cell; std::getline(ss, cell, ',');) v.push_back(std::stod(cell));
      if (v.size() != 15) return Outcome{Outcome::Fail, "bad fixture row"};
      RaceParameters p;
      p.c = v[0], p.b = v[1], p.B = v[2], p.W = v[3], p.s = v[4], p.p_fo = v[5], p.p_r = v[6];
      const auto s = stage_payoff_matrix(p);
      const auto r = race_payoff_matrix(p);
      for (int i = 0; i < 4; ++i) {
        err = std::max(err, std::abs(s(i / 2, i % 2) - v[7 + i]) / std::max(1.0, std::abs(v[7 + i])));
        err = std::max(err, std::abs(r(i / 2, i % 2) - v[11 + i]) / std::max(1.0, std::abs(v[11 + i])));
      }
      ++rows;
    }
    return verdict(err <= 1e-12 && rows > 0, "max error " + fmt("%.3g", err) + ", fixture rows " + std::to_string(rows));
  });

  report(2, "boundary golden values", [] {
    const auto eb = early_region_boundaries(1.5);
    RaceParameters late;
    late.p_fo = 0.6;
    const double welfare = late_welfare_boundary(late);
    RaceParameters risk;
    risk.s = 1.5;
    const double rd = late_risk_dominance_boundary(risk);
    const double err = std::max({std::abs(eb.lo - 1.0 / 3), std::abs(eb.hi - 7.0 / 9), std::abs(welfare - 0.21875),
                                 std::abs(rd - 7.0 / 11)});
    return verdict(err <= 1e-9, "max error " + fmt("%.3g", err));
  });

  report(3, "bisection oracles agree with closed forms", [] {
    const auto start = std::chrono::steady_clock::now();
    double risk_err = 0, welfare_err = 0;
    for (int i = 0; i <= 15; ++i) {
      RaceParameters p;
      p.B = 0;
      p.s = 1.25 + 0.25 * i;
      p.p_fo = 0;
      const double root = bisect([&](double pr) {
        RaceParameters q = p;
        q.p_r = pr;
        const auto m = race_payoff_matrix(q);
        return (m(0, 0) + m(0, 1)) - (m(1, 0) + m(1, 1));
      });
      risk_err = std::max(risk_err, std::abs(root - late_risk_dominance_boundary(p)));
    }
    for (double p_fo : {0.0, 0.2, 0.6}) {
      RaceParameters p;
      p.B = 0;
      p.p_fo = p_fo;
      const double root = bisect([&](double pr) {
        RaceParameters q = p;
        q.p_r = pr;
        const auto m = race_payoff_matrix(q);
        return m(0, 0) - m(1, 1);
      });
      welfare_err = std::max(welfare_err, std::abs(root - late_welfare_boundary(p)));
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return verdict(risk_err <= 1e-6 && welfare_err <= 1e-9 && secs < 1.0,
                   "risk " + fmt("%.3g", risk_err) + ", welfare " + fmt("%.3g", welfare_err));
  });

  report(4, "region label spot checks", [] {
    RaceParameters late;
    late.p_fo = 0.6;
    late.p_r = 0.3;
    const bool a = classify_region(early(0.5), Regime::Early) == Region::II;
    const bool b = classify_region(early(0.1), Regime::Early) == Region::III;
    const bool c = classify_region(late, Regime::Late) == Region::I;
    late.p_r = 0.1;
    const bool d = classify_region(late, Regime::Late) == Region::II;
    return verdict(a && b && c && d, std::string(a ? "" : "early/0.5 ") + (b ? "" : "early/0.1 ") +
                                         (c ? "" : "late/0.3 ") + (d ? "" : "late/0.1 ") + "4 labels checked");
  });

  report(5, "well-mixed Z=100 risk scan", [] {
    const Graph g = complete(100);
    const RunProtocol protocol{1000, 1000, 25, 1, kMasterSeed};
    for (int i = 0; i < 3; ++i)
      wm_means[i] = mean_of(run_cell(std::span<const Graph>(&g, 1), early(kRiskPoints[i]), protocol), false);
    const bool ok = wm_means[0] >= 0.9 && wm_means[2] <= 0.1 && wm_means[1] >= 0.6;
    return verdict(ok, "AU at p_r=0.1/0.5/0.9: " + fmt("%.3f", wm_means[0]) + "/" + fmt("%.3f", wm_means[1]) + "/" +
                           fmt("%.3f", wm_means[2]));
  });

  report(6, "heterogeneity ordering at p_r=0.65", [] {
    const Graph wm = complete(kDeskNodes);
    std::vector<Graph> wm_nets(5, wm);
    const double au_wm = mean_of(run_cell(wm_nets, early(0.65), kDeskProtocol), false);
    const double au_ba = mean_of(run_cell(desk_networks(NetworkType::BarabasiAlbert), early(0.65), kDeskProtocol), false);
    const double au_dms = mean_of(run_cell(desk_networks(NetworkType::Dms), early(0.65), kDeskProtocol), false);
    const bool ok = au_dms < au_ba && au_ba < au_wm && au_wm - au_dms >= 0.1;
    return verdict(ok, "DMS " + fmt("%.3f", au_dms) + " < BA " + fmt("%.3f", au_ba) + " < WM " + fmt("%.3f", au_wm));
  });

  report(7, "normalized DMS tracks well-mixed", [] {
    DynamicsConfig cfg;
    cfg.normalized = true;
    double worst = 0;
    std::string detail;
    for (int i = 0; i < 3; ++i) {
      const double au = mean_of(run_cell(desk_networks(NetworkType::Dms), early(kRiskPoints[i]), kDeskProtocol, cfg), false);
      const double diff = std::abs(au - wm_means[i]);
      worst = std::max(worst, std::isnan(diff) ? 1.0 : diff);
      detail += fmt("%.3f", au) + (i < 2 ? "/" : "");
    }
    return verdict(worst <= 0.15, "normalized DMS AU " + detail + ", max |diff| " + fmt("%.3f", worst));
  });

  report(8, "zealot efficacy on DMS, p_r=0.5", [] {
    const auto& nets = desk_networks(NetworkType::Dms);
    ZealotSpec desc;
    const auto d = run_cell(nets, early(0.5), kDeskProtocol, {}, {0.0, 0.02, 0.1}, desc);
    ZealotSpec rev;
    rev.order = ZealotOrder::Reverse;
    const auto r = run_cell(nets, early(0.5), kDeskProtocol, {}, {0.02}, rev);
    const double baseline = mean_of(d, true, 0);
    const double desc_02 = mean_of(d, true, 1);
    const double top10 = mean_of(d, true, 2);
    const double rev_02 = mean_of(r, true, 0);
    const bool ok = baseline > 0.5 && top10 < 0.2 && rev_02 > desc_02;
    return verdict(ok, "baseline " + fmt("%.3f", baseline) + ", top 10% " + fmt("%.3f", top10) + ", at 0.02 reverse " +
                           fmt("%.3f", rev_02) + " vs descending " + fmt("%.3f", desc_02));
  });

  report(9, "single hub zealot, late regime region I", [] {
    RaceParameters p;
    p.W = 1e6;
    p.p_fo = 0.6;
    p.p_r = 0.3;
    if (classify_region(p, Regime::Late) != Region::I) return Outcome{Outcome::Fail, "cell is not region I"};
    const auto records = run_cell(desk_networks(NetworkType::Dms), p, kDeskProtocol, {},
                                  {1.0 / static_cast<double>(kDeskNodes)});
    std::size_t safe = 0;
    for (const auto& rec : records) {
      if (rec.result.zealots != 1) return Outcome{Outcome::Fail, "expected exactly one zealot"};
      if (rec.result.au_freq_all < 0.05) ++safe;
    }
    const double share = static_cast<double>(safe) / static_cast<double>(records.size());
    const std::string detail = std::to_string(safe) + "/" + std::to_string(records.size()) + " runs below 0.05";
    if (share >= 0.6) return Outcome{Outcome::Pass, detail};
    if (share >= 0.4) return Outcome{Outcome::Report, detail + ", below the 60% target"};
    return Outcome{Outcome::Fail, detail};
  });

  report(10, "property suites", [] {
    std::vector<std::string> broken;

    // Zealot invariance.
    {
      Rng gr(kMasterSeed);
      const Graph g = dms(300, 2, gr);
      const auto m = race_payoff_matrix(early(0.3));
      for (Strategy fixed : {Strategy::AS, Strategy::AU}) {
        Rng rng(fixed == Strategy::AS ? 1 : 2);
        auto st = init_population(g, rng);
        const auto nodes = zealot_nodes(g, 0.05, ZealotOrder::Descending);
        set_zealots(st, nodes, fixed, 200.0);
        for (int i = 0; i < 20; ++i) {
          for (std::size_t k = 0; k < g.node_count(); ++k) async_step(st, g, m, {}, rng);
          sync_generation(st, g, m, {}, rng);
        }
        for (NodeId v : nodes)
          if (st.strategies[v] != fixed) broken.push_back("zealot");
      }
    }

    // Fermi bounds and complement.
    for (double beta : {0.0, 0.25, 1.0, 10.0})
      for (double fa = -50; fa <= 50; fa += 0.5)
        for (double fb : {-3.0, 0.0, 7.5}) {
          const double p = fermi_probability(fa, fb, beta);
          const double q = fermi_probability(fb, fa, beta);
          if (!(p >= 0 && p <= 1) || std::abs(p + q - 1) > 1e-12) broken.push_back("fermi");
        }

    // beta rescaling on the k-regular lattice, L = 8.
    {
      const Graph g = lattice(8, Neighborhood::Edge4);
      const auto m = race_payoff_matrix(early(0.5));
      Rng ra(kMasterSeed), rb(kMasterSeed);
      auto a = init_population(g, ra);
      auto b = init_population(g, rb);
      for (int step = 0; step < 64 * 1000; ++step) {
        async_step(a, g, m, {true, UpdateRule::Asynchronous, 1.0}, ra);
        async_step(b, g, m, {false, UpdateRule::Asynchronous, 0.25}, rb);
        if (a.strategies != b.strategies) {
          broken.push_back("beta-rescaling");
          break;
        }
      }
    }

    // Graph invariants and edge counts.
    for (std::uint64_t i = 0; i < 5; ++i) {
      for (std::size_t mm : {2u, 4u}) {
        Rng r1(network_seed(kMasterSeed, i)), r2(network_seed(kMasterSeed, i));
        const Graph ba = barabasi_albert(1000, mm, r1);
        const Graph d = dms(1000, mm, r2);
        if (ba.edge_count() != growth_edge_count(1000, mm) || d.edge_count() != growth_edge_count(1000, mm))
          broken.push_back("edge-count");
        if (!ba.is_connected() || !d.is_connected()) broken.push_back("connected");
      }
    }
    if (lattice(32, Neighborhood::Edge4).edge_count() != 2048 || lattice(32, Neighborhood::Moore8).edge_count() != 4096 ||
        complete(100).edge_count() != 4950)
      broken.push_back("regular-edge-count");

    // CSV bytes independent of thread count.
    {
      const auto nets = build_networks({NetworkType::Dms, 200, 0, 2}, 3, kMasterSeed);
      Experiment exp;
      exp.grid = ParameterGrid(early(0.5), {{"p_r", {0.3, 0.6, 0.9}}});
      exp.zealot_fractions = {0.0, 0.05};
      exp.protocol = {100, 50, 4, 3, kMasterSeed};
      std::ostringstream one, many;
      cli::write_sweep_csv(one, run_experiment(exp, nets, 1));
      cli::write_sweep_csv(many, run_experiment(exp, nets, 4));
      if (one.str() != many.str()) broken.push_back("csv-threads");
    }

    // auFreqAll reconstruction identity.
    {
      const auto nets = build_networks({NetworkType::BarabasiAlbert, 400, 0, 2}, 1, kMasterSeed);
      for (Strategy s : {Strategy::AS, Strategy::AU})
        for (double f : {0.01, 0.05, 0.2}) {
          ZealotSpec z;
          z.fraction = f;
          z.strategy = s;
          Rng rng(replicate_seed(kMasterSeed, 0, 0, 0));
          const auto r = run_replicate(nets[0], early(0.6), {}, {200, 100, 1, 1, kMasterSeed}, z, rng);
          const double zc = static_cast<double>(r.zealots);
          const double rebuilt = (r.au_freq_non_zealot * (400.0 - zc) + (s == Strategy::AU ? zc : 0.0)) / 400.0;
          if (std::abs(rebuilt - r.au_freq_all) > 1e-12) broken.push_back("reconstruction");
        }
    }

    std::string detail = "zealots, fermi, beta-rescaling, graph invariants, csv threads, reconstruction";
    if (!broken.empty()) {
      detail = "broken:";
      for (const auto& b : broken) detail += " " + b;
    }
    return verdict(broken.empty(), detail);
  });

  std::printf("%s\n", failures == 0 ? "acceptance: all criteria met" : "acceptance: failures present");
  return failures == 0 ? 0 : 1;
}

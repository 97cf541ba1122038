#pragma once

// Experiment runner: executes the flow for every eps in the configured sweep,
// evaluates the enabled diagnostics, and writes snapshots, tidy CSV tables
// and a JSON summary with one pass/fail entry per enabled invariant. Outputs
// are deterministic functions of (config, seed); all files are written
// atomically.

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcf/barrier.hpp"
#include "mcf/config.hpp"
#include "mcf/csvio.hpp"
#include "mcf/diagnostics.hpp"
#include "mcf/expr.hpp"
#include "mcf/flow.hpp"
#include "mcf/log.hpp"
#include "mcf/metric.hpp"
#include "mcf/snapshot.hpp"

namespace mcf {

struct ExperimentOverrides {
  std::optional<std::string> out_dir;
  std::optional<bool> steady;
  int jobs = 1;
};

namespace detail {

inline std::string eps_tag(double eps) {
  std::ostringstream os;
  os << eps;
  std::string s = os.str();
  for (char& ch : s)
    if (ch == '.') ch = 'p';
  return s;
}

inline Grid grid_from_config(const ExperimentConfig& c, const GroupModel& g) {
  std::vector<std::uint8_t> periodic(g.n, 0);
  for (int a : g.periodic_axes) periodic[a] = 1;
  return Grid(c.lo, c.hi, c.shape, periodic);
}

inline FlowProblem problem_from_config(const ExperimentConfig& c, const GroupModel& g, const Grid& grid,
                                       double eps, bool steady) {
  FlowProblem p;
  p.group = g;
  p.eps = eps;
  p.grid = grid;
  const Expr datum = Expr::parse(c.datum);
  p.phi = sample(grid, [&](const Vec& x) { return datum.eval(x); });
  if (!c.initial.empty()) {
    const Expr init = Expr::parse(c.initial);
    p.initial = sample(grid, [&](const Vec& x) { return init.eval(x); });
  }
  p.steady_mode = steady;
  p.T = steady ? std::numeric_limits<double>::infinity() : c.T;
  if (steady && c.T > 0.0) p.T = c.T;  // steady mode may still carry a horizon cap
  p.steady_tol = c.steady_tol;
  p.cfl_safety = c.cfl_safety;
  p.max_steps = c.max_steps;
  p.snapshot_times = c.snapshot_times;
  p.record_every = c.record_every;
  return p;
}

struct InvariantCheck {
  std::string name;
  bool pass = true;
  double value = 0.0;
  double threshold = 0.0;
};

}  // namespace detail

// Returns the process exit status: 0 iff every enabled invariant passed.
inline int run_experiment(const ExperimentConfig& cfg, const ExperimentOverrides& ov = {}) {
  namespace fs = std::filesystem;
  const std::string out_dir = ov.out_dir.value_or(cfg.out_dir);
  const bool steady = ov.steady.value_or(cfg.steady);
  fs::create_directories(out_dir);

  const GroupModel g = make_model(cfg.group);
  const Grid grid = detail::grid_from_config(cfg, g);
  const IndexBox interior = interior_box(grid, cfg.interior_shrink);

  log::info("experiment: group=" + cfg.group + ", grid " + std::to_string(grid.size()) + " points, " +
            std::to_string(cfg.eps.size()) + " eps value(s)");

  // --- flow sweep (optionally in parallel) ---------------------------------
  std::vector<RunResult> runs(cfg.eps.size());
  std::vector<std::string> run_errors(cfg.eps.size());
  {
    const int jobs = std::max(1, ov.jobs);
    std::size_t next = 0;
    auto worker = [&](std::size_t k) {
      try {
        const FlowProblem p = detail::problem_from_config(cfg, g, grid, cfg.eps[k], steady);
        runs[k] = run(p);
      } catch (const std::exception& e) {
        run_errors[k] = e.what();
      }
    };
    if (jobs == 1) {
      for (; next < cfg.eps.size(); ++next) worker(next);
    } else {
      std::vector<std::thread> threads;
      std::mutex mu;
      for (int t = 0; t < jobs; ++t)
        threads.emplace_back([&] {
          while (true) {
            std::size_t k;
            {
              std::lock_guard lock(mu);
              if (next >= cfg.eps.size()) return;
              k = next++;
            }
            worker(k);
          }
        });
      for (auto& t : threads) t.join();
    }
  }
  for (std::size_t k = 0; k < cfg.eps.size(); ++k)
    if (!run_errors[k].empty()) {
      log::error("run eps=" + std::to_string(cfg.eps[k]) + " failed: " + run_errors[k]);
      return 2;
    }

  std::vector<detail::InvariantCheck> checks;

  // --- per-eps outputs ------------------------------------------------------
  for (std::size_t k = 0; k < cfg.eps.size(); ++k) {
    const double eps = cfg.eps[k];
    const RunResult& r = runs[k];
    const std::string tag = detail::eps_tag(eps);

    for (const Snapshot& s : r.snapshots) {
      std::ostringstream name;
      name << out_dir << "/eps" << tag << "_t" << s.t << ".snap";
      write_snapshot(name.str(), cfg.group, eps, s.t, s.field);
    }
    {
      std::ostringstream name;
      name << out_dir << "/eps" << tag << "_final.snap";
      write_snapshot(name.str(), cfg.group, eps, r.state.t, r.state.u);
    }

    CsvTable csv({"t", "quantity", "value"});
    for (const SeriesSample& s : r.series) {
      csv.cell(s.t).cell(std::string("sup_grad_eps")).cell(s.sup_grad_eps);
      csv.cell(s.t).cell(std::string("sup_grad_1")).cell(s.sup_grad1_interior);
      csv.cell(s.t).cell(std::string("sup_dt")).cell(s.sup_dt);
      csv.cell(s.t).cell(std::string("max_principle_violation")).cell(s.max_principle_violation);
    }
    const double tend = r.state.t;
    {
      const ScalarField mc = mean_curvature_term(g, eps, r.state.u);
      csv.cell(tend).cell(std::string("curvature_residual")).cell(sup_abs_on(grid, mc.v, interior));
    }
    if (cfg.divergence_gap)
      csv.cell(tend).cell(std::string("divergence_gap")).cell(divergence_consistency(g, eps, r.state.u, interior));
    if (cfg.bernstein && eps > 0.0) {
      const BernsteinReport b = bernstein_fields(g, eps, r, cfg.bernstein_delta);
      csv.cell(tend).cell(std::string("bernstein_C")).cell(b.measured_C);
    }
    if (eps > 0.0)
      for (int kk = 1; kk <= g.n; ++kk)
        csv.cell(tend).cell("rg_residual_k" + std::to_string(kk)).cell(right_derivative_residual(g, eps, r, kk));
    csv.write(out_dir + "/diagnostics_eps" + tag + ".csv");

    // range bound (discrete maximum principle)
    double viol = 0.0;
    for (const SeriesSample& s : r.series) viol = std::max(viol, s.max_principle_violation);
    checks.push_back({"max_principle_eps" + tag, viol <= 1e-12, viol, 1e-12});

    if (cfg.gradient_series) {
      const GradientBoundSeries gb = gradient_bound_series(r);
      checks.push_back({"gradient_reference_eps" + tag, gb.max_excess_fraction <= 0.05,
                        gb.max_excess_fraction, 0.05});
    }
    if (steady && cfg.minimal_residual) {
      if (r.steady) {
        const double res = minimal_surface_residual(g, eps, r);
        checks.push_back({"minimal_residual_eps" + tag, res <= 10.0 * cfg.steady_tol, res,
                          10.0 * cfg.steady_tol});
      } else {
        checks.push_back({"minimal_residual_eps" + tag, false, -1.0, 10.0 * cfg.steady_tol});
        log::warn("eps=" + std::to_string(eps) + ": run did not reach steady state");
      }
    }
  }

  // --- eps sweep table ------------------------------------------------------
  if (cfg.eps_study && cfg.eps.size() >= 2) {
    std::vector<double> eps_pos;
    std::vector<const RunResult*> pos_runs;
    const RunResult* eps0 = nullptr;
    for (std::size_t k = 0; k < cfg.eps.size(); ++k) {
      if (cfg.eps[k] > 0.0) {
        eps_pos.push_back(cfg.eps[k]);
        pos_runs.push_back(&runs[k]);
      } else {
        eps0 = &runs[k];
      }
    }
    if (pos_runs.size() >= 2) {
      const EpsStudy study = eps_limit_study(eps_pos, pos_runs, interior, eps0);
      CsvTable sweep({"eps_hi", "eps_lo", "t", "gap"});
      for (const EpsStudyRow& row : study.rows)
        sweep.cell(row.eps_hi).cell(row.eps_lo).cell(row.t).cell(row.gap);
      if (study.gap_last_to_eps0 >= 0.0)
        sweep.cell(eps_pos.back()).cell(0.0).cell(runs[0].state.t).cell(study.gap_last_to_eps0);
      sweep.write(out_dir + "/sweep.csv");
      if (pos_runs.size() >= 3 && !runs[0].snapshots.empty())
        checks.push_back({"eps_cauchy", study.cauchy, study.cauchy ? 1.0 : 0.0, 1.0});
    }
  }

  // --- doubling table -------------------------------------------------------
  if (cfg.doubling) {
    CsvTable table({"eps", "r_or_alpha", "value"});
    double lo_ratio = std::numeric_limits<double>::infinity(), hi_ratio = 0.0;
    std::vector<int> center(grid.dim());
    for (int a = 0; a < grid.dim(); ++a) center[a] = grid.shape(a) / 2;
    for (double eps : cfg.eps) {
      if (!(eps > 0.0)) continue;
      const DoublingReport rep =
          doubling_ratio(g, eps, grid, {grid.index(center)}, cfg.doubling_radii, cfg.distance_stencil);
      for (const auto& row : rep.rows) table.cell(eps).cell(row.r).cell(row.ratio);
      lo_ratio = std::min(lo_ratio, rep.max_ratio);
      hi_ratio = std::max(hi_ratio, rep.max_ratio);
    }
    table.write(out_dir + "/doubling.csv");
    if (hi_ratio > 0.0 && lo_ratio > 0.0)
      checks.push_back({"doubling_uniform", hi_ratio / lo_ratio < 2.0, hi_ratio / lo_ratio, 2.0});
  }

  // --- Holder table ---------------------------------------------------------
  if (cfg.holder) {
    CsvTable table({"eps", "r_or_alpha", "value"});
    for (std::size_t k = 0; k < cfg.eps.size(); ++k) {
      const double eps = cfg.eps[k];
      if (!(eps > 0.0)) continue;
      std::map<std::size_t, DistanceField> cache;
      auto provider = [&](std::size_t src) -> const DistanceField& {
        auto it = cache.find(src);
        if (it == cache.end())
          it = cache.emplace(src, distance_map(g, eps, grid, src, cfg.distance_stencil)).first;
        return it->second;
      };
      // horizontal first derivatives of the terminal field
      double norm = 0.0;
      for (int i = 0; i < g.m; ++i) {
        const ScalarField xi_u = apply_X(g, eps, i, runs[k].state.u);
        SpaceTimeSamples samples;
        samples.grid = grid;
        samples.times = {runs[k].state.t};
        samples.fields = {&xi_u.v};
        const HolderEstimate est = holder_seminorm(samples, provider, cfg.holder_alpha, interior, eps,
                                                   20000, cfg.seed);
        norm = std::max(norm, est.norm());
      }
      table.cell(eps).cell(cfg.holder_alpha).cell(norm);
    }
    table.write(out_dir + "/holder.csv");
  }

  // --- barrier certificates -------------------------------------------------
  if (cfg.barrier_enabled) {
    const Expr datum = Expr::parse(cfg.datum);
    const ScalarField phi = sample(grid, [&](const Vec& x) { return datum.eval(x); });
    const double c2 = datum_c2_norm(phi);
    CsvTable table({"boundary_point", "eps", "k", "nu", "rho", "maxQ", "margin", "pass"});
    bool all_pass = true;

    // face centers of the non-periodic box faces
    std::vector<std::pair<Vec, Vec>> points;  // (x0, inward plane normal)
    for (int a = 0; a < grid.dim(); ++a) {
      if (grid.periodic(a)) continue;
      for (int side = 0; side < 2; ++side) {
        std::vector<int> idx(grid.dim());
        for (int b = 0; b < grid.dim(); ++b) idx[b] = grid.shape(b) / 2;
        idx[a] = side == 0 ? 0 : grid.shape(a) - 1;
        Vec x0 = grid.point(grid.index(idx));
        Vec normal(grid.dim(), 0.0);
        normal[a] = side == 0 ? 1.0 : -1.0;
        points.push_back({x0, normal});
      }
    }

    for (const auto& [x0, normal] : points) {
      for (double eps : cfg.eps) {
        if (!(eps > 0.0)) continue;
        BarrierSpec spec;
        spec.x0 = x0;
        spec.plane = normal;
        spec.k = default_barrier_k(c2);
        spec.nu = default_barrier_nu(c2, eps);
        std::vector<const ScalarField*> fields;
        for (std::size_t k = 0; k < cfg.eps.size(); ++k)
          if (cfg.eps[k] == eps) fields.push_back(&runs[k].state.u);
        std::vector<double> candidates;
        for (int c = 1; c <= 8; ++c) candidates.push_back(c * 2.0 * grid.min_spacing());
        spec.rho = calibrate_rho(spec, g, eps, grid, phi, fields, candidates, 0.0);
        if (spec.rho == 0.0) {
          all_pass = false;
          table.cell(std::string("(") + csv_num(x0[0]) + ")").cell(eps).cell(spec.k).cell(spec.nu)
              .cell(0.0).cell(0.0).cell(0.0).cell(std::string("no"));
          continue;
        }
        const CertificateReport rep = certify_subsolution(spec, g, eps, grid, phi, fields);
        all_pass = all_pass && rep.pass;
        std::ostringstream pt;
        pt << '(';
        for (std::size_t a = 0; a < x0.size(); ++a) pt << (a ? " " : "") << csv_num(x0[a]);
        pt << ')';
        table.cell(pt.str()).cell(eps).cell(spec.k).cell(spec.nu).cell(spec.rho).cell(rep.max_Q)
            .cell(rep.max_Q).cell(std::string(rep.pass ? "yes" : "no"));
      }
    }
    table.write(out_dir + "/barrier.csv");
    checks.push_back({"barrier", all_pass, all_pass ? 1.0 : 0.0, 1.0});
  }

  // --- summary --------------------------------------------------------------
  nlohmann::json summary;
  summary["group"] = cfg.group;
  summary["seed"] = cfg.seed;
  summary["eps"] = cfg.eps;
  summary["steady"] = steady;
  bool all_pass = true;
  for (std::size_t k = 0; k < cfg.eps.size(); ++k) {
    nlohmann::json jr;
    jr["eps"] = cfg.eps[k];
    jr["steps"] = runs[k].state.step;
    jr["t_final"] = runs[k].state.t;
    jr["steady"] = runs[k].steady;
    jr["hit_max_steps"] = runs[k].hit_max_steps;
    jr["final_residual"] = runs[k].state.last_residual;
    summary["runs"].push_back(jr);
  }
  for (const detail::InvariantCheck& c : checks) {
    nlohmann::json jc;
    jc["name"] = c.name;
    jc["pass"] = c.pass;
    jc["value"] = c.value;
    jc["threshold"] = c.threshold;
    summary["invariants"].push_back(jc);
    all_pass = all_pass && c.pass;
  }
  summary["pass"] = all_pass;
  write_file_atomic(out_dir + "/summary.json", summary.dump(2) + "\n");

  log::info(std::string("experiment: ") + (all_pass ? "all invariants passed" : "INVARIANT FAILURES"));
  return all_pass ? 0 : 1;
}

}  // namespace mcf

#pragma once

// Estimate-monitoring quantities: gradient sup-norm series against their
// parabolic-boundary reference, residuals of the equations satisfied by right
// derivatives, the Bernstein-type fields w_k^± = ±v_k + delta z, divergence /
// non-divergence consistency, eps sweeps and the terminal minimal-surface
// residual.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcf/flow.hpp"
#include "mcf/grid.hpp"
#include "mcf/group.hpp"
#include "mcf/operators.hpp"

namespace mcf {

// d a_ij / d xi_h for a(xi) = I - xi xi^T / (1+|xi|^2), closed form.
inline double coeff_a_derivative(const Vec& xi, int i, int j, int h) {
  double w2 = 1.0;
  for (double v : xi) w2 += v * v;
  const double di = (i == h) ? xi[j] : 0.0;
  const double dj = (j == h) ? xi[i] : 0.0;
  return -(di + dj) / w2 + 2.0 * xi[i] * xi[j] * xi[h] / (w2 * w2);
}

// a^{ijh} = d a_ij/d p_h - d a_ih/d p_j; antisymmetric in (j,h) by
// construction.
struct Rg1Tensor {
  int n = 0;
  std::vector<double> a;  // [i*n*n + j*n + h]
  double operator()(int i, int j, int h) const {
    return a[(static_cast<std::size_t>(i) * n + j) * n + h];
  }
};

inline Rg1Tensor rg1_coefficients(const Vec& xi) {
  Rg1Tensor t;
  t.n = static_cast<int>(xi.size());
  t.a.resize(static_cast<std::size_t>(t.n) * t.n * t.n);
  for (int i = 0; i < t.n; ++i)
    for (int j = 0; j < t.n; ++j)
      for (int h = 0; h < t.n; ++h)
        t.a[(static_cast<std::size_t>(i) * t.n + j) * t.n + h] =
            coeff_a_derivative(xi, i, j, h) - coeff_a_derivative(xi, i, h, j);
  return t;
}

struct GradientBoundSeries {
  std::vector<double> t;
  std::vector<double> sup_interior;  // sup_K |grad_1 u|
  double reference = 0.0;            // sup_{parabolic boundary} (|grad_1 u| + |du/dt|)
  double max_excess_fraction = 0.0;  // max over steps of sup/reference - 1
  std::vector<long> flagged_steps;   // where the excess passes 5%
};

inline GradientBoundSeries gradient_bound_series(const RunResult& run) {
  GradientBoundSeries out;
  double lateral = 0.0;
  for (const SeriesSample& s : run.series) lateral = std::max(lateral, s.sup_grad1_boundary);
  out.reference = std::max(run.initial_grad1_plus_dt, lateral);
  for (std::size_t k = 0; k < run.series.size(); ++k) {
    out.t.push_back(run.series[k].t);
    out.sup_interior.push_back(run.series[k].sup_grad1_interior);
    if (out.reference > 0.0) {
      const double excess = run.series[k].sup_grad1_interior / out.reference - 1.0;
      out.max_excess_fraction = std::max(out.max_excess_fraction, excess);
      if (excess > 0.05) out.flagged_steps.push_back(static_cast<long>(k));
    }
  }
  return out;
}

namespace detail {

// Right side of the evolution satisfied by v = X_k^r u:
//   a_ij(grad u) X_i X_j v + (d a_ij / d xi_h)(grad u) X_i X_j u X_h v.
inline std::vector<double> right_derivative_rhs(const GroupModel& g, double eps, const ScalarField& u,
                                                const std::vector<double>& v) {
  const FrameCoeffs fc = build_frame_coeffs(g, u.grid, eps);
  const std::size_t size = u.grid.size();
  const int n = g.n;
  OperatorWorkspace ws;
  ws.ensure(n, size);

  coordinate_partials(u.grid, u.v.data(), ws.partials);
  std::vector<std::vector<double>> gu(n, std::vector<double>(size));
  for (int i = 0; i < n; ++i) frame_dot(fc, i, ws.partials, gu[i].data());

  std::vector<std::vector<double>> su(static_cast<std::size_t>(n) * n, std::vector<double>(size));
  for (int j = 0; j < n; ++j) {
    coordinate_partials(u.grid, gu[j].data(), ws.partials2);
    for (int i = 0; i < n; ++i)
      frame_dot(fc, i, ws.partials2, su[static_cast<std::size_t>(i) * n + j].data());
  }

  coordinate_partials(u.grid, v.data(), ws.partials);
  std::vector<std::vector<double>> gv(n, std::vector<double>(size));
  for (int i = 0; i < n; ++i) frame_dot(fc, i, ws.partials, gv[i].data());
  std::vector<std::vector<double>> sv(static_cast<std::size_t>(n) * n, std::vector<double>(size));
  for (int j = 0; j < n; ++j) {
    coordinate_partials(u.grid, gv[j].data(), ws.partials2);
    for (int i = 0; i < n; ++i)
      frame_dot(fc, i, ws.partials2, sv[static_cast<std::size_t>(i) * n + j].data());
  }

  std::vector<double> rhs(size, 0.0);
  Vec xi(n);
  for (std::size_t p = 0; p < size; ++p) {
    double w2 = 1.0;
    for (int i = 0; i < n; ++i) {
      xi[i] = gu[i][p];
      w2 += xi[i] * xi[i];
    }
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double aij = (i == j ? 1.0 : 0.0) - xi[i] * xi[j] / w2;
        acc += aij * sv[static_cast<std::size_t>(i) * n + j][p];
        for (int h = 0; h < n; ++h)
          acc += coeff_a_derivative(xi, i, j, h) * su[static_cast<std::size_t>(i) * n + j][p] * gv[h][p];
      }
    rhs[p] = acc;
  }
  return rhs;
}

}  // namespace detail

// Residual |d/dt (X_k^r u) - rhs|_inf over the interior compact, with d/dt
// taken as the backward difference of the last two fields of the run.
// k = 0 uses v_0 = du/dt estimated from the same pair, which makes the
// residual the time derivative of the equation itself and needs no third
// snapshot because du/dt equals the discrete operator exactly.
inline double right_derivative_residual(const GroupModel& g, double eps, const RunResult& run, int k) {
  if (run.last_dt <= 0.0) throw std::invalid_argument("right_derivative_residual: need two snapshots");
  const Grid& grid = run.state.u.grid;
  const ScalarField& u_new = run.state.u;
  const ScalarField& u_old = run.previous;

  std::vector<double> v_old(grid.size()), v_new(grid.size());
  if (k == 0) {
    OperatorWorkspace ws;
    const FrameCoeffs fc = build_frame_coeffs(g, grid, eps);
    const int active = eps > 0.0 ? g.n : g.m;
    detail::curvature_term_cached(fc, active, u_old.v, ws, v_old);
    detail::curvature_term_cached(fc, active, u_new.v, ws, v_new);
  } else {
    const int idx = k - 1;
    if (idx < 0 || idx >= g.n) throw std::invalid_argument("right_derivative_residual: bad frame index");
    v_old = apply_right_X(g, idx, u_old).v;
    v_new = apply_right_X(g, idx, u_new).v;
  }

  const std::vector<double> rhs = detail::right_derivative_rhs(g, eps, u_old, v_old);
  std::vector<double> res(grid.size());
  for (std::size_t p = 0; p < grid.size(); ++p) res[p] = (v_new[p] - v_old[p]) / run.last_dt - rhs[p];
  return sup_abs_on(grid, res, run.interior);
}

struct BernsteinReport {
  double delta = 0.0;
  std::vector<double> max_deficit;  // per frame index k, worst -L(w_k^±)
  double measured_C = 0.0;          // max_p deficit / (1 + |grad_eps w|^2)
  double z_min = 0.0;               // z is a sum of squares, so this stays >= 0
};

// Builds z = sum_s (X_s^r u)^2 and w_k^± = ±v_k + delta z, evaluates
//   L(w) = -dw/dt + sum_i X_i^eps ( a_ij(grad_eps u) X_j^eps w )
// on the interior compact and reports the smallest C with
// L(w) >= -C (1 + |grad_eps w|^2) over all signs and k.
inline BernsteinReport bernstein_fields(const GroupModel& g, double eps, const RunResult& run,
                                        double delta) {
  if (run.last_dt <= 0.0) throw std::invalid_argument("bernstein_fields: need two snapshots");
  const Grid& grid = run.state.u.grid;
  const std::size_t size = grid.size();
  const int n = g.n;
  const FrameCoeffs fc = build_frame_coeffs(g, grid, eps);
  const FrameCoeffs fr = build_frame_coeffs(g, grid, 1.0, /*right_invariant=*/true);
  OperatorWorkspace ws;
  ws.ensure(n, size);

  BernsteinReport rep;
  rep.delta = delta;
  rep.max_deficit.assign(n, 0.0);

  auto right_gradient = [&](const std::vector<double>& f) {
    coordinate_partials(grid, f.data(), ws.partials);
    std::vector<std::vector<double>> out(n, std::vector<double>(size));
    for (int i = 0; i < n; ++i) frame_dot(fr, i, ws.partials, out[i].data());
    return out;
  };

  const auto vr_old = right_gradient(run.previous.v);
  const auto vr_new = right_gradient(run.state.u.v);
  std::vector<double> z_old(size, 0.0), z_new(size, 0.0);
  for (int s = 0; s < n; ++s)
    for (std::size_t p = 0; p < size; ++p) {
      z_old[p] += vr_old[s][p] * vr_old[s][p];
      z_new[p] += vr_new[s][p] * vr_new[s][p];
    }
  rep.z_min = *std::min_element(z_new.begin(), z_new.end());

  // coefficients a_ij evaluated on the OLD field's gradient
  coordinate_partials(grid, run.previous.v.data(), ws.partials);
  std::vector<std::vector<double>> gu(n, std::vector<double>(size));
  for (int i = 0; i < n; ++i) frame_dot(fc, i, ws.partials, gu[i].data());

  std::vector<double> w_old(size), w_new(size), flux(size), Lw(size), gw2(size);
  std::vector<std::vector<double>> gw(n, std::vector<double>(size));
  for (int k = 0; k < n; ++k) {
    for (double sign : {+1.0, -1.0}) {
      for (std::size_t p = 0; p < size; ++p) {
        w_old[p] = sign * vr_old[k][p] + delta * z_old[p];
        w_new[p] = sign * vr_new[k][p] + delta * z_new[p];
      }
      // gradient of w and divergence-form term, on the old field
      coordinate_partials(grid, w_old.data(), ws.partials);
      for (int i = 0; i < n; ++i) frame_dot(fc, i, ws.partials, gw[i].data());
      for (std::size_t p = 0; p < size; ++p) {
        gw2[p] = 0.0;
        for (int i = 0; i < n; ++i) gw2[p] += gw[i][p] * gw[i][p];
      }
      Lw.assign(size, 0.0);
      for (int i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < size; ++p) {
          double w2 = 1.0, acc = 0.0;
          for (int s = 0; s < n; ++s) w2 += gu[s][p] * gu[s][p];
          for (int j = 0; j < n; ++j)
            acc += ((i == j ? 1.0 : 0.0) - gu[i][p] * gu[j][p] / w2) * gw[j][p];
          flux[p] = acc;
        }
        coordinate_partials(grid, flux.data(), ws.partials2);
        frame_dot(fc, i, ws.partials2, flux.data());
        for (std::size_t p = 0; p < size; ++p) Lw[p] += flux[p];
      }
      double deficit = 0.0, measured = rep.measured_C;
      for (std::size_t p = 0; p < size; ++p) {
        if (!run.interior.contains(grid, p)) continue;
        const double L = -(w_new[p] - w_old[p]) / run.last_dt + Lw[p];
        const double d = std::max(0.0, -L);
        deficit = std::max(deficit, d);
        measured = std::max(measured, d / (1.0 + gw2[p]));
      }
      rep.max_deficit[k] = std::max(rep.max_deficit[k], deficit);
      rep.measured_C = measured;
    }
  }
  return rep;
}

// Sup-norm gap between the divergence and non-divergence forms on the
// interior compact; O(h) on smooth fields.
inline double divergence_consistency(const GroupModel& g, double eps, const ScalarField& u,
                                     const IndexBox& region) {
  const ScalarField a = mean_curvature_term(g, eps, u);
  const ScalarField b = divergence_form_term(g, eps, u);
  std::vector<double> gap(u.grid.size());
  for (std::size_t p = 0; p < u.grid.size(); ++p) gap[p] = a.v[p] - b.v[p];
  return sup_abs_on(u.grid, gap, region);
}

struct EpsStudyRow {
  double eps_hi = 0.0, eps_lo = 0.0;
  double t = 0.0;
  double gap = 0.0;
};

struct EpsStudy {
  std::vector<EpsStudyRow> rows;  // consecutive-pair gaps at each checkpoint
  bool cauchy = true;             // gaps strictly decreasing along the sweep
  double gap_last_to_eps0 = -1.0; // |u_{eps_min} - u_{eps=0}| if an eps=0 run is given
};

// Gaps |u_eps - u_eps'| on the interior compact at common checkpoint times.
// `runs` must be ordered by strictly decreasing eps; `eps0_run` optionally
// supplies the direct eps = 0 solution.
inline EpsStudy eps_limit_study(const std::vector<double>& eps_list,
                                const std::vector<const RunResult*>& runs, const IndexBox& region,
                                const RunResult* eps0_run = nullptr) {
  if (eps_list.size() != runs.size() || runs.size() < 2)
    throw std::invalid_argument("eps_limit_study: need >= 2 runs with matching eps list");
  EpsStudy out;
  const std::size_t nsnap = runs[0]->snapshots.size();
  for (const RunResult* r : runs)
    if (r->snapshots.size() != nsnap) throw std::invalid_argument("eps_limit_study: snapshot count mismatch");

  for (std::size_t s = 0; s < nsnap; ++s) {
    for (std::size_t k = 0; k + 1 < runs.size(); ++k) {
      const ScalarField& a = runs[k]->snapshots[s].field;
      const ScalarField& b = runs[k + 1]->snapshots[s].field;
      std::vector<double> diff(a.v.size());
      for (std::size_t p = 0; p < a.v.size(); ++p) diff[p] = a.v[p] - b.v[p];
      EpsStudyRow row;
      row.eps_hi = eps_list[k];
      row.eps_lo = eps_list[k + 1];
      row.t = runs[k]->snapshots[s].t;
      row.gap = sup_abs_on(a.grid, diff, region);
      out.rows.push_back(row);
    }
  }
  // Cauchy check on the last checkpoint
  if (nsnap > 0) {
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < runs.size(); ++k) {
      const EpsStudyRow& row = out.rows[(nsnap - 1) * (runs.size() - 1) + k];
      if (row.gap >= prev) out.cauchy = false;
      prev = row.gap;
    }
  }
  if (eps0_run) {
    const ScalarField& a = runs.back()->state.u;
    const ScalarField& b = eps0_run->state.u;
    std::vector<double> diff(a.v.size());
    for (std::size_t p = 0; p < a.v.size(); ++p) diff[p] = a.v[p] - b.v[p];
    out.gap_last_to_eps0 = sup_abs_on(a.grid, diff, region);
  }
  return out;
}

// |sum_ij a_ij X_i X_j u|_inf on the interior compact of a steady run.
inline double minimal_surface_residual(const GroupModel& g, double eps, const RunResult& run) {
  if (!run.steady) throw std::invalid_argument("minimal_surface_residual: run did not reach steady state");
  const ScalarField r = mean_curvature_term(g, eps, run.state.u);
  return sup_abs_on(r.grid, r.v, run.interior);
}

}  // namespace mcf

#pragma once

// Explicit-Euler time stepping of the initial-boundary value problem
//   du/dt = sum_ij a_ij(grad_eps u) X_i^eps X_j^eps u   in Omega x (0,T)
//   u = phi                                             on the parabolic boundary,
// with CFL control, steady-state detection, exact-time snapshots and per-step
// monitoring of the quantities the estimates are stated in.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcf/grid.hpp"
#include "mcf/group.hpp"
#include "mcf/operators.hpp"

namespace mcf {

struct FlowProblem {
  GroupModel group;
  double eps = 1.0;
  Grid grid;
  ScalarField phi;                     // boundary and (default) initial datum
  std::optional<ScalarField> initial;  // interior override; boundary forced to phi
  double T = std::numeric_limits<double>::infinity();
  bool steady_mode = false;  // stop once the time derivative is small
  double steady_tol = 1e-7;
  double cfl_safety = 0.8;
  long max_steps = 1000000;
  std::vector<double> snapshot_times;  // ascending; hit exactly by dt clamping
  int record_every = 1;

  void validate() const {
    if (grid.dim() != group.n) throw std::invalid_argument("flow: grid dimension != group dimension");
    if (!(eps >= 0.0 && eps <= 1.0)) throw std::invalid_argument("flow: eps outside [0,1]");
    if (!(cfl_safety > 0.0 && cfl_safety <= 1.0)) throw std::invalid_argument("flow: cfl_safety outside (0,1]");
    if (!all_finite(phi.v)) throw std::invalid_argument("flow: datum not finite");
    if (!phi.grid.same_layout(grid)) throw std::invalid_argument("flow: datum grid mismatch");
    for (int a = 0; a < grid.dim(); ++a) {
      const bool want = group.axis_periodic(a);
      if (grid.periodic(a) != want)
        throw std::invalid_argument("flow: periodic flags must match the group chart");
      if (want) {
        double period = 0.0;
        for (std::size_t k = 0; k < group.periodic_axes.size(); ++k)
          if (group.periodic_axes[k] == a) period = group.periods[k];
        if (std::fabs((grid.hi(a) - grid.lo(a)) - period) > 1e-12)
          throw std::invalid_argument("flow: periodic axis extent must equal the chart period");
      }
    }
  }
};

struct FlowState {
  ScalarField u;
  double t = 0.0;
  long step = 0;
  double last_residual = std::numeric_limits<double>::infinity();
};

struct SeriesSample {
  double t = 0.0;
  double sup_grad_eps = 0.0;        // |grad_eps u| sup over the interior compact
  double sup_grad1_interior = 0.0;  // full sigma_1 gradient, interior compact
  double sup_grad1_boundary = 0.0;  // full sigma_1 gradient on the lateral boundary
  double sup_dt = 0.0;              // |u_new - u|_inf / dt over updated points
  double max_principle_violation = 0.0;
};

struct Snapshot {
  double t = 0.0;
  ScalarField field;
};

struct RunResult {
  FlowState state;       // terminal
  ScalarField previous;  // field one step before terminal
  double last_dt = 0.0;
  bool steady = false;
  bool hit_max_steps = false;
  std::vector<Snapshot> snapshots;
  std::vector<SeriesSample> series;
  double datum_min = 0.0, datum_max = 0.0;
  double initial_grad1_plus_dt = 0.0;  // sup over the initial slice of |grad_1 u| + |du/dt|
  IndexBox interior;
};

struct NanAbort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// dt = cfl * h_min^2 / (2 * sum_i sup|c_i|^2), using that the a_ij spectrum is
// bounded by 1. Frame sup-norms carry the eps scaling, so shrinking eps never
// shrinks dt.
inline double cfl_dt(const FlowProblem& p, const FrameCoeffs& fc) {
  double denom = 0.0;
  for (int i = 0; i < fc.n; ++i) denom += fc.sup_norm[i] * fc.sup_norm[i];
  const double h = p.grid.min_spacing();
  const double dt = p.cfl_safety * h * h / (2.0 * denom);
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::runtime_error("cfl_dt: degenerate time step");
  return dt;
}

inline double cfl_dt(const FlowProblem& p) {
  return cfl_dt(p, build_frame_coeffs(p.group, p.grid, p.eps));
}

namespace detail {

struct Stepper {
  const FlowProblem* prob;
  FrameCoeffs fc;   // frame at the run's eps
  FrameCoeffs fc1;  // sigma_1 frame for gradient monitoring
  int active;
  OperatorWorkspace ws;
  std::vector<double> rate;
  std::vector<std::uint8_t> is_boundary;
  std::vector<std::uint8_t> in_interior;  // membership in the interior compact
  std::vector<std::size_t> boundary_pts;
  IndexBox interior;
  double dt_cfl;

  explicit Stepper(const FlowProblem& p)
      : prob(&p),
        fc(build_frame_coeffs(p.group, p.grid, p.eps)),
        fc1(build_frame_coeffs(p.group, p.grid, 1.0)),
        active(p.eps > 0.0 ? p.group.n : p.group.m),
        interior(interior_box(p.grid)) {
    is_boundary.assign(p.grid.size(), 0);
    in_interior.assign(p.grid.size(), 0);
    for (std::size_t q = 0; q < p.grid.size(); ++q) {
      if (p.grid.on_boundary(q)) {
        is_boundary[q] = 1;
        boundary_pts.push_back(q);
      }
      if (interior.contains(p.grid, q)) in_interior[q] = 1;
    }
    dt_cfl = cfl_dt(p, fc);
  }

  // Advances u by dt; returns sup |du/dt| over updated points. On return
  // ws.partials / ws.first hold the partials and frame gradient of the OLD field.
  double advance(std::vector<double>& u, double dt) {
    curvature_term_cached(fc, active, u, ws, rate);
    double res = 0.0;
    for (std::size_t q = 0; q < u.size(); ++q) {
      if (is_boundary[q]) continue;
      res = std::max(res, std::fabs(rate[q]));
      u[q] += dt * rate[q];
    }
    return res;
  }

  double grad1_at(std::size_t q) const {
    double s = 0.0;
    for (int i = 0; i < fc1.n; ++i) {
      double d = 0.0;
      for (int a = 0; a < fc1.n; ++a) d += fc1.coef(i, a)[q] * ws.partials[a][q];
      s += d * d;
    }
    return std::sqrt(s);
  }
  double grad1_sup_boundary() const {
    double m = 0.0;
    for (std::size_t q : boundary_pts) m = std::max(m, grad1_at(q));
    return m;
  }
  double grad1_sup_interior() const {
    double m = 0.0;
    for (std::size_t q = 0; q < prob->grid.size(); ++q)
      if (in_interior[q]) m = std::max(m, grad1_at(q));
    return m;
  }
  double grad_eps_sup_interior() const {
    double m = 0.0;
    for (std::size_t q = 0; q < prob->grid.size(); ++q) {
      if (!in_interior[q]) continue;
      double s = 0.0;
      for (int i = 0; i < active; ++i) s += ws.first[i][q] * ws.first[i][q];
      m = std::max(m, s);
    }
    return std::sqrt(m);
  }
};

}  // namespace detail

inline RunResult run(const FlowProblem& p) {
  p.validate();
  RunResult out;
  detail::Stepper st(p);
  const Grid& g = p.grid;

  ScalarField u = p.initial ? *p.initial : p.phi;
  if (p.initial) {
    if (!p.initial->grid.same_layout(g)) throw std::invalid_argument("flow: initial field grid mismatch");
    for (std::size_t q : st.boundary_pts) u.v[q] = p.phi.v[q];  // datum wins on the boundary
  }

  out.datum_min = *std::min_element(p.phi.v.begin(), p.phi.v.end());
  out.datum_max = *std::max_element(p.phi.v.begin(), p.phi.v.end());
  out.interior = st.interior;

  // Reference for the gradient bound: sup over the parabolic boundary of
  // |grad_1 u| + |du/dt|. On the initial slice both terms contribute; on the
  // lateral boundary the datum is constant in time, so only |grad_1 u| does
  // (tracked per step below).
  {
    OperatorWorkspace tmp;
    std::vector<double> rate0;
    detail::curvature_term_cached(st.fc, st.active, u.v, tmp, rate0);
    double ref = 0.0;
    for (std::size_t q = 0; q < g.size(); ++q) {
      double s = 0.0;
      for (int i = 0; i < st.fc1.n; ++i) {
        double d = 0.0;
        for (int a = 0; a < st.fc1.n; ++a) d += st.fc1.coef(i, a)[q] * tmp.partials[a][q];
        s += d * d;
      }
      ref = std::max(ref, std::sqrt(s) + std::fabs(rate0[q]));
    }
    out.initial_grad1_plus_dt = ref;
  }

  double t = 0.0;
  long step = 0;
  std::size_t next_snap = 0;
  double last_res = std::numeric_limits<double>::infinity();
  double last_dt = 0.0;
  ScalarField prev = u;

  auto record_snapshots_due = [&]() {
    while (next_snap < p.snapshot_times.size() && p.snapshot_times[next_snap] <= t + 1e-14)
      out.snapshots.push_back({p.snapshot_times[next_snap++], u});
  };
  record_snapshots_due();

  while (true) {
    if (t >= p.T - 1e-14) break;
    if (p.steady_mode && last_res < p.steady_tol) {
      out.steady = true;
      break;
    }
    if (step >= p.max_steps) {
      out.hit_max_steps = true;
      break;
    }

    double dt = st.dt_cfl;
    if (std::isfinite(p.T)) dt = std::min(dt, p.T - t);
    if (next_snap < p.snapshot_times.size()) dt = std::min(dt, p.snapshot_times[next_snap] - t);

    prev.v = u.v;
    last_res = st.advance(u.v, dt);
    last_dt = dt;
    t += dt;
    ++step;

    if (!all_finite(u.v))
      throw NanAbort("flow: non-finite field at step " + std::to_string(step) + ", t = " +
                     std::to_string(t) + " (CFL violation or datum pathology)");

    if (step % p.record_every == 0 || step == 1) {
      SeriesSample s;
      s.t = t;
      s.sup_dt = last_res;
      s.sup_grad_eps = st.grad_eps_sup_interior();
      s.sup_grad1_interior = st.grad1_sup_interior();
      s.sup_grad1_boundary = st.grad1_sup_boundary();
      double viol = 0.0;
      for (double v : u.v) viol = std::max(viol, std::max(v - out.datum_max, out.datum_min - v));
      s.max_principle_violation = std::max(0.0, viol);
      out.series.push_back(s);
    }
    record_snapshots_due();
  }

  out.state = FlowState{std::move(u), t, step, last_res};
  out.previous = std::move(prev);
  out.last_dt = last_dt;
  return out;
}

// One explicit step at the CFL dt; mirrors the loop body of run() for callers
// that drive the evolution themselves.
inline FlowState step(const FlowProblem& p, const FlowState& s) {
  detail::Stepper st(p);
  FlowState next;
  next.u = s.u;
  next.last_residual = st.advance(next.u.v, st.dt_cfl);
  next.t = s.t + st.dt_cfl;
  next.step = s.step + 1;
  if (!all_finite(next.u.v)) throw NanAbort("flow: non-finite field after step");
  return next;
}

struct CompareReport {
  double max_order_violation = 0.0;  // sup over steps of max(u_low - u_high)
  double max_range_violation = 0.0;  // worst range-bound violation of either run
  long steps = 0;
  double t = 0.0;
};

// Evolves two problems with datum(p) <= datum(q) pointwise in lockstep and
// reports the worst ordering / range-bound violations over all steps.
inline CompareReport compare_runs(const FlowProblem& p, const FlowProblem& q, double T) {
  p.validate();
  q.validate();
  if (!p.grid.same_layout(q.grid) || p.eps != q.eps || p.group.name != q.group.name)
    throw std::invalid_argument("compare_runs: problems not comparable");
  for (std::size_t k = 0; k < p.phi.v.size(); ++k)
    if (p.phi.v[k] > q.phi.v[k] + 1e-15) throw std::invalid_argument("compare_runs: data not ordered");

  detail::Stepper sp(p), sq(q);
  const double dt = std::min(sp.dt_cfl, sq.dt_cfl);
  ScalarField up = p.initial ? *p.initial : p.phi;
  ScalarField uq = q.initial ? *q.initial : q.phi;

  const double pmin = *std::min_element(p.phi.v.begin(), p.phi.v.end());
  const double pmax = *std::max_element(p.phi.v.begin(), p.phi.v.end());
  const double qmin = *std::min_element(q.phi.v.begin(), q.phi.v.end());
  const double qmax = *std::max_element(q.phi.v.begin(), q.phi.v.end());

  CompareReport rep;
  double t = 0.0;
  while (t < T - 1e-14) {
    const double step_dt = std::min(dt, T - t);
    sp.advance(up.v, step_dt);
    sq.advance(uq.v, step_dt);
    t += step_dt;
    ++rep.steps;
    double viol = 0.0, range = 0.0;
    for (std::size_t k = 0; k < up.v.size(); ++k) {
      viol = std::max(viol, up.v[k] - uq.v[k]);
      range = std::max({range, up.v[k] - pmax, pmin - up.v[k], uq.v[k] - qmax, qmin - uq.v[k]});
    }
    rep.max_order_violation = std::max(rep.max_order_violation, viol);
    rep.max_range_violation = std::max(rep.max_range_violation, std::max(0.0, range));
  }
  rep.t = t;
  return rep;
}

}  // namespace mcf

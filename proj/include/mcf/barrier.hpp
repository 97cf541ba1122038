#pragma once

// Boundary barriers w = psi(Pi) at a boundary point x0, where Pi is a
// normalized linear function of the exponential coordinates centered at x0
// that is nonnegative on the domain (the supporting-plane condition of a
// convex domain), and psi(s) = log(1+ks)/nu solves psi'' + nu (psi')^2 = 0.
//
// certify_subsolution evaluates the parabolic operator
//   Q(w) = a_ij(grad w + grad phi) X_i X_j w + a_ij(grad w + grad phi) X_i X_j phi
// (the barrier is time independent) on a neighborhood of x0 and reports the
// worst value; a negative certificate together with w >= u - phi on the
// neighborhood rim forces the boundary gradient bound
//   (u - phi)(x) / dist_{sigma_1}(x, x0) <= k/nu.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mcf/flow.hpp"
#include "mcf/grid.hpp"
#include "mcf/group.hpp"
#include "mcf/metric.hpp"
#include "mcf/operators.hpp"

namespace mcf {

inline double psi(double s, double k, double nu) {
  const double arg = 1.0 + k * s;
  if (!(arg > 0.0)) throw std::domain_error("psi: 1 + k*s must be positive");
  return std::log(arg) / nu;
}
inline double psi_prime(double s, double k, double nu) { return k / (nu * (1.0 + k * s)); }
inline double psi_second(double s, double k, double nu) {
  const double d = 1.0 + k * s;
  return -k * k / (nu * d * d);
}

struct BarrierSpec {
  Vec x0;          // boundary point, on the grid
  Vec plane;       // coefficients a_i of Pi in centered exponential coordinates
  double k = 1.0;  // slope parameter, > 0
  double nu = 1.0; // exponent parameter, > 0
  double rho = 0.0;  // neighborhood radius (chart Euclidean); 0 = calibrate

  void validate(int n) const {
    if (static_cast<int>(x0.size()) != n || static_cast<int>(plane.size()) != n)
      throw std::invalid_argument("barrier: point/plane dimension mismatch");
    double s = 0.0;
    for (double a : plane) s += a * a;
    if (std::fabs(s - 1.0) > 1e-9) throw std::invalid_argument("barrier: plane coefficients not normalized");
    if (!(k > 0.0) || !(nu > 0.0)) throw std::invalid_argument("barrier: k, nu must be positive");
  }
};

// Discrete C^2 norm of the datum: sup|phi| + sup|D phi| + sup|D^2 phi| with
// coordinate derivatives.
inline double datum_c2_norm(const ScalarField& phi) {
  const Grid& g = phi.grid;
  OperatorWorkspace ws;
  ws.ensure(g.dim(), g.size());
  coordinate_partials(g, phi.v.data(), ws.partials);
  double sup0 = 0.0, sup1 = 0.0, sup2 = 0.0;
  for (std::size_t p = 0; p < g.size(); ++p) {
    sup0 = std::max(sup0, std::fabs(phi.v[p]));
    double s = 0.0;
    for (int a = 0; a < g.dim(); ++a) s += ws.partials[a][p] * ws.partials[a][p];
    sup1 = std::max(sup1, s);
  }
  sup1 = std::sqrt(sup1);
  std::vector<std::vector<double>> hess_sq(1, std::vector<double>(g.size(), 0.0));
  std::vector<double> second(g.size());
  for (int a = 0; a < g.dim(); ++a) {
    for (int b = 0; b < g.dim(); ++b) {
      axis_derivative(g, ws.partials[a].data(), b, second.data());
      for (std::size_t p = 0; p < g.size(); ++p) hess_sq[0][p] += second[p] * second[p];
    }
  }
  for (std::size_t p = 0; p < g.size(); ++p) sup2 = std::max(sup2, hess_sq[0][p]);
  return sup0 + sup1 + std::sqrt(sup2);
}

// Defaults chosen so the subsolution inequality has slack across the eps sweep.
inline double default_barrier_k(double c2) { return 4.0 * (1.0 + c2); }
inline double default_barrier_nu(double c2, double eps) {
  return 1.0 / (2.0 * (1.0 + c2) * (1.0 + c2) * eps * eps);
}

// Pi(x) = sum_i a_i u_i(x) with u the exponential coordinates centered at x0.
inline ScalarField plane_field(const GroupModel& g, const Grid& grid, const BarrierSpec& spec) {
  ScalarField pi(grid);
  const Vec x0_inv = g.inverse(spec.x0);
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const Vec u = g.log_map(g.product(x0_inv, grid.point(p)));
    double s = 0.0;
    for (int i = 0; i < g.n; ++i) s += spec.plane[i] * u[i];
    pi.v[p] = s;
  }
  return pi;
}

// w = psi(Pi) sampled on the grid. Values where Pi <= -1/k would leave the
// domain of psi; that happening inside the certification neighborhood signals
// a neighborhood that is too large, so it is left to the caller to keep rho
// small --- here such points are clamped to +inf so they can never certify.
inline ScalarField build_barrier(const BarrierSpec& spec, const GroupModel& g, double /*eps*/,
                                 const Grid& grid) {
  spec.validate(g.n);
  const ScalarField pi = plane_field(g, grid, spec);
  ScalarField w(grid);
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const double arg = 1.0 + spec.k * pi.v[p];
    w.v[p] = arg > 0.0 ? std::log(arg) / spec.nu : std::numeric_limits<double>::infinity();
  }
  return w;
}

struct CertificateReport {
  double max_Q = 0.0;          // sup of Q(w) over the neighborhood
  double psi_term_sup = 0.0;   // sup |a_ij X_i X_j Pi| (vanishes for flat planes)
  double rim_violation = 0.0;  // max over rim and times of (u - phi) - w
  double rho = 0.0;
  double k = 0.0, nu = 0.0;
  std::size_t points = 0;
  bool pass = false;
};

namespace detail {

inline std::vector<std::size_t> chart_ball(const Grid& grid, const Vec& x0, double rho,
                                           bool interior_only) {
  std::vector<std::size_t> pts;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    if (interior_only && grid.on_boundary(p)) continue;
    const Vec x = grid.point(p);
    double s = 0.0;
    for (std::size_t a = 0; a < x.size(); ++a) {
      const double d = x[a] - x0[a];
      s += d * d;
    }
    if (std::sqrt(s) <= rho) pts.push_back(p);
  }
  return pts;
}

}  // namespace detail

// Evaluates Q(w) over the chart ball of radius rho around x0 (interior points
// only) and checks barrier domination w >= v on the rim of the neighborhood,
// for v = u - phi from each supplied field u.
inline CertificateReport certify_subsolution(const BarrierSpec& spec, const GroupModel& g, double eps,
                                             const Grid& grid, const ScalarField& phi,
                                             const std::vector<const ScalarField*>& run_fields) {
  spec.validate(g.n);
  if (!(eps > 0.0)) throw std::invalid_argument("certify_subsolution: eps must be positive");

  const ScalarField pi = plane_field(g, grid, spec);
  const ScalarField w = build_barrier(spec, g, eps, grid);
  const FrameCoeffs fc = build_frame_coeffs(g, grid, eps);
  const std::size_t size = grid.size();

  OperatorWorkspace ws;
  ws.ensure(g.n, size);

  // frame gradients and second frame derivatives of w, phi and Pi
  auto frame_fields = [&](const std::vector<double>& f, std::vector<std::vector<double>>& grad,
                          std::vector<std::vector<double>>& second) {
    coordinate_partials(grid, f.data(), ws.partials);
    grad.assign(g.n, std::vector<double>(size));
    for (int i = 0; i < g.n; ++i) frame_dot(fc, i, ws.partials, grad[i].data());
    second.assign(static_cast<std::size_t>(g.n) * g.n, std::vector<double>(size));
    for (int j = 0; j < g.n; ++j) {
      coordinate_partials(grid, grad[j].data(), ws.partials2);
      for (int i = 0; i < g.n; ++i)
        frame_dot(fc, i, ws.partials2, second[static_cast<std::size_t>(i) * g.n + j].data());
    }
  };

  std::vector<std::vector<double>> gw, sw, gphi, sphi, gpi, spi;
  frame_fields(w.v, gw, sw);
  frame_fields(phi.v, gphi, sphi);
  frame_fields(pi.v, gpi, spi);

  CertificateReport rep;
  rep.rho = spec.rho;
  rep.k = spec.k;
  rep.nu = spec.nu;

  const auto pts = detail::chart_ball(grid, spec.x0, spec.rho, /*interior_only=*/true);
  if (pts.empty()) throw std::invalid_argument("certify_subsolution: neighborhood contains no interior points");
  rep.points = pts.size();

  double maxQ = -std::numeric_limits<double>::infinity();
  double psi_term = 0.0;
  Vec xi(g.n);
  for (std::size_t p : pts) {
    if (!std::isfinite(w.v[p])) throw std::invalid_argument("certify_subsolution: psi domain violated; shrink rho");
    double w2 = 1.0;
    for (int i = 0; i < g.n; ++i) {
      xi[i] = gw[i][p] + gphi[i][p];
      w2 += xi[i] * xi[i];
    }
    double Q = 0.0, flat = 0.0;
    for (int i = 0; i < g.n; ++i)
      for (int j = 0; j < g.n; ++j) {
        const double aij = (i == j ? 1.0 : 0.0) - xi[i] * xi[j] / w2;
        Q += aij * (sw[static_cast<std::size_t>(i) * g.n + j][p] + sphi[static_cast<std::size_t>(i) * g.n + j][p]);
        flat += aij * spi[static_cast<std::size_t>(i) * g.n + j][p];
      }
    maxQ = std::max(maxQ, Q);
    psi_term = std::max(psi_term, std::fabs(flat));
  }
  rep.max_Q = maxQ;
  rep.psi_term_sup = psi_term;

  // Rim of the neighborhood: points within one stencil layer of rho. The
  // initial slice is covered since v(.,0) = 0 <= w wherever Pi >= 0.
  double hmax = 0.0;
  for (int a = 0; a < grid.dim(); ++a) hmax = std::max(hmax, grid.spacing(a));
  const auto ball_plus = detail::chart_ball(grid, spec.x0, spec.rho, false);
  double rim_violation = 0.0;
  for (std::size_t p : ball_plus) {
    const Vec x = grid.point(p);
    double s = 0.0;
    for (std::size_t a = 0; a < x.size(); ++a) {
      const double d = x[a] - spec.x0[a];
      s += d * d;
    }
    if (std::sqrt(s) < spec.rho - 1.5 * hmax) continue;  // keep only the rim shell
    for (const ScalarField* u : run_fields)
      rim_violation = std::max(rim_violation, (u->v[p] - phi.v[p]) - w.v[p]);
  }
  rep.rim_violation = std::max(0.0, rim_violation);

  rep.pass = (rep.max_Q < 0.0) && (rep.rim_violation <= 1e-10);
  return rep;
}

// Largest radius from `candidates` whose certificate margin stays below
// margin_target; returns 0 if none qualifies.
inline double calibrate_rho(BarrierSpec spec, const GroupModel& g, double eps, const Grid& grid,
                            const ScalarField& phi, const std::vector<const ScalarField*>& run_fields,
                            const std::vector<double>& candidates, double margin_target) {
  double best = 0.0;
  for (double rho : candidates) {
    spec.rho = rho;
    try {
      const CertificateReport rep = certify_subsolution(spec, g, eps, grid, phi, run_fields);
      if (rep.max_Q <= margin_target && rep.rim_violation <= 1e-10) best = std::max(best, rho);
    } catch (const std::invalid_argument&) {
      continue;  // no interior points yet, or psi domain exceeded
    }
  }
  return best;
}

struct GradientBoundReport {
  double max_ratio = 0.0;  // max over points/times of (u - phi)/dist_sigma1
  double bound = 0.0;      // k/nu
  bool pass = false;
};

// Checks (u - phi)(x,t) / dist_{sigma_1}(x,x0) <= k/nu on the certified
// neighborhood, using the lattice sigma_1 distance from x0.
inline GradientBoundReport boundary_gradient_check(const BarrierSpec& spec, const Grid& grid,
                                                   const ScalarField& phi,
                                                   const std::vector<const ScalarField*>& run_fields,
                                                   const DistanceField& dist_sigma1) {
  GradientBoundReport rep;
  rep.bound = spec.k / spec.nu;
  const auto pts = detail::chart_ball(grid, spec.x0, spec.rho, false);
  for (std::size_t p : pts) {
    if (!(dist_sigma1.d[p] > 0.0)) continue;
    for (const ScalarField* u : run_fields)
      rep.max_ratio = std::max(rep.max_ratio, (u->v[p] - phi.v[p]) / dist_sigma1.d[p]);
  }
  rep.pass = rep.max_ratio <= rep.bound;
  return rep;
}

}  // namespace mcf

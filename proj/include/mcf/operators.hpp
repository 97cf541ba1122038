#pragma once

// Discrete realizations of the frame derivatives X_i^eps, their compositions,
// the gradient, the quasilinear coefficients a_ij, and the mean curvature
// operator on grids.
//
// Coordinate partials use centered second-order differences in the interior
// and second-order one-sided formulas on non-periodic boundary faces, so all
// first and second frame derivatives are exact on polynomials of coordinate
// degree <= 2 whenever the frame coefficients are affine. Second derivatives
// X_i X_j are realized as the composition of two first-derivative sweeps, the
// inner one evaluated everywhere (boundary layers one-sided).

#include <cmath>
#include <stdexcept>
#include <vector>

#include "mcf/grid.hpp"
#include "mcf/group.hpp"

namespace mcf {

// d/dx_a of u, second order.
inline void axis_derivative(const Grid& g, const double* u, int axis, double* out) {
  const int na = g.shape(axis);
  const std::size_t sa = g.stride(axis);
  const double inv2h = 1.0 / (2.0 * g.spacing(axis));
  const std::size_t lines = g.size() / static_cast<std::size_t>(na);

  // Enumerate base points of lines along `axis` with an odometer over the
  // remaining axes.
  std::vector<int> idx(g.dim(), 0);
  for (std::size_t line = 0; line < lines; ++line) {
    std::size_t base = 0;
    for (int a = 0; a < g.dim(); ++a) base += g.stride(a) * static_cast<std::size_t>(idx[a]);

    if (g.periodic(axis)) {
      for (int i = 0; i < na; ++i) {
        const int ip = (i + 1 == na) ? 0 : i + 1;
        const int im = (i == 0) ? na - 1 : i - 1;
        out[base + sa * i] = (u[base + sa * ip] - u[base + sa * im]) * inv2h;
      }
    } else {
      out[base] = (-3.0 * u[base] + 4.0 * u[base + sa] - u[base + 2 * sa]) * inv2h;
      for (int i = 1; i < na - 1; ++i)
        out[base + sa * i] = (u[base + sa * (i + 1)] - u[base + sa * (i - 1)]) * inv2h;
      const std::size_t e = base + sa * (na - 1);
      out[e] = (3.0 * u[e] - 4.0 * u[e - sa] + u[e - 2 * sa]) * inv2h;
    }

    for (int a = g.dim() - 1; a >= 0; --a) {
      if (a == axis) continue;
      if (++idx[a] < g.shape(a)) break;
      idx[a] = 0;
    }
  }
}

// Frame coefficient fields evaluated once per (model, grid, eps, side).
// coef(i,a)[p] is the coordinate-a coefficient of X_i^eps at grid point p;
// degree-2 columns carry the eps scaling (zero at eps = 0).
struct FrameCoeffs {
  Grid grid;
  int n = 0;
  double eps = 1.0;
  std::vector<std::vector<double>> c;  // [i*dim + a] -> field
  std::vector<double> sup_norm;        // per frame index, sup_p |c_i(p)|_2

  const std::vector<double>& coef(int i, int a) const { return c[static_cast<std::size_t>(i) * n + a]; }
};

inline FrameCoeffs build_frame_coeffs(const GroupModel& g, const Grid& grid, double eps,
                                      bool right_invariant = false) {
  if (grid.dim() != g.n) throw std::invalid_argument("frame coeffs: grid dimension != group dimension");
  FrameCoeffs fc;
  fc.grid = grid;
  fc.n = g.n;
  fc.eps = eps;
  fc.c.assign(static_cast<std::size_t>(g.n) * g.n, std::vector<double>(grid.size()));
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const Vec x = grid.point(p);
    const Mat A = right_invariant ? g.right_frame(x) : g.left_frame(x);
    for (int i = 0; i < g.n; ++i) {
      const double scale = (!right_invariant && i >= g.m) ? eps : 1.0;
      for (int a = 0; a < g.n; ++a) fc.c[static_cast<std::size_t>(i) * g.n + a][p] = scale * A(a, i);
    }
  }
  fc.sup_norm.assign(g.n, 0.0);
  for (int i = 0; i < g.n; ++i)
    for (std::size_t p = 0; p < grid.size(); ++p) {
      double s = 0.0;
      for (int a = 0; a < g.n; ++a) {
        const double v = fc.coef(i, a)[p];
        s += v * v;
      }
      fc.sup_norm[i] = std::max(fc.sup_norm[i], std::sqrt(s));
    }
  return fc;
}

// Scratch buffers reused across operator applications. After a call to
// curvature_term_cached, `partials` holds the coordinate partials of u and
// `first` its frame gradient, which step-level diagnostics reuse.
struct OperatorWorkspace {
  std::vector<std::vector<double>> partials;   // dim fields: d_a u
  std::vector<std::vector<double>> partials2;  // dim fields: d_a (X_j u)
  std::vector<std::vector<double>> first;      // n fields: X_j u
  std::vector<std::vector<double>> column;     // n fields: X_i (X_j u), fixed j
  std::vector<double> scratch;

  void ensure(int n, std::size_t size) {
    auto fit = [size](std::vector<std::vector<double>>& fields, int count) {
      fields.resize(count);
      for (auto& f : fields) f.resize(size);
    };
    fit(partials, n);
    fit(partials2, n);
    fit(first, n);
    fit(column, n);
    scratch.resize(size);
  }
};

inline void coordinate_partials(const Grid& g, const double* u, std::vector<std::vector<double>>& out) {
  for (int a = 0; a < g.dim(); ++a) axis_derivative(g, u, a, out[a].data());
}

inline void frame_dot(const FrameCoeffs& fc, int i, const std::vector<std::vector<double>>& partials,
                      double* out) {
  const std::size_t size = fc.grid.size();
  const std::vector<double>& c0 = fc.coef(i, 0);
  for (std::size_t p = 0; p < size; ++p) out[p] = c0[p] * partials[0][p];
  for (int a = 1; a < fc.n; ++a) {
    const std::vector<double>& ca = fc.coef(i, a);
    for (std::size_t p = 0; p < size; ++p) out[p] += ca[p] * partials[a][p];
  }
}

// X_i^eps u as a field.
inline ScalarField apply_X(const GroupModel& g, double eps, int i, const ScalarField& u) {
  const FrameCoeffs fc = build_frame_coeffs(g, u.grid, eps);
  ScalarField out(u.grid);
  OperatorWorkspace ws;
  ws.ensure(g.n, u.grid.size());
  coordinate_partials(u.grid, u.v.data(), ws.partials);
  frame_dot(fc, i, ws.partials, out.v.data());
  return out;
}

// X_i^r u (right-invariant frame, no eps scaling).
inline ScalarField apply_right_X(const GroupModel& g, int i, const ScalarField& u) {
  const FrameCoeffs fc = build_frame_coeffs(g, u.grid, 1.0, /*right_invariant=*/true);
  ScalarField out(u.grid);
  OperatorWorkspace ws;
  ws.ensure(g.n, u.grid.size());
  coordinate_partials(u.grid, u.v.data(), ws.partials);
  frame_dot(fc, i, ws.partials, out.v.data());
  return out;
}

// X_i^eps X_j^eps u, composition of first-derivative sweeps.
inline ScalarField apply_XX(const GroupModel& g, double eps, int i, int j, const ScalarField& u) {
  return apply_X(g, eps, i, apply_X(g, eps, j, u));
}

// Gradient components X_i^eps u for i = 1..n (eps > 0) or the horizontal
// components i = 1..m (eps = 0).
inline std::vector<ScalarField> grad_eps(const GroupModel& g, double eps, const ScalarField& u) {
  const int active = eps > 0.0 ? g.n : g.m;
  std::vector<ScalarField> out;
  out.reserve(active);
  const FrameCoeffs fc = build_frame_coeffs(g, u.grid, eps);
  OperatorWorkspace ws;
  ws.ensure(g.n, u.grid.size());
  coordinate_partials(u.grid, u.v.data(), ws.partials);
  for (int i = 0; i < active; ++i) {
    ScalarField f(u.grid);
    frame_dot(fc, i, ws.partials, f.v.data());
    out.push_back(std::move(f));
  }
  return out;
}

// a(xi) = I - xi xi^T / (1 + |xi|^2); eigenvalues 1 (multiplicity n-1) and
// 1/(1+|xi|^2) on the xi direction.
inline Mat coeff_a(const Vec& xi) {
  const int n = static_cast<int>(xi.size());
  double w2 = 1.0;
  for (double v : xi) w2 += v * v;
  Mat A = Mat::identity(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) -= xi[i] * xi[j] / w2;
  return A;
}

namespace detail {

// Core of the non-divergence operator sum_ij a_ij(grad u) X_i X_j u given
// cached frame coefficients. `active` is n for eps > 0, m for eps = 0.
// After the call ws.first holds the active gradient components of u.
inline void curvature_term_cached(const FrameCoeffs& fc, int active, const std::vector<double>& u,
                                  OperatorWorkspace& ws, std::vector<double>& out) {
  const Grid& g = fc.grid;
  const std::size_t size = g.size();
  ws.ensure(fc.n, size);

  coordinate_partials(g, u.data(), ws.partials);
  for (int i = 0; i < active; ++i) frame_dot(fc, i, ws.partials, ws.first[i].data());

  out.assign(size, 0.0);
  std::vector<double>& quad = ws.scratch;
  quad.assign(size, 0.0);

  for (int j = 0; j < active; ++j) {
    coordinate_partials(g, ws.first[j].data(), ws.partials2);
    for (int i = 0; i < active; ++i) frame_dot(fc, i, ws.partials2, ws.column[i].data());
    const std::vector<double>& xij = ws.first[j];
    for (std::size_t p = 0; p < size; ++p) {
      double s = 0.0;
      for (int i = 0; i < active; ++i) s += ws.first[i][p] * ws.column[i][p];
      quad[p] += xij[p] * s;
      out[p] += ws.column[j][p];  // trace part
    }
  }
  for (std::size_t p = 0; p < size; ++p) {
    double w2 = 1.0;
    for (int i = 0; i < active; ++i) w2 += ws.first[i][p] * ws.first[i][p];
    out[p] -= quad[p] / w2;
  }
}

}  // namespace detail

// sum_ij a_ij(grad_eps u) X_i^eps X_j^eps u  (equals W_eps * h_eps).
inline ScalarField mean_curvature_term(const GroupModel& g, double eps, const ScalarField& u) {
  const FrameCoeffs fc = build_frame_coeffs(g, u.grid, eps);
  const int active = eps > 0.0 ? g.n : g.m;
  OperatorWorkspace ws;
  ScalarField out(u.grid);
  detail::curvature_term_cached(fc, active, u.v, ws, out.v);
  return out;
}

// Divergence form W * sum_i X_i (X_i u / W); analytically identical to the
// non-divergence form, discretely different by O(h).
inline ScalarField divergence_form_term(const GroupModel& g, double eps, const ScalarField& u) {
  const FrameCoeffs fc = build_frame_coeffs(g, u.grid, eps);
  const int active = eps > 0.0 ? g.n : g.m;
  const std::size_t size = u.grid.size();
  OperatorWorkspace ws;
  ws.ensure(g.n, size);
  coordinate_partials(u.grid, u.v.data(), ws.partials);
  for (int i = 0; i < active; ++i) frame_dot(fc, i, ws.partials, ws.first[i].data());

  std::vector<double> W(size);
  for (std::size_t p = 0; p < size; ++p) {
    double w2 = 1.0;
    for (int i = 0; i < active; ++i) w2 += ws.first[i][p] * ws.first[i][p];
    W[p] = std::sqrt(w2);
  }
  ScalarField out(u.grid);
  std::vector<double> flux(size), term(size);
  for (int i = 0; i < active; ++i) {
    for (std::size_t p = 0; p < size; ++p) flux[p] = ws.first[i][p] / W[p];
    coordinate_partials(u.grid, flux.data(), ws.partials);
    frame_dot(fc, i, ws.partials, term.data());
    for (std::size_t p = 0; p < size; ++p) out.v[p] += term[p];
  }
  for (std::size_t p = 0; p < size; ++p) out.v[p] *= W[p];
  return out;
}

}  // namespace mcf

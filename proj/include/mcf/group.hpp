#pragma once

// Step-2 Lie group models presented through coordinate frames.
//
// A model carries the left- and right-invariant frames X_1..X_n (as coordinate
// coefficient matrices), their exact Jacobians, the group product/inverse in
// chart coordinates, and the exponential map used for coordinates centered at
// a point. The first m fields are horizontal (degree 1), the remaining ones
// are commutator directions (degree 2). The scaled frame
//   {X_1, ..., X_m, eps*X_{m+1}, ..., eps*X_n}
// is declared orthonormal by the Riemannian approximation metric sigma_eps.
//
// Models:
//   heisenberg       chart (x1,x2,x3), X1 = d1 - x2*d3, X2 = d2 + x1*d3,
//                    [X1,X2] = 2*d3; the completion vector is X3 = d3 and the
//                    structure constant 2 is kept as metadata.
//   rototranslation  chart (x1,x2,theta), X1 = cos(t)d1 + sin(t)d2, X2 = dt,
//                    X3 = -sin(t)d1 + cos(t)d2. Direct computation gives
//                    [X1,X2] = -X3; some references orient the commutator as
//                    +X3.  Only span(X3) matters to the algorithms here.
//   free:m           free nilpotent step-2 group on m generators in first-kind
//                    exponential coordinates, n = m + m(m-1)/2, second layer
//                    indexed lexicographically by pairs (i,j), i<j.
//   abelian:n        R^n, X_i = d_i.

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mcf/linalg.hpp"

namespace mcf {

struct GroupModel {
  std::string name;
  int n = 0;  // topological dimension
  int m = 0;  // horizontal dimension
  std::vector<int> periodic_axes;   // chart axes that wrap
  std::vector<double> periods;      // aligned with periodic_axes

  // Column i of frame(x) holds the coordinate coefficients of X_i at x.
  std::function<Mat(const Vec&)> left_frame;
  std::function<Mat(const Vec&)> right_frame;
  // Entry (a,b) of frame_grad(x,i) is d/dx_b of the a-th coefficient of X_i.
  std::function<Mat(const Vec&, int)> left_frame_grad;
  std::function<Mat(const Vec&, int)> right_frame_grad;

  std::function<Vec(const Vec&, const Vec&)> product;
  std::function<Vec(const Vec&)> inverse;
  // exp_map(u) = exp(sum_i u_i X_i) applied at the identity, in chart
  // coordinates; log_map is its (principal) inverse.
  std::function<Vec(const Vec&)> exp_map;
  std::function<Vec(const Vec&)> log_map;

  std::string convention_note;

  int degree(int i) const { return i < m ? 1 : 2; }
  bool axis_periodic(int a) const {
    for (int p : periodic_axes)
      if (p == a) return true;
    return false;
  }
};

namespace detail {

inline double wrap_angle(double t) {
  const double p = 2.0 * std::numbers::pi;
  t = std::fmod(t, p);
  if (t < 0) t += p;
  return t;
}

inline GroupModel make_heisenberg() {
  GroupModel g;
  g.name = "heisenberg";
  g.n = 3;
  g.m = 2;
  g.convention_note = "[X1,X2] = 2*d3; completion X3 = d3, structure constant 2";
  g.left_frame = [](const Vec& x) {
    Mat A = Mat::identity(3);
    A(2, 0) = -x[1];
    A(2, 1) = x[0];
    return A;
  };
  g.right_frame = [](const Vec& x) {
    Mat A = Mat::identity(3);
    A(2, 0) = x[1];
    A(2, 1) = -x[0];
    return A;
  };
  g.left_frame_grad = [](const Vec&, int i) {
    Mat J(3, 3);
    if (i == 0) J(2, 1) = -1.0;
    if (i == 1) J(2, 0) = 1.0;
    return J;
  };
  g.right_frame_grad = [](const Vec&, int i) {
    Mat J(3, 3);
    if (i == 0) J(2, 1) = 1.0;
    if (i == 1) J(2, 0) = -1.0;
    return J;
  };
  g.product = [](const Vec& x, const Vec& y) {
    return Vec{x[0] + y[0], x[1] + y[1], x[2] + y[2] - (x[1] * y[0] - x[0] * y[1])};
  };
  g.inverse = [](const Vec& x) { return Vec{-x[0], -x[1], -x[2]}; };
  g.exp_map = [](const Vec& u) { return u; };
  g.log_map = [](const Vec& x) { return x; };
  return g;
}

inline GroupModel make_rototranslation() {
  GroupModel g;
  g.name = "rototranslation";
  g.n = 3;
  g.m = 2;
  g.periodic_axes = {2};
  g.periods = {2.0 * std::numbers::pi};
  g.convention_note = "computed [X1,X2] = -X3 with X3 = -sin*d1 + cos*d2";
  g.left_frame = [](const Vec& x) {
    const double c = std::cos(x[2]), s = std::sin(x[2]);
    Mat A(3, 3);
    A(0, 0) = c;
    A(1, 0) = s;
    A(2, 1) = 1.0;
    A(0, 2) = -s;
    A(1, 2) = c;
    return A;
  };
  g.right_frame = [](const Vec& x) {
    Mat A(3, 3);
    A(0, 0) = 1.0;
    A(0, 1) = -x[1];
    A(1, 1) = x[0];
    A(2, 1) = 1.0;
    A(1, 2) = 1.0;
    return A;
  };
  g.left_frame_grad = [](const Vec& x, int i) {
    const double c = std::cos(x[2]), s = std::sin(x[2]);
    Mat J(3, 3);
    if (i == 0) {
      J(0, 2) = -s;
      J(1, 2) = c;
    } else if (i == 2) {
      J(0, 2) = -c;
      J(1, 2) = -s;
    }
    return J;
  };
  g.right_frame_grad = [](const Vec&, int i) {
    Mat J(3, 3);
    if (i == 1) {
      J(0, 1) = -1.0;
      J(1, 0) = 1.0;
    }
    return J;
  };
  g.product = [](const Vec& x, const Vec& y) {
    const double c = std::cos(x[2]), s = std::sin(x[2]);
    return Vec{x[0] + y[0] * c - y[1] * s, x[1] + y[0] * s + y[1] * c,
               wrap_angle(x[2] + y[2])};
  };
  g.inverse = [](const Vec& x) {
    const double c = std::cos(x[2]), s = std::sin(x[2]);
    return Vec{-x[0] * c - x[1] * s, x[0] * s - x[1] * c, wrap_angle(-x[2])};
  };
  // exp(u1 X1 + u2 X2 + u3 X3): rotate at rate u2 while translating along the
  // frame directions X1 ~ d1 and X3 ~ d2 at the identity.
  g.exp_map = [](const Vec& u) {
    const double a = u[1];
    double A, B;
    if (std::fabs(a) < 1e-8) {
      A = 1.0 - a * a / 6.0;
      B = a / 2.0 - a * a * a / 24.0;
    } else {
      A = std::sin(a) / a;
      B = (1.0 - std::cos(a)) / a;
    }
    return Vec{A * u[0] - B * u[2], B * u[0] + A * u[2], wrap_angle(a)};
  };
  g.log_map = [](const Vec& x) {
    double a = wrap_angle(x[2]);
    if (a > std::numbers::pi) a -= 2.0 * std::numbers::pi;  // principal branch
    double A, B;
    if (std::fabs(a) < 1e-8) {
      A = 1.0 - a * a / 6.0;
      B = a / 2.0 - a * a * a / 24.0;
    } else {
      A = std::sin(a) / a;
      B = (1.0 - std::cos(a)) / a;
    }
    const double den = A * A + B * B;
    return Vec{(A * x[0] + B * x[1]) / den, a, (-B * x[0] + A * x[1]) / den};
  };
  return g;
}

// Pair ordering for the second layer of the free step-2 group: (0,1), (0,2),
// (1,2), ... mapped onto coordinates m, m+1, ...
inline int free2_pair_index(int m, int i, int j) {
  int idx = m;
  for (int a = 0; a < m; ++a)
    for (int b = a + 1; b < m; ++b) {
      if (a == i && b == j) return idx;
      ++idx;
    }
  throw std::logic_error("free2_pair_index: bad pair");
}

inline GroupModel make_free_step2(int m) {
  if (m < 2) throw std::invalid_argument("free step-2 group needs m >= 2 generators");
  GroupModel g;
  const int n = m + m * (m - 1) / 2;
  g.name = "free:" + std::to_string(m);
  g.n = n;
  g.m = m;
  // X_i = e_i + (1/2) [u, e_i] in first-kind exponential coordinates; the
  // second-layer fields are the plain coordinate directions.
  auto frame = [m, n](const Vec& x, double sign) {
    Mat A = Mat::identity(n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        if (j == i) continue;
        // coefficient of e_{(min,max)} in (1/2)[u_j e_j, e_i]
        const int a = free2_pair_index(m, std::min(i, j), std::max(i, j));
        const double orient = (j < i) ? 1.0 : -1.0;  // [e_j,e_i] = +e_(ji) for j<i
        A(a, i) += sign * 0.5 * orient * x[j];
      }
    return A;
  };
  g.left_frame = [frame](const Vec& x) { return frame(x, +1.0); };
  g.right_frame = [frame](const Vec& x) { return frame(x, -1.0); };
  auto frame_grad = [m, n](const Vec&, int i, double sign) {
    Mat J(n, n);
    if (i < m) {
      for (int j = 0; j < m; ++j) {
        if (j == i) continue;
        const int a = free2_pair_index(m, std::min(i, j), std::max(i, j));
        const double orient = (j < i) ? 1.0 : -1.0;
        J(a, j) += sign * 0.5 * orient;
      }
    }
    return J;
  };
  g.left_frame_grad = [frame_grad](const Vec& x, int i) { return frame_grad(x, i, +1.0); };
  g.right_frame_grad = [frame_grad](const Vec& x, int i) { return frame_grad(x, i, -1.0); };
  g.product = [m, n](const Vec& x, const Vec& y) {
    Vec z(n);
    for (int i = 0; i < n; ++i) z[i] = x[i] + y[i];
    int idx = m;
    for (int a = 0; a < m; ++a)
      for (int b = a + 1; b < m; ++b) {
        z[idx] += 0.5 * (x[a] * y[b] - x[b] * y[a]);
        ++idx;
      }
    return z;
  };
  g.inverse = [n](const Vec& x) {
    Vec z(n);
    for (int i = 0; i < n; ++i) z[i] = -x[i];
    return z;
  };
  g.exp_map = [](const Vec& u) { return u; };
  g.log_map = [](const Vec& x) { return x; };
  return g;
}

inline GroupModel make_abelian(int n) {
  if (n < 1) throw std::invalid_argument("abelian group needs n >= 1");
  GroupModel g;
  g.name = "abelian:" + std::to_string(n);
  g.n = n;
  g.m = n;
  g.left_frame = [n](const Vec&) { return Mat::identity(n); };
  g.right_frame = g.left_frame;
  g.left_frame_grad = [n](const Vec&, int) { return Mat(n, n); };
  g.right_frame_grad = g.left_frame_grad;
  g.product = [n](const Vec& x, const Vec& y) {
    Vec z(n);
    for (int i = 0; i < n; ++i) z[i] = x[i] + y[i];
    return z;
  };
  g.inverse = [n](const Vec& x) {
    Vec z(n);
    for (int i = 0; i < n; ++i) z[i] = -x[i];
    return z;
  };
  g.exp_map = [](const Vec& u) { return u; };
  g.log_map = [](const Vec& x) { return x; };
  return g;
}

}  // namespace detail

// Accepts "heisenberg", "rototranslation", "free:<m>", "abelian:<n>".
inline GroupModel make_model(const std::string& name) {
  if (name == "heisenberg") return detail::make_heisenberg();
  if (name == "rototranslation") return detail::make_rototranslation();
  const auto colon = name.find(':');
  if (colon != std::string::npos) {
    const std::string base = name.substr(0, colon);
    int k = 0;
    try {
      k = std::stoi(name.substr(colon + 1));
    } catch (...) {
      throw std::invalid_argument("make_model: bad parameter in '" + name + "'");
    }
    if (base == "free") return detail::make_free_step2(k);
    if (base == "abelian") return detail::make_abelian(k);
  }
  throw std::invalid_argument("make_model: unknown group '" + name + "'");
}

// Coordinate coefficients of the scaled frame {X_1..X_m, eps X_{m+1}..eps X_n}
// as columns; eps = 0 zeroes the degree-2 columns.
inline Mat frame_matrix(const GroupModel& g, double eps, const Vec& x) {
  if (eps < 0.0 || eps > 1.0) throw std::invalid_argument("frame_matrix: eps outside [0,1]");
  Mat A = g.left_frame(x);
  for (int i = g.m; i < g.n; ++i)
    for (int a = 0; a < g.n; ++a) A(a, i) *= eps;
  return A;
}

// Riemannian metric tensor G_eps(x) = (A A^T)^{-1}, making the scaled frame
// orthonormal. Requires eps > 0.
inline Mat metric_tensor(const GroupModel& g, double eps, const Vec& x) {
  if (!(eps > 0.0)) throw std::invalid_argument("metric_tensor: eps must be positive");
  Mat A = frame_matrix(g, eps, x);
  return inverse(matmul(A, transpose(A)));
}

// sqrt(v^T G_eps(x) v) without forming G: solve A z = v and take |z|.
inline double metric_norm(const GroupModel& g, double eps, const Vec& x, const Vec& v) {
  Mat A = frame_matrix(g, eps, x);
  Mat b(g.n, 1);
  for (int i = 0; i < g.n; ++i) b(i, 0) = v[i];
  Mat z = solve(std::move(A), std::move(b));
  double s = 0.0;
  for (int i = 0; i < g.n; ++i) s += z(i, 0) * z(i, 0);
  return std::sqrt(s);
}

// C(x) with A_left(x) = C(x) * A_right(x).
inline Mat left_right_change(const GroupModel& g, const Vec& x) {
  Mat Ar = g.right_frame(x);
  // C = A_left * Ar^{-1}, computed as solve on the transposed system.
  return transpose(solve(transpose(Ar), transpose(g.left_frame(x))));
}

}  // namespace mcf

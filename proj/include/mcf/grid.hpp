#pragma once

// Uniform Cartesian lattice over a box in chart coordinates, and scalar
// fields sampled on it. Storage is row-major with axis 0 slowest. Periodic
// axes cover [lo, hi) with spacing (hi-lo)/shape; non-periodic axes include
// both endpoints with spacing (hi-lo)/(shape-1).

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcf/linalg.hpp"

namespace mcf {

class Grid {
 public:
  Grid() = default;
  Grid(Vec lo, Vec hi, std::vector<int> shape, std::vector<std::uint8_t> periodic = {})
      : lo_(std::move(lo)), hi_(std::move(hi)), shape_(std::move(shape)), periodic_(std::move(periodic)) {
    const int d = static_cast<int>(shape_.size());
    if (d == 0 || lo_.size() != shape_.size() || hi_.size() != shape_.size())
      throw std::invalid_argument("Grid: lo/hi/shape size mismatch");
    if (periodic_.empty()) periodic_.assign(d, 0);
    if (periodic_.size() != shape_.size()) throw std::invalid_argument("Grid: periodic flag size mismatch");
    h_.resize(d);
    size_ = 1;
    for (int a = 0; a < d; ++a) {
      if (shape_[a] < 5) throw std::invalid_argument("Grid: need at least 5 points per axis");
      if (!(hi_[a] > lo_[a])) throw std::invalid_argument("Grid: hi must exceed lo");
      h_[a] = (hi_[a] - lo_[a]) / (periodic_[a] ? shape_[a] : shape_[a] - 1);
      size_ *= static_cast<std::size_t>(shape_[a]);
    }
    stride_.assign(d, 1);
    for (int a = d - 2; a >= 0; --a) stride_[a] = stride_[a + 1] * shape_[a + 1];
  }

  int dim() const { return static_cast<int>(shape_.size()); }
  std::size_t size() const { return size_; }
  int shape(int a) const { return shape_[a]; }
  double lo(int a) const { return lo_[a]; }
  double hi(int a) const { return hi_[a]; }
  double spacing(int a) const { return h_[a]; }
  bool periodic(int a) const { return periodic_[a] != 0; }
  std::size_t stride(int a) const { return stride_[a]; }

  double min_spacing() const {
    double m = h_[0];
    for (double v : h_) m = std::min(m, v);
    return m;
  }

  double coordinate(int a, int i) const { return lo_[a] + h_[a] * i; }

  std::size_t index(const std::vector<int>& idx) const {
    std::size_t p = 0;
    for (int a = 0; a < dim(); ++a) p += stride_[a] * static_cast<std::size_t>(idx[a]);
    return p;
  }

  std::vector<int> multi_index(std::size_t p) const {
    std::vector<int> idx(dim());
    for (int a = 0; a < dim(); ++a) {
      idx[a] = static_cast<int>(p / stride_[a]);
      p %= stride_[a];
    }
    return idx;
  }

  Vec point(std::size_t p) const {
    Vec x(dim());
    for (int a = 0; a < dim(); ++a) {
      const int i = static_cast<int>(p / stride_[a] % static_cast<std::size_t>(shape_[a]));
      x[a] = coordinate(a, i);
    }
    return x;
  }

  // True if p sits on a non-periodic boundary face.
  bool on_boundary(std::size_t p) const {
    for (int a = 0; a < dim(); ++a) {
      if (periodic_[a]) continue;
      const int i = static_cast<int>(p / stride_[a] % static_cast<std::size_t>(shape_[a]));
      if (i == 0 || i == shape_[a] - 1) return true;
    }
    return false;
  }

  bool same_layout(const Grid& o) const {
    return shape_ == o.shape_ && lo_ == o.lo_ && hi_ == o.hi_ && periodic_ == o.periodic_;
  }

 private:
  Vec lo_, hi_, h_;
  std::vector<int> shape_;
  std::vector<std::uint8_t> periodic_;
  std::vector<std::size_t> stride_;
  std::size_t size_ = 0;
};

struct ScalarField {
  Grid grid;
  std::vector<double> v;

  ScalarField() = default;
  explicit ScalarField(const Grid& g, double fill = 0.0) : grid(g), v(g.size(), fill) {}

  double& operator[](std::size_t p) { return v[p]; }
  double operator[](std::size_t p) const { return v[p]; }
};

inline ScalarField sample(const Grid& g, const std::function<double(const Vec&)>& f) {
  ScalarField u(g);
  for (std::size_t p = 0; p < g.size(); ++p) u.v[p] = f(g.point(p));
  return u;
}

inline bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

inline double sup_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

// Inclusive index box; used for interior compacts.
struct IndexBox {
  std::vector<int> lo, hi;

  bool contains(const Grid& g, std::size_t p) const {
    for (int a = 0; a < g.dim(); ++a) {
      const int i = static_cast<int>(p / g.stride(a) % static_cast<std::size_t>(g.shape(a)));
      if (i < lo[a] || i > hi[a]) return false;
    }
    return true;
  }
};

// Box shrunk by `fraction` per side on non-periodic axes, at least min_layers
// lattice layers in from every face. Periodic axes are kept whole.
inline IndexBox interior_box(const Grid& g, double fraction = 0.15, int min_layers = 2) {
  IndexBox b;
  b.lo.resize(g.dim());
  b.hi.resize(g.dim());
  for (int a = 0; a < g.dim(); ++a) {
    if (g.periodic(a)) {
      b.lo[a] = 0;
      b.hi[a] = g.shape(a) - 1;
      continue;
    }
    int off = std::max(min_layers, static_cast<int>(std::ceil(fraction * (g.shape(a) - 1))));
    if (2 * off >= g.shape(a) - 1) off = (g.shape(a) - 1) / 2 - 1;
    b.lo[a] = off;
    b.hi[a] = g.shape(a) - 1 - off;
  }
  return b;
}

inline double sup_abs_on(const Grid& g, const std::vector<double>& v, const IndexBox& box) {
  double m = 0.0;
  for (std::size_t p = 0; p < v.size(); ++p)
    if (box.contains(g, p)) m = std::max(m, std::fabs(v[p]));
  return m;
}

}  // namespace mcf

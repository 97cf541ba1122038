#pragma once

// Lattice approximations of the Riemannian distances d_eps, ball-volume
// doubling ratios, the parabolic pseudo-distance and Holder seminorms.
//
// Distances are shortest paths on the grid graph with edges to all neighbors
// of a 3^n (or optionally 5^n) stencil; an edge p -> p+o costs
// sqrt(v^T G_eps(midpoint) v) with v the coordinate displacement. The stencil
// quantizes directions, which overestimates distances by up to ~8% for the
// 3^n stencil; the wider stencil reduces that.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mcf/grid.hpp"
#include "mcf/group.hpp"

namespace mcf {

struct DistanceField {
  Grid grid;
  std::size_t source = 0;
  double eps = 1.0;
  std::vector<double> d;
};

namespace detail {

inline std::vector<std::vector<int>> stencil_offsets(int dim, int radius) {
  std::vector<std::vector<int>> offs;
  std::vector<int> o(dim, -radius);
  while (true) {
    bool all_zero = true;
    for (int v : o) all_zero &= (v == 0);
    if (!all_zero) {
      // skip multiples of shorter offsets (e.g. (2,2) duplicates (1,1))
      int g = 0;
      for (int v : o) g = std::gcd(g, std::abs(v));
      if (g == 1) offs.push_back(o);
    }
    int a = dim - 1;
    while (a >= 0 && o[a] == radius) o[a--] = -radius;
    if (a < 0) break;
    ++o[a];
  }
  return offs;
}

}  // namespace detail

// Shortest-path approximation of d_eps from a source grid point.
inline DistanceField distance_map(const GroupModel& g, double eps, const Grid& grid,
                                  std::size_t source, int stencil_radius = 1) {
  if (!(eps > 0.0))
    throw std::invalid_argument("distance_map: eps must be positive (d_eps increases to d_0 as eps -> 0)");
  if (grid.dim() != g.n) throw std::invalid_argument("distance_map: grid dimension != group dimension");
  if (source >= grid.size()) throw std::invalid_argument("distance_map: source not on grid");

  const auto offsets = detail::stencil_offsets(grid.dim(), stencil_radius);
  const int dim = grid.dim();

  DistanceField out;
  out.grid = grid;
  out.source = source;
  out.eps = eps;
  out.d.assign(grid.size(), std::numeric_limits<double>::infinity());

  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
  out.d[source] = 0.0;
  heap.push({0.0, source});

  std::vector<int> idx(dim);
  Vec x(dim), mid(dim), v(dim);
  std::vector<std::uint8_t> done(grid.size(), 0);

  while (!heap.empty()) {
    const auto [dist, p] = heap.top();
    heap.pop();
    if (done[p]) continue;
    done[p] = 1;

    std::size_t rem = p;
    for (int a = 0; a < dim; ++a) {
      idx[a] = static_cast<int>(rem / grid.stride(a));
      rem %= grid.stride(a);
      x[a] = grid.coordinate(a, idx[a]);
    }

    for (const auto& o : offsets) {
      bool ok = true;
      std::size_t q = 0;
      for (int a = 0; a < dim; ++a) {
        int i = idx[a] + o[a];
        if (grid.periodic(a)) {
          i %= grid.shape(a);
          if (i < 0) i += grid.shape(a);
        } else if (i < 0 || i >= grid.shape(a)) {
          ok = false;
          break;
        }
        q += grid.stride(a) * static_cast<std::size_t>(i);
      }
      if (!ok || done[q]) continue;
      for (int a = 0; a < dim; ++a) {
        v[a] = o[a] * grid.spacing(a);
        mid[a] = x[a] + 0.5 * v[a];
      }
      const double w = metric_norm(g, eps, mid, v);
      if (dist + w < out.d[q]) {
        out.d[q] = dist + w;
        heap.push({out.d[q], q});
      }
    }
  }
  return out;
}

inline DistanceField distance_map(const GroupModel& g, double eps, const Grid& grid, const Vec& source,
                                  int stencil_radius = 1) {
  std::vector<int> idx(grid.dim());
  for (int a = 0; a < grid.dim(); ++a) {
    const double f = (source[a] - grid.lo(a)) / grid.spacing(a);
    idx[a] = static_cast<int>(std::lround(f));
    if (std::fabs(f - idx[a]) > 1e-9 || idx[a] < 0 || idx[a] >= grid.shape(a))
      throw std::invalid_argument("distance_map: source must be a grid point");
  }
  return distance_map(g, eps, grid, grid.index(idx), stencil_radius);
}

struct DoublingReport {
  struct Row {
    std::size_t sample = 0;
    double r = 0.0;
    double ratio = 0.0;
  };
  std::vector<Row> rows;
  double max_ratio = 0.0;
};

// |B(x,2r)| / |B(x,r)| with ball volume = (# grid points with d < r) * cell
// volume (the cell volume cancels in the ratio). Throws if a ball is empty at
// the grid resolution or if B(x,2r) reaches the grid boundary (the count
// would be truncated).
inline DoublingReport doubling_ratio(const GroupModel& g, double eps, const Grid& grid,
                                     const std::vector<std::size_t>& samples,
                                     const std::vector<double>& radii, int stencil_radius = 1) {
  DoublingReport rep;
  for (std::size_t s : samples) {
    const DistanceField df = distance_map(g, eps, grid, s, stencil_radius);
    for (double r : radii) {
      std::size_t inner = 0, outer = 0;
      bool truncated = false;
      for (std::size_t p = 0; p < grid.size(); ++p) {
        if (df.d[p] < r) ++inner;
        if (df.d[p] < 2.0 * r) {
          ++outer;
          if (grid.on_boundary(p)) truncated = true;
        }
      }
      if (inner < 2) throw std::invalid_argument("doubling_ratio: radius below grid resolution");
      if (truncated) throw std::invalid_argument("doubling_ratio: ball B(x,2r) exits the grid");
      DoublingReport::Row row;
      row.sample = s;
      row.r = r;
      row.ratio = static_cast<double>(outer) / static_cast<double>(inner);
      rep.max_ratio = std::max(rep.max_ratio, row.ratio);
      rep.rows.push_back(row);
    }
  }
  return rep;
}

// Parabolic pseudo-distance max(d(x,y), sqrt|t-s|).
inline double parabolic_distance(double d_xy, double t, double s) {
  if (d_xy < 0.0) throw std::invalid_argument("parabolic_distance: negative spatial distance");
  return std::max(d_xy, std::sqrt(std::fabs(t - s)));
}

struct HolderEstimate {
  double alpha = 0.0;
  double seminorm = 0.0;
  double sup_norm = 0.0;
  double eps = 1.0;
  std::size_t pairs_sampled = 0;
  double norm() const { return seminorm + sup_norm; }
};

// Fields sampled at a list of times on a common grid.
struct SpaceTimeSamples {
  Grid grid;
  std::vector<double> times;
  std::vector<const std::vector<double>*> fields;
};

// Holder seminorm sup |u(p)-u(q)| / d~^alpha over subsampled pairs.
//
// Sources are drawn deterministically from the region (seeded engine); one
// distance map per source is requested through `dist_for_source` so callers
// can cache them. Pairs at zero parabolic distance are skipped.
inline HolderEstimate holder_seminorm(const SpaceTimeSamples& u,
                                      const std::function<const DistanceField&(std::size_t)>& dist_for_source,
                                      double alpha, const IndexBox& region, double eps,
                                      std::size_t pair_budget = 200000, std::uint64_t seed = 0,
                                      std::size_t max_sources = 48) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw std::invalid_argument("holder_seminorm: alpha outside (0,1]");  // alpha = 1 is the Lipschitz case
  if (u.fields.empty() || u.fields.size() != u.times.size())
    throw std::invalid_argument("holder_seminorm: inconsistent samples");

  const Grid& g = u.grid;
  std::vector<std::size_t> region_pts;
  for (std::size_t p = 0; p < g.size(); ++p)
    if (region.contains(g, p)) region_pts.push_back(p);
  if (region_pts.size() < 2) throw std::invalid_argument("holder_seminorm: region too small");

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> sources = region_pts;
  std::shuffle(sources.begin(), sources.end(), rng);
  if (sources.size() > max_sources) sources.resize(max_sources);

  HolderEstimate est;
  est.alpha = alpha;
  est.eps = eps;
  for (std::size_t ti = 0; ti < u.times.size(); ++ti)
    for (std::size_t p : region_pts) est.sup_norm = std::max(est.sup_norm, std::fabs((*u.fields[ti])[p]));

  std::uniform_int_distribution<std::size_t> pick_pt(0, region_pts.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_t(0, u.times.size() - 1);
  const std::size_t per_source = std::max<std::size_t>(1, pair_budget / sources.size());

  for (std::size_t s : sources) {
    const DistanceField& df = dist_for_source(s);
    for (std::size_t k = 0; k < per_source; ++k) {
      const std::size_t q = region_pts[pick_pt(rng)];
      const std::size_t t1 = pick_t(rng), t2 = pick_t(rng);
      const double dt = parabolic_distance(df.d[q], u.times[t1], u.times[t2]);
      if (!(dt > 0.0)) continue;
      const double diff = std::fabs((*u.fields[t1])[s] - (*u.fields[t2])[q]);
      est.seminorm = std::max(est.seminorm, diff / std::pow(dt, alpha));
      ++est.pairs_sampled;
    }
  }
  return est;
}

}  // namespace mcf

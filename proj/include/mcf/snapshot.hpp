#pragma once

// Snapshot files: text header followed by little-endian 64-bit floats in
// row-major axis order (axis 0 slowest).
//
//   format=1
//   group=heisenberg
//   n=3
//   shape=41 41 41
//   lo=0 0 0
//   hi=1 1 1
//   epsilon=0.25
//   time=0.1
//   <binary payload>

#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcf/grid.hpp"
#include "mcf/group.hpp"

static_assert(std::endian::native == std::endian::little,
              "snapshot payloads are little-endian; add byte swapping for this platform");

namespace mcf {

struct SnapshotFile {
  std::string group;
  int n = 0;
  std::vector<int> shape;
  Vec lo, hi;
  double epsilon = 0.0;
  double time = 0.0;
  std::vector<double> values;

  // Rebuilds the grid; periodic flags come from the group chart.
  Grid make_grid() const {
    const GroupModel g = make_model(group);
    std::vector<std::uint8_t> periodic(n, 0);
    for (int a : g.periodic_axes) periodic[a] = 1;
    return Grid(lo, hi, shape, periodic);
  }
};

namespace detail {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline void write_snapshot(const std::string& path, const std::string& group, double epsilon,
                           double time, const ScalarField& field) {
  const Grid& g = field.grid;
  std::ostringstream head;
  head << "format=1\n";
  head << "group=" << group << "\n";
  head << "n=" << g.dim() << "\n";
  head << "shape=";
  for (int a = 0; a < g.dim(); ++a) head << (a ? " " : "") << g.shape(a);
  head << "\nlo=";
  for (int a = 0; a < g.dim(); ++a) head << (a ? " " : "") << detail::fmt17(g.lo(a));
  head << "\nhi=";
  for (int a = 0; a < g.dim(); ++a) head << (a ? " " : "") << detail::fmt17(g.hi(a));
  head << "\nepsilon=" << detail::fmt17(epsilon) << "\n";
  head << "time=" << detail::fmt17(time) << "\n";

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("write_snapshot: cannot open " + tmp);
    const std::string h = head.str();
    out.write(h.data(), static_cast<std::streamsize>(h.size()));
    out.write(reinterpret_cast<const char*>(field.v.data()),
              static_cast<std::streamsize>(field.v.size() * sizeof(double)));
    if (!out) throw std::runtime_error("write_snapshot: write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

inline SnapshotFile read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_snapshot: cannot open " + path);
  SnapshotFile s;
  auto expect = [&](const std::string& key) {
    std::string line;
    if (!std::getline(in, line) || line.rfind(key + "=", 0) != 0)
      throw std::runtime_error("read_snapshot: malformed header, expected " + key);
    return line.substr(key.size() + 1);
  };
  if (expect("format") != "1") throw std::runtime_error("read_snapshot: unsupported format");
  s.group = expect("group");
  s.n = std::stoi(expect("n"));
  {
    std::istringstream is(expect("shape"));
    int v;
    while (is >> v) s.shape.push_back(v);
  }
  {
    std::istringstream is(expect("lo"));
    double v;
    while (is >> v) s.lo.push_back(v);
  }
  {
    std::istringstream is(expect("hi"));
    double v;
    while (is >> v) s.hi.push_back(v);
  }
  s.epsilon = std::stod(expect("epsilon"));
  s.time = std::stod(expect("time"));
  if (static_cast<int>(s.shape.size()) != s.n || static_cast<int>(s.lo.size()) != s.n ||
      static_cast<int>(s.hi.size()) != s.n)
    throw std::runtime_error("read_snapshot: header dimension mismatch");
  std::size_t count = 1;
  for (int v : s.shape) count *= static_cast<std::size_t>(v);
  s.values.resize(count);
  in.read(reinterpret_cast<char*>(s.values.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (static_cast<std::size_t>(in.gcount()) != count * sizeof(double))
    throw std::runtime_error("read_snapshot: truncated payload in " + path);
  return s;
}

}  // namespace mcf

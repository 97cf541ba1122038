#pragma once

// Declarative experiment configuration: a strict key = value format with
// [section] tables. Unknown keys are rejected and validation reports every
// problem it finds, not just the first.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mcf/expr.hpp"
#include "mcf/group.hpp"

namespace mcf {

struct ExperimentConfig {
  std::string group = "heisenberg";
  std::uint64_t seed = 0;
  std::string out_dir = "out";

  // [grid]
  Vec lo, hi;
  std::vector<int> shape;

  // [flow]
  std::vector<double> eps;  // sorted descending; may end with 0
  std::string datum = "0";
  std::string initial;  // empty = datum
  double T = 0.0;
  bool steady = false;
  double steady_tol = 1e-7;
  double cfl_safety = 0.8;
  long max_steps = 1000000;
  std::vector<double> snapshot_times;
  int record_every = 1;

  // [diagnostics]
  bool gradient_series = true;
  bool divergence_gap = false;
  bool eps_study = true;
  bool minimal_residual = false;
  bool bernstein = false;
  double bernstein_delta = 0.1;
  bool holder = false;
  double holder_alpha = 0.5;
  double interior_shrink = 0.15;

  // [barrier]
  bool barrier_enabled = false;

  // [metric]
  bool doubling = false;
  std::vector<double> doubling_radii;
  int distance_stencil = 1;
};

struct ConfigResult {
  std::optional<ExperimentConfig> config;
  std::vector<std::string> errors;
  bool ok() const { return errors.empty() && config.has_value(); }
};

namespace detail {

struct RawValue {
  std::string text;
  int line = 0;
};

struct RawConfig {
  std::map<std::string, RawValue> kv;  // "section.key" or "key"
  std::vector<std::string> errors;
};

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline RawConfig tokenize_config(const std::string& text) {
  RawConfig rc;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        rc.errors.push_back("line " + std::to_string(lineno) + ": malformed section header");
        continue;
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) rc.errors.push_back("line " + std::to_string(lineno) + ": empty section name");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      rc.errors.push_back("line " + std::to_string(lineno) + ": expected key = value");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty()) {
      rc.errors.push_back("line " + std::to_string(lineno) + ": empty key or value");
      continue;
    }
    const std::string full = section.empty() ? key : section + "." + key;
    if (rc.kv.count(full))
      rc.errors.push_back("line " + std::to_string(lineno) + ": duplicate key '" + full + "'");
    rc.kv[full] = {val, lineno};
  }
  return rc;
}

struct Reader {
  const RawConfig& rc;
  std::vector<std::string>& errors;
  std::set<std::string> consumed;

  const RawValue* find(const std::string& key) {
    auto it = rc.kv.find(key);
    if (it == rc.kv.end()) return nullptr;
    consumed.insert(key);
    return &it->second;
  }

  void complain(const std::string& key, const RawValue& v, const std::string& why) {
    errors.push_back("line " + std::to_string(v.line) + ": key '" + key + "': " + why);
  }

  void get_string(const std::string& key, std::string& out) {
    const RawValue* v = find(key);
    if (!v) return;
    std::string t = v->text;
    if (t.size() >= 2 && t.front() == '"' && t.back() == '"') t = t.substr(1, t.size() - 2);
    out = t;
  }
  void get_bool(const std::string& key, bool& out) {
    const RawValue* v = find(key);
    if (!v) return;
    if (v->text == "true") out = true;
    else if (v->text == "false") out = false;
    else complain(key, *v, "expected true or false");
  }
  bool parse_double(const std::string& t, double& out) {
    if (t == "inf") {
      out = std::numeric_limits<double>::infinity();
      return true;
    }
    char* end = nullptr;
    out = std::strtod(t.c_str(), &end);
    return end == t.c_str() + t.size() && !t.empty();
  }
  void get_double(const std::string& key, double& out) {
    const RawValue* v = find(key);
    if (!v) return;
    double d;
    if (parse_double(v->text, d)) out = d;
    else complain(key, *v, "expected a number");
  }
  void get_long(const std::string& key, long& out) {
    const RawValue* v = find(key);
    if (!v) return;
    double d;
    if (parse_double(v->text, d) && d == std::floor(d)) out = static_cast<long>(d);
    else complain(key, *v, "expected an integer");
  }
  void get_int(const std::string& key, int& out) {
    long l = out;
    get_long(key, l);
    out = static_cast<int>(l);
  }
  void get_u64(const std::string& key, std::uint64_t& out) {
    long l = static_cast<long>(out);
    get_long(key, l);
    if (l < 0) errors.push_back("key '" + key + "': must be nonnegative");
    else out = static_cast<std::uint64_t>(l);
  }
  void get_double_list(const std::string& key, std::vector<double>& out) {
    const RawValue* v = find(key);
    if (!v) return;
    std::string t = v->text;
    if (t.size() < 2 || t.front() != '[' || t.back() != ']') {
      complain(key, *v, "expected [v1, v2, ...]");
      return;
    }
    t = t.substr(1, t.size() - 2);
    std::vector<double> vals;
    std::istringstream is(t);
    std::string item;
    while (std::getline(is, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      double d;
      if (!parse_double(item, d)) {
        complain(key, *v, "bad list element '" + item + "'");
        return;
      }
      vals.push_back(d);
    }
    out = vals;
  }
  void get_int_list(const std::string& key, std::vector<int>& out) {
    std::vector<double> vals;
    get_double_list(key, vals);
    if (vals.empty()) return;
    out.clear();
    for (double d : vals) out.push_back(static_cast<int>(d));
  }
};

}  // namespace detail

// Parses and validates; on any problem the full error list is returned.
inline ConfigResult parse_config(const std::string& text) {
  ConfigResult res;
  detail::RawConfig rc = detail::tokenize_config(text);
  res.errors = rc.errors;

  ExperimentConfig c;
  detail::Reader r{rc, res.errors, {}};

  r.get_string("group", c.group);
  r.get_u64("seed", c.seed);
  r.get_string("out", c.out_dir);

  r.get_double_list("grid.lo", c.lo);
  r.get_double_list("grid.hi", c.hi);
  r.get_int_list("grid.shape", c.shape);

  r.get_double_list("flow.eps", c.eps);
  r.get_string("flow.datum", c.datum);
  r.get_string("flow.initial", c.initial);
  r.get_double("flow.T", c.T);
  r.get_bool("flow.steady", c.steady);
  r.get_double("flow.steady_tol", c.steady_tol);
  r.get_double("flow.cfl_safety", c.cfl_safety);
  r.get_long("flow.max_steps", c.max_steps);
  r.get_double_list("flow.snapshot_times", c.snapshot_times);
  r.get_int("flow.record_every", c.record_every);

  r.get_bool("diagnostics.gradient_series", c.gradient_series);
  r.get_bool("diagnostics.divergence_gap", c.divergence_gap);
  r.get_bool("diagnostics.eps_study", c.eps_study);
  r.get_bool("diagnostics.minimal_residual", c.minimal_residual);
  r.get_bool("diagnostics.bernstein", c.bernstein);
  r.get_double("diagnostics.bernstein_delta", c.bernstein_delta);
  r.get_bool("diagnostics.holder", c.holder);
  r.get_double("diagnostics.holder_alpha", c.holder_alpha);
  r.get_double("diagnostics.interior_shrink", c.interior_shrink);

  r.get_bool("barrier.enabled", c.barrier_enabled);

  r.get_bool("metric.doubling", c.doubling);
  r.get_double_list("metric.doubling_radii", c.doubling_radii);
  r.get_int("metric.distance_stencil", c.distance_stencil);

  for (const auto& [key, val] : rc.kv)
    if (!r.consumed.count(key))
      res.errors.push_back("line " + std::to_string(val.line) + ": unknown key '" + key + "'");

  // semantic validation
  int dim = 0;
  try {
    const GroupModel g = make_model(c.group);
    dim = g.n;
  } catch (const std::exception& e) {
    res.errors.push_back(std::string("key 'group': ") + e.what());
  }
  if (dim > 0) {
    if (static_cast<int>(c.lo.size()) != dim) res.errors.push_back("key 'grid.lo': need " + std::to_string(dim) + " entries");
    if (static_cast<int>(c.hi.size()) != dim) res.errors.push_back("key 'grid.hi': need " + std::to_string(dim) + " entries");
    if (static_cast<int>(c.shape.size()) != dim) res.errors.push_back("key 'grid.shape': need " + std::to_string(dim) + " entries");
  }
  for (int s : c.shape)
    if (s < 5) res.errors.push_back("key 'grid.shape': need at least 5 points per axis");
  for (std::size_t a = 0; a < c.lo.size() && a < c.hi.size(); ++a)
    if (!(c.hi[a] > c.lo[a])) res.errors.push_back("key 'grid.hi': must exceed grid.lo on every axis");

  if (c.eps.empty()) res.errors.push_back("key 'flow.eps': at least one value required");
  for (double e : c.eps)
    if (e < 0.0 || e > 1.0) res.errors.push_back("key 'flow.eps': values must lie in [0,1]");
  for (std::size_t k = 0; k + 1 < c.eps.size(); ++k)
    if (c.eps[k] <= c.eps[k + 1]) {
      res.errors.push_back("key 'flow.eps': list must be sorted in strictly decreasing order");
      break;
    }
  if (!(c.T > 0.0) && !c.steady)
    res.errors.push_back("key 'flow.T': positive horizon required unless flow.steady = true");
  if (!(c.cfl_safety > 0.0 && c.cfl_safety <= 1.0))
    res.errors.push_back("key 'flow.cfl_safety': must lie in (0,1]");
  if (c.record_every < 1) res.errors.push_back("key 'flow.record_every': must be >= 1");
  for (std::size_t k = 0; k + 1 < c.snapshot_times.size(); ++k)
    if (c.snapshot_times[k] >= c.snapshot_times[k + 1]) {
      res.errors.push_back("key 'flow.snapshot_times': must be strictly increasing");
      break;
    }

  auto check_expr = [&](const std::string& key, const std::string& text) {
    if (text.empty()) return;
    try {
      const Expr e = Expr::parse(text);
      if (dim > 0 && e.max_var() > dim)
        res.errors.push_back("key '" + key + "': uses x" + std::to_string(e.max_var()) +
                             " but the group has dimension " + std::to_string(dim));
    } catch (const std::exception& ex) {
      res.errors.push_back("key '" + key + "': " + ex.what());
    }
  };
  check_expr("flow.datum", c.datum);
  check_expr("flow.initial", c.initial);

  if (!(c.holder_alpha > 0.0 && c.holder_alpha < 1.0))
    res.errors.push_back("key 'diagnostics.holder_alpha': must lie in (0,1)");
  if (!(c.interior_shrink >= 0.0 && c.interior_shrink < 0.5))
    res.errors.push_back("key 'diagnostics.interior_shrink': must lie in [0, 0.5)");
  if (c.doubling && c.doubling_radii.empty())
    res.errors.push_back("key 'metric.doubling_radii': required when metric.doubling = true");
  if (c.distance_stencil != 1 && c.distance_stencil != 2)
    res.errors.push_back("key 'metric.distance_stencil': must be 1 (3^n) or 2 (5^n)");

  if (res.errors.empty()) res.config = std::move(c);
  return res;
}

}  // namespace mcf

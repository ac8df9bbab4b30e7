#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "models.hpp"
#include "spectral_meta.hpp"

namespace metastab {

inline constexpr const char* kVersion = "0.3.0";

using json = nlohmann::json;

namespace detail {

inline Operator parse_complex_matrix(const json& j, Eigen::Index d, const std::string& where) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != d)
    throw InvalidInput(where + ": expected " + std::to_string(d) + " rows");
  Operator m(d, d);
  for (Eigen::Index r = 0; r < d; ++r) {
    const auto& row = j[r];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != d)
      throw InvalidInput(where + "[" + std::to_string(r) + "]: expected " + std::to_string(d) + " entries");
    for (Eigen::Index c = 0; c < d; ++c) {
      const auto& e = row[c];
      std::string loc = where + "[" + std::to_string(r) + "][" + std::to_string(c) + "]";
      if (e.is_number()) {
        m(r, c) = e.get<double>();
      } else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
        m(r, c) = cplx(e[0].get<double>(), e[1].get<double>());
      } else {
        throw InvalidInput(loc + ": expected [re, im]");
      }
    }
  }
  return m;
}

inline Eigen::MatrixXd parse_real_matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw InvalidInput(where + ": expected a non-empty square array");
  const auto n = static_cast<Eigen::Index>(j.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    if (!j[r].is_array() || static_cast<Eigen::Index>(j[r].size()) != n)
      throw InvalidInput(where + "[" + std::to_string(r) + "]: expected " + std::to_string(n) + " entries");
    for (Eigen::Index c = 0; c < n; ++c) {
      if (!j[r][c].is_number())
        throw InvalidInput(where + "[" + std::to_string(r) + "][" + std::to_string(c) + "]: expected a number");
      m(r, c) = j[r][c].get<double>();
    }
  }
  return m;
}

}  // namespace detail

inline ModelSpecifier specifier_from_json(const json& j) {
  ModelSpecifier s;
  if (!j.contains("name") || !j["name"].is_string()) throw InvalidInput("model specifier: missing \"name\"");
  s.name = j["name"].get<std::string>();
  if (j.contains("params")) {
    if (!j["params"].is_object()) throw InvalidInput("model specifier: \"params\" must be an object");
    for (auto& [k, v] : j["params"].items()) {
      if (!v.is_number()) throw InvalidInput("model specifier: params." + k + " must be a number");
      s.params[k] = v.get<double>();
    }
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw InvalidInput("model specifier: \"seed\" must be a nonnegative integer");
    s.seed = j["seed"].get<std::uint64_t>();
  }
  return s;
}

// Accepts a quantum model ("dim", "hamiltonian", "jumps"), a classical chain
// ("generator" with full columns, or "rates" with off-diagonal rates only) or a
// model specifier ("name", "params", "seed").
inline AnyModel model_from_json(const json& j) {
  if (!j.is_object()) throw InvalidInput("model file: top level must be an object");
  if (j.contains("name")) return make_model(specifier_from_json(j));
  if (j.contains("generator")) {
    ClassicalGenerator g{detail::parse_real_matrix(j["generator"], "generator")};
    g.validate();
    return g;
  }
  if (j.contains("rates")) return generator_from_rates(detail::parse_real_matrix(j["rates"], "rates"));
  if (!j.contains("dim") || !j["dim"].is_number_integer() || j["dim"].get<long>() < 1)
    throw InvalidInput("model file: missing positive integer \"dim\"");
  const Eigen::Index d = j["dim"].get<long>();
  if (!j.contains("hamiltonian")) throw InvalidInput("model file: missing \"hamiltonian\"");
  QuantumModel m{detail::parse_complex_matrix(j["hamiltonian"], d, "hamiltonian"), {}};
  if (j.contains("jumps")) {
    if (!j["jumps"].is_array()) throw InvalidInput("model file: \"jumps\" must be an array");
    for (std::size_t k = 0; k < j["jumps"].size(); ++k)
      m.jumps.push_back(detail::parse_complex_matrix(j["jumps"][k], d, "jumps[" + std::to_string(k) + "]"));
  }
  m.validate();
  return m;
}

// Edge list: one "i j rate" per line for the transition i -> j (0-based states);
// '#' starts a comment; an optional "dim N" line fixes the number of states.
inline ClassicalGenerator parse_edge_list(std::istream& in) {
  struct Edge {
    long i, j;
    double rate;
  };
  std::vector<Edge> edges;
  long dim = -1, top = -1;
  std::string line;
  for (int ln = 1; std::getline(in, line); ++ln) {
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    std::string where = "line " + std::to_string(ln);
    if (first == "dim") {
      if (!(ls >> dim) || dim < 1) throw InvalidInput(where + ": expected 'dim N' with N >= 1");
      continue;
    }
    Edge e{};
    try {
      std::size_t used = 0;
      e.i = std::stol(first, &used);
      if (used != first.size()) throw std::invalid_argument("index");
    } catch (const std::exception&) {
      throw InvalidInput(where + ": expected 'i j rate'");
    }
    std::string rest;
    if (!(ls >> e.j >> e.rate) || (ls >> rest)) throw InvalidInput(where + ": expected 'i j rate'");
    if (e.i < 0 || e.j < 0) throw InvalidInput(where + ": negative state index");
    if (e.i == e.j) throw InvalidInput(where + ": self-loop");
    if (!(e.rate >= 0.0) || !std::isfinite(e.rate)) throw InvalidInput(where + ": rate must be finite and >= 0");
    top = std::max({top, e.i, e.j});
    edges.push_back(e);
  }
  if (dim < 0) dim = top + 1;
  if (dim < 1) throw InvalidInput("edge list: no states");
  if (top >= dim) throw InvalidInput("edge list: state index exceeds dim");
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& e : edges) r(e.j, e.i) += e.rate;
  return generator_from_rates(r);
}

inline AnyModel load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open model file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();
  auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw InvalidInput(path + ": " + e.what());
    }
    try {
      return model_from_json(j);
    } catch (const InvalidInput& e) {
      throw InvalidInput(path + ": " + e.what());
    }
  }
  std::istringstream ls(text);
  try {
    return parse_edge_list(ls);
  } catch (const InvalidInput& e) {
    throw InvalidInput(path + ": " + e.what());
  }
}

inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// FNV-1a over the exact bit patterns of the model data
inline std::string model_hash(const AnyModel& m) {
  std::uint64_t h = 1469598103934665603ULL;
  auto eat = [&](const void* p, std::size_t n) {
    auto b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  auto eat_matrix = [&](const auto& a) {
    long r = a.rows(), c = a.cols();
    eat(&r, sizeof r);
    eat(&c, sizeof c);
    for (long j = 0; j < c; ++j)
      for (long i = 0; i < r; ++i) eat(&a(i, j), sizeof a(i, j));
  };
  if (auto q = std::get_if<QuantumModel>(&m)) {
    eat("Q", 1);
    eat_matrix(q->hamiltonian);
    for (const auto& j : q->jumps) eat_matrix(j);
  } else {
    eat("C", 1);
    eat_matrix(std::get<ClassicalGenerator>(m).q);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const std::string& model_hash, std::uint64_t seed,
            const std::vector<std::string>& header)
      : out_(out) {
    out_ << "# metastab " << kVersion << " model=" << model_hash << " seed=" << seed << "\n";
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << "\n";
  }

  CsvWriter& row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
    return *this;
  }

 private:
  std::ostream& out_;
};

inline json number(double x) {
  if (!std::isfinite(x)) return format_double(x);
  return x;
}

inline json to_json(const std::vector<cplx>& ev) {
  json a = json::array();
  for (const auto& l : ev) a.push_back({{"re", number(l.real())}, {"im", number(l.imag())}});
  return a;
}

inline json to_json(const Thresholds& t) { return {{"E_minus", number(t.minus)}, {"E_plus", number(t.plus)}}; }

inline json to_json(const RegimeVerdict& v) {
  return {{"t_start", number(v.t_start)},
          {"t_end", number(v.t_end)},
          {"c_delta", number(v.c_delta)},
          {"c_delta_argmax", number(v.c_delta_argmax)},
          {"c_delta_doubling", number(v.c_delta_doubling)},
          {"d_initial_at_start", number(v.d_initial_at_start)},
          {"d_stationary_at_start", number(v.d_stationary_at_start)},
          {"d_stationary_at_end", number(v.d_stationary_at_end)},
          {"thresholds", to_json(v.thresholds)},
          {"thresholds_doubling", to_json(v.thresholds_doubling)},
          {"verdict", to_string(v.verdict)},
          {"validity_flags", v.validity_flags}};
}

inline json to_json(const Crossing& c) {
  return {{"found", c.found},
          {"t", number(c.t)},
          {"bracket", {number(c.lo), number(c.hi)}},
          {"residual", number(c.residual)},
          {"evaluations", c.evaluations},
          {"diagnostic", c.diagnostic}};
}

inline json optional_number(const std::optional<double>& x) { return x ? number(*x) : json(nullptr); }

inline json to_json(const TimescaleReport& r) {
  json j = {{"tau_0", optional_number(r.tau_0)},
            {"tau_ss", optional_number(r.tau_ss)},
            {"tau_dprime", optional_number(r.tau_dprime)},
            {"tau_prime", optional_number(r.tau_prime)},
            {"generator_norm", number(r.generator_norm)},
            {"tau_0_crossing", to_json(r.tau_0_crossing)},
            {"tau_ss_crossing", to_json(r.tau_ss_crossing)}};
  if (r.generator_norm > 0) {
    j["scaled"] = {{"tau_0", r.tau_0 ? number(*r.tau_0 * r.generator_norm) : json(nullptr)},
                   {"tau_ss", r.tau_ss ? number(*r.tau_ss * r.generator_norm) : json(nullptr)}};
  }
  return j;
}

inline json to_json(const SeparationReport& s) {
  return {{"m", s.m},
          {"branch", s.branch},
          {"thresholds", to_json(s.thresholds)},
          {"ratio_real", optional_number(s.ratio_real)},
          {"ratio_imag", optional_number(s.ratio_imag)},
          {"imag_bound", number(s.imag_bound)},
          {"slack_initial", number(s.slack_initial)},
          {"slack_final", number(s.slack_final)},
          {"slack_imag", number(s.slack_imag)}};
}

inline json to_json(const ConditionCheck& c) {
  return {{"applicable", c.applicable}, {"lhs", number(c.lhs)}, {"rhs", number(c.rhs)}, {"holds", c.holds}};
}

inline json to_json(const std::vector<SlackRow>& rows) {
  json a = json::array();
  for (const auto& r : rows)
    a.push_back({{"id", r.id}, {"t", number(r.t)}, {"lhs", number(r.lhs)}, {"rhs", number(r.rhs)},
                 {"slack", number(r.slack())}});
  return a;
}

inline json to_json(const SpectralProjectionReport& r) {
  json nodes = json::array();
  for (const auto& n : r.nodes)
    nodes.push_back({{"t", number(n.t)}, {"c_p", number(n.c_p)}, {"slow_drift", number(n.slow_drift)},
                     {"fast_residual", number(n.fast_residual)}});
  return {{"m", r.m},
          {"t_start", number(r.t_start)},
          {"t_end", number(r.t_end)},
          {"c_delta", number(r.c_delta)},
          {"t_end_extended", number(r.t_end_ext)},
          {"c_delta_extended", number(r.c_delta_ext)},
          {"c_p", number(r.c_p)},
          {"p_norm", number(r.p_norm)},
          {"ip_norm", number(r.ip_norm)},
          {"pl_norm", number(r.pl_norm)},
          {"slow_drift", number(r.slow_drift)},
          {"fast_residual", number(r.fast_residual)},
          {"meta_cond3", to_json(r.meta_cond3)},
          {"meta_cond4", to_json(r.meta_cond4)},
          {"nodes", nodes},
          {"bound_slacks", to_json(r.slacks)},
          {"conditional_slacks", to_json(r.conditional)},
          {"notes", r.notes}};
}

inline json to_json(const BoundBatteryReport& rep) {
  json rows = json::array();
  for (const auto& r : rep.rows)
    rows.push_back({{"id", r.id}, {"t", number(r.t)}, {"lhs", number(r.lhs)}, {"rhs", number(r.rhs)},
                    {"slack", number(r.slack)}, {"pass", r.pass}});
  return {{"tol", rep.tol}, {"pass", rep.pass}, {"failures", rep.failures()}, {"rows", rows}, {"notes", rep.notes}};
}

inline void write_battery_csv(std::ostream& out, const BoundBatteryReport& rep, const std::string& hash,
                              std::uint64_t seed) {
  CsvWriter w(out, hash, seed, {"id", "t", "lhs", "rhs", "slack", "pass"});
  for (const auto& r : rep.rows)
    w.row({r.id, format_double(r.t), format_double(r.lhs), format_double(r.rhs), format_double(r.slack),
           r.pass ? "1" : "0"});
}

}  // namespace metastab

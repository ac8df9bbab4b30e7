// metastab command-line front end: model ingestion, analysis subcommands, CSV/JSON output.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "metastab.hpp"

using namespace metastab;

namespace {

struct RunConfig {
  std::string model;
  std::vector<std::string> params;
  std::uint64_t seed = 0;
  std::size_t threads = default_threads();
  std::string out;
  double tol = 1e-8;
  double cdelta_max = 0.1;
  double ratio = 2.0;
  double t_min = 1e-3, t_max = 1e3;
  int points = 50;
  std::string spacing = "log";
  std::vector<std::string> windows;
  long m = -1;
  int restarts = 16;
  int max_iter = 200;
  double zero_tol = -1.0;
};

// exit 1: analysis ran but a check failed
struct AnalysisFailure : Error {
  using Error::Error;
};

struct Loaded {
  AnyModel model;
  std::string hash;
};

Loaded load(const RunConfig& cfg) {
  const auto colon = cfg.model.find(':');
  if (colon == std::string::npos) throw InvalidInput("--model expects builtin:NAME or file:PATH");
  const std::string kind = cfg.model.substr(0, colon), what = cfg.model.substr(colon + 1);
  ModelSpecifier spec;
  spec.name = what;
  spec.seed = cfg.seed;
  for (const auto& p : cfg.params) {
    auto eq = p.find('=');
    if (eq == std::string::npos || eq == 0) throw InvalidInput("--param expects key=value, got '" + p + "'");
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(p.substr(eq + 1), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != p.size() - eq - 1) throw InvalidInput("--param " + p + ": value is not a number");
    spec.params[p.substr(0, eq)] = v;
  }
  AnyModel m;
  if (kind == "builtin") {
    m = make_model(spec);
  } else if (kind == "file") {
    if (!cfg.params.empty()) throw InvalidInput("--param only applies to builtin models");
    m = load_model_file(what);
  } else {
    throw InvalidInput("--model expects builtin:NAME or file:PATH");
  }
  return {m, model_hash(m)};
}

TimeGrid grid_of(const RunConfig& cfg) {
  TimeGrid g{cfg.t_min, cfg.t_max, cfg.points, Spacing::log};
  if (cfg.spacing == "linear") g.spacing = Spacing::linear;
  else if (cfg.spacing != "log") throw InvalidInput("--spacing must be log or linear");
  g.validate();
  return g;
}

std::vector<Window> windows_of(const RunConfig& cfg) {
  std::vector<Window> out;
  for (const auto& w : cfg.windows) {
    auto comma = w.find(',');
    double a = 0, b = 0;
    try {
      if (comma == std::string::npos) throw std::invalid_argument("");
      a = std::stod(w.substr(0, comma));
      b = std::stod(w.substr(comma + 1));
    } catch (const std::exception&) {
      throw InvalidInput("--window expects T2,T1, got '" + w + "'");
    }
    if (!(a > 0.0 && b >= 2.0 * a)) throw InvalidInput("--window " + w + ": need t' >= 2t'' > 0");
    out.push_back({a, b});
  }
  return out;
}

WindowOptions window_opts(const RunConfig& cfg) {
  WindowOptions w;
  w.threads = cfg.threads;
  return w;
}

// emit JSON to stdout, or to --out when given
void emit(const RunConfig& cfg, const std::string& text) {
  if (cfg.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(cfg.out, std::ios::binary);
  if (!f) throw InvalidInput("cannot write '" + cfg.out + "'");
  f << text;
}

template <class Fn>
void with_backend(const RunConfig& cfg, const Loaded& l, Fn&& fn) {
  if (auto q = std::get_if<QuantumModel>(&l.model)) {
    InducedNormOptions o;
    o.restarts = cfg.restarts;
    o.max_iter = cfg.max_iter;
    o.seed = cfg.seed;
    QuantumBackend b(*q, o, cfg.zero_tol);
    fn(b, *q);
  } else {
    const auto& g = std::get<ClassicalGenerator>(l.model);
    ClassicalBackend b(g, cfg.zero_tol);
    fn(b, g);
  }
}

std::size_t cut_for(const RunConfig& cfg, const auto& b, double t2, double t1, double c) {
  if (cfg.m >= 0) return static_cast<std::size_t>(cfg.m);
  if (c < 0.25) return detect_separation(b.eigenvalues(), b.stationary_count(), t2, t1, c, cfg.tol).m;
  return widest_gap_cut(b.eigenvalues(), b.stationary_count());
}

int cmd_spectrum(const RunConfig& cfg) {
  auto l = load(cfg);
  json j;
  with_backend(cfg, l, [&](const auto& b, const auto&) {
    const auto& sb = b.basis();
    j = {{"model_hash", l.hash},
         {"dim", b.dim()},
         {"eigenvalues", to_json(sb.values)},
         {"m_ss", sb.m_ss},
         {"zero_tol", sb.zero_tol},
         {"eigvec_condition", number(sb.condition)},
         {"generator_norm", number(b.generator_norm())}};
  });
  emit(cfg, j.dump(2) + "\n");
  return 0;
}

int cmd_distances(const RunConfig& cfg) {
  auto l = load(cfg);
  auto ts = grid_of(cfg).points();
  std::ostringstream os;
  with_backend(cfg, l, [&](const auto& b, const auto&) {
    std::vector<double> di(ts.size()), ds(ts.size());
    parallel_for(2 * ts.size(), cfg.threads, [&](std::size_t k) {
      if (k % 2 == 0) di[k / 2] = distance_to_identity(b, ts[k / 2]);
      else ds[k / 2] = distance_to_stationary(b, ts[k / 2]);
    });
    CsvWriter w(os, l.hash, cfg.seed, {"t", "d_I", "d_ss"});
    for (std::size_t i = 0; i < ts.size(); ++i) w.row({format_double(ts[i]), format_double(di[i]), format_double(ds[i])});
  });
  emit(cfg, os.str());
  return 0;
}

int cmd_changes(const RunConfig& cfg) {
  auto l = load(cfg);
  auto ts = grid_of(cfg).points();
  if (!(cfg.ratio >= 2.0)) throw InvalidInput("--ratio must be >= 2");
  std::ostringstream os;
  with_backend(cfg, l, [&](const auto& b, const auto&) {
    WindowOptions inner = window_opts(cfg);
    inner.threads = 1;
    std::vector<double> c(ts.size());
    parallel_for(ts.size(), cfg.threads,
                 [&](std::size_t i) { c[i] = change_measure(b, ts[i], cfg.ratio * ts[i], inner).value; });
    CsvWriter w(os, l.hash, cfg.seed, {"t_start", "c_delta", "E_minus", "E_plus"});
    for (std::size_t i = 0; i < ts.size(); ++i) {
      std::string em = "nan", ep = "nan";
      if (c[i] <= 0.25) {
        auto th = e_pm(c[i]);
        em = format_double(th.minus);
        ep = format_double(th.plus);
      }
      w.row({format_double(ts[i]), format_double(c[i]), em, ep});
    }
  });
  emit(cfg, os.str());
  return 0;
}

int cmd_detect(const RunConfig& cfg) {
  auto l = load(cfg);
  auto grid = grid_of(cfg);
  json j;
  with_backend(cfg, l, [&](const auto& b, const auto&) {
    auto ts = timescales(b);
    auto opt = window_opts(cfg);
    auto found = scan_metastable(b, cfg.cdelta_max, cfg.ratio, grid, opt);
    json wins = json::array();
    for (const auto& v : found) {
      json w = to_json(v);
      try {
        w["separation"] = to_json(detect_separation(b.eigenvalues(), b.stationary_count(), v.t_start, v.t_end,
                                                    v.c_delta, cfg.tol));
      } catch (const SeparationInconsistency& e) {
        w["separation"] = {{"error", e.what()}};
      }
      wins.push_back(w);
    }
    json extra = json::array();
    for (const auto& win : windows_of(cfg)) extra.push_back(to_json(classify_regime(b, win.t_start, win.t_end, opt)));
    j = {{"model_hash", l.hash},
         {"seed", cfg.seed},
         {"c_delta_max", cfg.cdelta_max},
         {"ratio", cfg.ratio},
         {"timescales", to_json(ts)},
         {"metastable", wins},
         {"windows", extra}};
  });
  emit(cfg, j.dump(2) + "\n");
  return 0;
}

int cmd_project(const RunConfig& cfg) {
  auto l = load(cfg);
  auto wins = windows_of(cfg);
  if (wins.empty()) throw InvalidInput("project needs --window T2,T1");
  json out = json::array();
  with_backend(cfg, l, [&](const auto& b, const auto&) {
    auto opt = window_opts(cfg);
    for (const auto& w : wins) {
      double c = change_measure(b, w.t_start, w.t_end, opt).value;
      auto m = cut_for(cfg, b, w.t_start, w.t_end, c);
      out.push_back(to_json(spectral_projection_report(b, m, w.t_start, w.t_end, opt)));
    }
  });
  json j = {{"model_hash", l.hash}, {"seed", cfg.seed}, {"reports", out}};
  emit(cfg, j.dump(2) + "\n");
  return 0;
}

int cmd_verify(const RunConfig& cfg) {
  auto l = load(cfg);
  BatteryOptions bo;
  bo.grid = grid_of(cfg);
  bo.windows = windows_of(cfg);
  bo.tol = cfg.tol;
  bo.threads = cfg.threads;
  bo.window = window_opts(cfg);
  bo.seed = cfg.seed;
  BoundBatteryReport rep;
  with_backend(cfg, l, [&](const auto& b, const auto&) { rep = bound_battery(b, bo); });
  std::ostringstream os;
  write_battery_csv(os, rep, l.hash, cfg.seed);
  emit(cfg, os.str());
  for (const auto& n : rep.notes) std::cerr << "note: " << n << "\n";
  if (!rep.pass) throw AnalysisFailure(std::to_string(rep.failures()) + " bound rows failed");
  return 0;
}

// One row per (observable, t): relative drift from t = 0 and relative distance to the asymptote.
int cmd_heisenberg(const RunConfig& cfg) {
  auto l = load(cfg);
  auto ts = grid_of(cfg).points();
  auto wins = windows_of(cfg);
  std::ostringstream os;
  CsvWriter w(os, l.hash, cfg.seed, {"observable", "t", "drift", "to_asymptote", "expectation_ss"});
  auto write = [&](const std::string& name, const std::vector<double>& drift, const std::vector<double>& asym,
                   double ess) {
    for (std::size_t i = 0; i < ts.size(); ++i)
      w.row({name, format_double(ts[i]), format_double(drift[i]), format_double(asym[i]), format_double(ess)});
  };
  if (auto q = std::get_if<QuantumModel>(&l.model)) {
    InducedNormOptions o;
    o.restarts = cfg.restarts;
    o.max_iter = cfg.max_iter;
    o.seed = cfg.seed;
    QuantumBackend b(*q, o, cfg.zero_tol);
    const auto& sd = b.spectral();
    std::vector<std::pair<std::string, Operator>> obs;
    for (Eigen::Index i = 0; i < b.dim(); ++i) {
      Operator p = Operator::Zero(b.dim(), b.dim());
      p(i, i) = 1.0;
      obs.push_back({"proj_" + std::to_string(i), p});
    }
    for (const auto& win : wins) {
      auto wit = quasi_conserved_witness(b, win.t_start, win.t_end, win.t_start, window_opts(cfg));
      obs.push_back({"witness_" + format_double(win.t_start) + "_" + format_double(win.t_end), wit.observable});
    }
    const Operator rho_ss = apply_to(b.stationary_projector(), Operator::Identity(b.dim(), b.dim()) / double(b.dim()));
    for (const auto& [name, o0] : obs) {
      const double scale = max_norm(o0);
      const Operator oss = asymptotic_observable(sd, o0);
      std::vector<double> drift(ts.size()), asym(ts.size());
      parallel_for(ts.size(), cfg.threads, [&](std::size_t i) {
        Operator ot = evolve_observable(sd, o0, ts[i]);
        drift[i] = max_norm(ot - o0) / scale;
        asym[i] = max_norm(ot - oss) / scale;
      });
      write(name, drift, asym, (o0 * rho_ss).trace().real());
    }
  } else {
    ClassicalBackend b(std::get<ClassicalGenerator>(l.model), cfg.zero_tol);
    const Eigen::MatrixXd pss = b.stationary_projector();
    const Eigen::VectorXd p_ss = pss * Eigen::VectorXd::Constant(b.dim(), 1.0 / double(b.dim()));
    for (Eigen::Index i = 0; i < b.dim(); ++i) {
      Eigen::VectorXd o = Eigen::VectorXd::Unit(b.dim(), i);
      Eigen::VectorXd oss = pss.transpose() * o;
      std::vector<double> drift(ts.size()), asym(ts.size());
      parallel_for(ts.size(), cfg.threads, [&](std::size_t k) {
        Eigen::VectorXd ot = b.evolution(ts[k]).transpose() * o;
        drift[k] = (ot - o).cwiseAbs().maxCoeff();
        asym[k] = (ot - oss).cwiseAbs().maxCoeff();
      });
      write("indicator_" + std::to_string(i), drift, asym, p_ss(i));
    }
  }
  emit(cfg, os.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"metastability analysis of Markovian open quantum systems and classical chains"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--model", cfg.model, "builtin:NAME or file:PATH")->required();
    sub->add_option("--param", cfg.params, "model parameter key=value (repeatable)");
    sub->add_option("--seed", cfg.seed, "seed for random models and optimizer restarts");
    sub->add_option("--threads", cfg.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", cfg.out, "write output to this file instead of stdout");
    sub->add_option("--tol", cfg.tol, "tolerance for threshold and bound checks")->check(CLI::PositiveNumber);
    sub->add_option("--cdelta-max", cfg.cdelta_max, "largest accepted C_Delta")->check(CLI::PositiveNumber);
    sub->add_option("--ratio", cfg.ratio, "window ratio t'/t''");
    sub->add_option("--t-min", cfg.t_min);
    sub->add_option("--t-max", cfg.t_max);
    sub->add_option("--points", cfg.points);
    sub->add_option("--spacing", cfg.spacing, "log or linear");
    sub->add_option("--window", cfg.windows, "window T2,T1 (repeatable)");
    sub->add_option("--m", cfg.m, "slow-mode cut");
    sub->add_option("--restarts", cfg.restarts)->check(CLI::PositiveNumber);
    sub->add_option("--max-iter", cfg.max_iter)->check(CLI::PositiveNumber);
    sub->add_option("--zero-tol", cfg.zero_tol);
  };

  std::map<CLI::App*, int (*)(const RunConfig&)> handlers;
  auto sub = [&](const char* name, const char* help, int (*fn)(const RunConfig&)) {
    auto s = app.add_subcommand(name, help);
    add_common(s);
    handlers[s] = fn;
  };
  sub("spectrum", "eigenvalues of the generator (JSON)", cmd_spectrum);
  sub("distances", "d_I and d_ss on the time grid (CSV)", cmd_distances);
  sub("changes", "C_Delta(t'', ratio t'') and thresholds on the grid (CSV)", cmd_changes);
  sub("detect", "metastable windows and timescales (JSON)", cmd_detect);
  sub("project", "slow-mode projection report for --window (JSON)", cmd_project);
  sub("verify-bounds", "bound battery (CSV); exit 1 if any row fails", cmd_verify);
  sub("heisenberg", "observable trajectories (CSV)", cmd_heisenberg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (const char* env = std::getenv("METASTAB_SEED")) {
      try {
        std::size_t used = 0;
        cfg.seed = std::stoull(env, &used);
        if (used != std::string(env).size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        throw InvalidInput("METASTAB_SEED must be a nonnegative integer");
      }
    }
    for (auto& [s, fn] : handlers)
      if (s->parsed()) return fn(cfg);
  } catch (const AnalysisFailure& e) {
    std::cerr << "failed: " << e.what() << "\n";
    return 1;
  } catch (const NotMetastable& e) {
    std::cerr << "failed: " << e.what() << "\n";
    return 1;
  } catch (const DefectiveLiouvillian& e) {
    std::cerr << "failed: " << e.what() << "\n";
    return 1;
  } catch (const SeparationInconsistency& e) {
    std::cerr << "failed: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

#include "levelcross/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "levelcross/errors.hpp"
#include "levelcross/montecarlo.hpp"
#include "levelcross/special.hpp"

namespace lcx::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string unit_of(const std::string& name) {
  static const std::map<std::string, std::string> units{
      {"u", "X units"},           {"psi", "dimensionless"},  {"zeta", "dimensionless"},
      {"alpha", "dimensionless"}, {"kappa", "dimensionless"}, {"omega0", "1/time"},
      {"theta", "X^2/time^2"},    {"sigma", "X units"},       {"tau", "time"},
      {"tau-f", "time"},          {"tau-e", "time"},          {"mean_rate", "1/time"},
      {"var_rate", "1/time"},     {"var_rate_error", "1/time"}, {"fano", "dimensionless"},
      {"fano_error", "dimensionless"}, {"converged", "flag, 1 = ok"}};
  auto it = units.find(name);
  return it == units.end() ? "dimensionless" : it->second;
}

int worker_count(int jobs, std::size_t work) {
  int n = jobs > 0 ? jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(n), std::max<std::size_t>(work, 1)));
}

QuadratureSpec quadrature_for(const Kernel& k, double rel_tol, double abs_tol, double tail_cutoff) {
  QuadratureSpec q = default_quadrature(k);
  if (rel_tol > 0) q.rel_tol = rel_tol;
  if (abs_tol > 0) q.abs_tol = abs_tol;
  if (tail_cutoff > 0) {
    q.tail = TailPolicy::FixedCutoff;
    q.cutoff_multiple = tail_cutoff;
  }
  q.validate();
  return q;
}

}  // namespace

Kernel build_kernel(const KernelOptions& o) {
  switch (parse_family(o.kernel)) {
    case Family::Sdho: return make_sdho(o.omega0, o.zeta, o.theta);
    case Family::OuMeanRevert: return make_ou_mean_revert(o.sigma, o.tau_f, o.tau_e);
    case Family::RationalQuadratic: return make_rational_quadratic(o.sigma, o.tau, o.alpha);
    case Family::SquaredExponential: return make_squared_exponential(o.sigma, o.tau);
    default: throw ParameterError("kernel '" + o.kernel + "' is not available from the command line");
  }
}

void set_parameter(KernelOptions& o, double& u, const std::string& name, double value) {
  if (name == "u") u = value;
  else if (name == "omega0") o.omega0 = value;
  else if (name == "zeta") o.zeta = value;
  else if (name == "theta") o.theta = value;
  else if (name == "sigma") o.sigma = value;
  else if (name == "tau") o.tau = value;
  else if (name == "alpha") o.alpha = value;
  else if (name == "tau-f") o.tau_f = value;
  else if (name == "tau-e") o.tau_e = value;
  else if (name == "kappa") {
    if (!(value > 0)) throw ParameterError("kappa must be positive");
    o.tau_e = o.tau_f / value;
  } else throw ParameterError("unknown sweep parameter '" + name + "'");
}

std::vector<double> Axis::values() const {
  std::vector<double> v(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    const double f = static_cast<double>(i) / (points - 1);
    v[i] = log ? std::exp(std::log(min) + f * (std::log(max) - std::log(min))) : min + f * (max - min);
  }
  v.front() = min;
  v.back() = max;
  return v;
}

Axis parse_axis(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
  if (parts.size() != 4 && parts.size() != 5)
    throw ParameterError("axis '" + text + "' is not name:min:max:points[:log|:lin]");
  Axis a;
  a.name = parts[0];
  try {
    std::size_t used = 0;
    a.min = std::stod(parts[1], &used);
    if (used != parts[1].size()) throw std::invalid_argument("min");
    a.max = std::stod(parts[2], &used);
    if (used != parts[2].size()) throw std::invalid_argument("max");
    a.points = std::stoi(parts[3], &used);
    if (used != parts[3].size()) throw std::invalid_argument("points");
  } catch (const std::logic_error&) {
    throw ParameterError("axis '" + text + "' has a malformed number");
  }
  if (parts.size() == 5) {
    if (parts[4] == "log") a.log = true;
    else if (parts[4] != "lin") throw ParameterError("axis spacing must be lin or log");
  }
  if (a.points < 2) throw ParameterError("axis '" + a.name + "' needs at least 2 points");
  if (!std::isfinite(a.min) || !std::isfinite(a.max)) throw ParameterError("axis bounds must be finite");
  if (a.log && !(a.min > 0 && a.max > 0)) throw ParameterError("log axis '" + a.name + "' needs positive bounds");
  return a;
}

void SweepSpec::validate() const {
  if (axes.empty() || axes.size() > 2) throw ParameterError("a sweep needs 1 or 2 axes");
  if (axes.size() == 2 && axes[0].name == axes[1].name) throw ParameterError("sweep axes must differ");
  for (const auto& a : axes)
    if (a.points < 2) throw ParameterError("axis '" + a.name + "' needs at least 2 points");
  if (quantities.empty()) throw ParameterError("no quantities requested");
  for (const auto& q : quantities)
    if (q != "mean_rate" && q != "var_rate" && q != "fano")
      throw ParameterError("unknown quantity '" + q + "' (expected mean_rate|var_rate|fano)");
  if (horizon && !(*horizon > 0)) throw ParameterError("horizon must be positive");
  KernelOptions probe = kernel;
  double u_probe = u;
  for (const auto& a : axes)
    if (a.name != "psi") set_parameter(probe, u_probe, a.name, a.min);
}

SweepTable run_sweep(const SweepSpec& spec) {
  spec.validate();
  SweepTable t;
  for (const auto& a : spec.axes) t.columns.push_back(a.name);
  for (const auto& q : spec.quantities) {
    t.columns.push_back(q);
    if (q != "mean_rate") t.columns.push_back(q + "_error");
  }
  t.columns.push_back("converged");
  for (const auto& c : t.columns) t.units.push_back(unit_of(c));

  const auto v0 = spec.axes[0].values();
  const auto v1 = spec.axes.size() > 1 ? spec.axes[1].values() : std::vector<double>{kNaN};
  const std::size_t n = v0.size() * v1.size();
  t.rows.assign(n, {});

  auto eval_point = [&](std::size_t idx) {
    std::vector<double> coords{v0[idx / v1.size()]};
    if (spec.axes.size() > 1) coords.push_back(v1[idx % v1.size()]);
    std::vector<double> row = coords;
    double mean = kNaN, var = kNaN, var_err = kNaN, fano = kNaN;
    bool ok = false;
    try {
      KernelOptions o = spec.kernel;
      double u = spec.u, psi = kNaN;
      for (std::size_t a = 0; a < coords.size(); ++a) {
        if (spec.axes[a].name == "psi") psi = coords[a];
        else set_parameter(o, u, spec.axes[a].name, coords[a]);
      }
      const Kernel k = build_kernel(o);
      if (!std::isnan(psi)) u = psi * k.amplitude();
      const QuadratureSpec q = spec.quadrature ? *spec.quadrature : quadrature_for(k, spec.rel_tol, spec.abs_tol, spec.tail_cutoff);
      CrossingStats s = spec.horizon ? variance_count(k, u, *spec.horizon, spec.mode, q)
                                     : variance_rate_asymptotic(k, u, spec.mode, q);
      const double scale = spec.horizon ? 1.0 / *spec.horizon : 1.0;
      mean = s.mean * scale;
      var = s.variance * scale;
      var_err = 2 * s.integral_error;
      fano = var / mean;
      ok = s.converged && std::isfinite(var);
    } catch (const Error&) {
      ok = false;
    }
    if (!ok) {
      var = var_err = fano = kNaN;
    }
    for (const auto& q : spec.quantities) {
      if (q == "mean_rate") row.push_back(mean);
      else if (q == "var_rate") {
        row.push_back(var);
        row.push_back(var_err);
      } else {
        row.push_back(fano);
        row.push_back(var_err / mean);
      }
    }
    row.push_back(ok ? 1.0 : 0.0);
    t.rows[idx] = std::move(row);
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) eval_point(i);
  };
  const int workers = worker_count(spec.jobs, n);
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  for (const auto& r : t.rows)
    if (r.back() != 1.0) t.all_ok = false;
  return t;
}

void write_csv(const SweepTable& t, std::ostream& os) {
  for (std::size_t c = 0; c < t.columns.size(); ++c) os << "# " << t.columns[c] << " [" << t.units[c] << "]\n";
  for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << t.columns[c];
  os << '\n';
  for (const auto& r : t.rows) {
    for (std::size_t c = 0; c < r.size(); ++c) os << (c ? "," : "") << fmt17(r[c]);
    os << '\n';
  }
}

void write_json(const SweepTable& t, std::ostream& os) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : t.rows) {
    nlohmann::ordered_json obj;
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (std::isnan(r[c])) obj[t.columns[c]] = nullptr;
      else obj[t.columns[c]] = r[c];
    }
    arr.push_back(std::move(obj));
  }
  os << arr.dump(2) << '\n';
}

SweepTable read_csv(std::istream& is) {
  SweepTable t;
  bool header = false;
  for (std::string line; std::getline(is, line);) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto open = line.find(" ["), close = line.rfind(']');
      if (open != std::string::npos && close != std::string::npos) t.units.push_back(line.substr(open + 2, close - open - 2));
      continue;
    }
    std::stringstream ss(line);
    std::vector<std::string> cells;
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (!header) {
      t.columns = cells;
      header = true;
      continue;
    }
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(std::strtod(c.c_str(), nullptr));
    if (row.size() != t.columns.size()) throw ParameterError("CSV row width differs from header");
    t.rows.push_back(std::move(row));
  }
  if (!t.columns.empty()) {
    const auto it = std::find(t.columns.begin(), t.columns.end(), "converged");
    if (it != t.columns.end()) {
      const auto col = static_cast<std::size_t>(it - t.columns.begin());
      for (const auto& r : t.rows)
        if (r[col] != 1.0) t.all_ok = false;
    }
  }
  return t;
}

std::vector<SuiteResult> run_verify_suites(int draws, std::uint64_t seed) {
  std::vector<SuiteResult> out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(0.1, 10.0), sym(-3.0, 3.0);
  auto record = [&](std::string name, bool pass, double worst, double tol) {
    std::ostringstream d;
    d << "worst " << std::scientific << std::setprecision(2) << worst << " (tolerance " << tol << ")";
    out.push_back({std::move(name), pass, d.str()});
  };

  {
    double worst = 0, worst0 = 0;
    std::uniform_real_distribution<double> hd(-5.0, 5.0), ad(-5.0, 5.0);
    QuadratureSpec q;
    q.rel_tol = 1e-14;
    q.abs_tol = 1e-18;
    for (int i = 0; i < 5 * draws; ++i) {
      const double h = hd(rng), a = ad(rng);
      auto f = [h](double x) { return std::exp(-0.5 * h * h * (1 + x * x)) / (1 + x * x); };
      const double direct = (a >= 0 ? 1 : -1) * integrate_finite(f, 0.0, std::abs(a), q).value / (2 * std::numbers::pi);
      worst = std::max(worst, std::abs(owens_t(h, a) - direct));
      worst0 = std::max(worst0, std::abs(owens_t(0.0, a) - std::atan(a) / (2 * std::numbers::pi)));
    }
    record("owens_t", worst <= 1e-12 && worst0 <= 1e-15, std::max(worst, worst0), 1e-12);
  }
  {
    double worst = 0;
    for (int i = 0; i < draws; ++i) {
      const double a = pos(rng), b = pos(rng), g = sym(rng);
      const auto c = canonical_integrals(a, b, g);
      const auto n = bruteforce_theorem_integrals(a, b, g);
      worst = std::max({worst, std::abs(c.up - n.up) / std::abs(c.up), std::abs(c.total - n.total) / std::abs(c.total)});
    }
    record("canonical_integrals", worst <= 1e-9, worst, 1e-9);
  }
  {
    double worst = 0;
    const int per = std::max(5, draws / 4);
    for (int lemma = 1; lemma <= 6; ++lemma)
      for (int i = 0; i < per; ++i) {
        const double a = pos(rng), b = pos(rng), g = sym(rng), x = sym(rng);
        worst = std::max(worst, check_lemma(lemma, a, b, g, x).rel_error);
      }
    record("lemmas", worst <= 1e-9, worst, 1e-9);
  }
  {
    const std::vector<Kernel> kernels{make_sdho(1, 0.5, 1), make_sdho(1, 2, 1), make_ou_mean_revert(1, 3, 30),
                                      make_rational_quadratic(1, 1, 0.75), make_squared_exponential(1, 1)};
    double worst = 0;
    for (const auto& k : kernels)
      for (auto mode : {CrossingMode::Up, CrossingMode::Total}) {
        QuadratureSpec q = default_quadrature(k);
        q.rel_tol = 1e-12;
        q.abs_tol = 1e-16;
        const auto g = variance_rate_asymptotic(k, 0.0, mode, q);
        const auto z = zero_level_stats(k, std::nullopt, mode, q);
        for (auto [x, y] : {std::pair{g.mean, z.mean}, {g.variance, z.variance}, {g.fano, z.fano}})
          worst = std::max(worst, std::abs(x - y) / std::abs(y));
      }
    record("zero_level", worst <= 1e-10, worst, 1e-10);
  }
  {
    double worst = 0;
    for (double u : {0.3, 1.2}) {
      for (int fam = 0; fam < 2; ++fam) {
        auto make = [&](double tau) { return fam ? make_squared_exponential(1, tau) : make_rational_quadratic(1, tau, 0.75); };
        const double f1 = fano(make(1.0), u, CrossingMode::Up);
        for (double tau : {0.5, 7.0}) worst = std::max(worst, std::abs(fano(make(tau), u, CrossingMode::Up) - f1) / f1);
      }
      const double fs = fano(make_sdho(1, 0.5, 1), u, CrossingMode::Up);
      worst = std::max(worst, std::abs(fano(make_sdho(1, 0.5, 9), 3 * u, CrossingMode::Up) - fs) / fs);
      worst = std::max(worst, std::abs(fano(make_sdho(1, 0.5, 1), -u, CrossingMode::Up) - fs) / fs);
      const Kernel ou = make_ou_mean_revert(1, 3, 30);
      const double fo = fano(ou, u, CrossingMode::Up);
      worst = std::max(worst, std::abs(fano(Kernel(map_ou_to_sdho(std::get<OuParams>(ou.params()))), u, CrossingMode::Up) - fo) / fo);
    }
    std::uniform_real_distribution<double> lag(0.01, 20.0), z(0.05, 4.0);
    bool positive = true;
    for (int i = 0; i < 50 * draws; ++i) {
      const auto p = abg_params(make_sdho(1, z(rng), 1), sym(rng), lag(rng));
      positive = positive && p.alpha > 0 && p.beta > 0;
    }
    record("invariance", worst <= 1e-8 && positive, worst, 1e-8);
  }
  return out;
}

namespace {

struct Options {
  KernelOptions kernel;
  double u = 0.0;
  std::vector<double> levels;
  std::string mode = "up";
  std::optional<double> horizon;
  double rel_tol = 0, abs_tol = 0, tail_cutoff = 0;
  std::uint64_t seed = 1;
  long trials = 5000;
  double dt_factor = 0.01;
  bool json = false;
  std::string out;
  int jobs = 0;
  std::vector<std::string> axes;
  std::vector<std::string> quantities{"mean_rate", "var_rate", "fano"};
  std::string method = "auto";
  int bootstrap = 1000;
  int draws = 200;
  std::string dump_path;
};

struct Output {
  std::ofstream file;
  std::ostream* os;
  Output(const std::string& path, std::ostream& fallback) : os(&fallback) {
    if (!path.empty()) {
      file.open(path);
      if (!file) throw ParameterError("cannot open output file '" + path + "'");
      os = &file;
    }
  }
};

nlohmann::ordered_json number(double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr); }

void print_aligned(std::ostream& os, const std::vector<std::pair<std::string, std::string>>& rows) {
  std::size_t w = 0;
  for (const auto& r : rows) w = std::max(w, r.first.size());
  for (const auto& [k, v] : rows) os << k << std::string(w + 2 - k.size(), ' ') << v << '\n';
}

int cmd_stats(const Options& o, std::ostream& out) {
  const Kernel k = build_kernel(o.kernel);
  const CrossingMode mode = parse_mode(o.mode);
  const QuadratureSpec q = quadrature_for(k, o.rel_tol, o.abs_tol, o.tail_cutoff);
  const CrossingStats s = variance_rate_asymptotic(k, o.u, mode, q);
  std::optional<CrossingStats> f;
  if (o.horizon) f = variance_count(k, o.u, *o.horizon, mode, q);
  const bool ok = s.converged && (!f || f->converged);

  Output dst(o.out, out);
  if (o.json) {
    nlohmann::ordered_json j;
    j["kernel"] = k.describe();
    j["mode"] = mode_name(mode);
    j["u"] = o.u;
    j["mean_rate"] = number(s.mean);
    j["var_rate"] = number(s.variance);
    j["var_rate_error"] = number(2 * s.integral_error);
    j["fano"] = number(s.fano);
    j["converged"] = s.converged;
    if (f) {
      j["horizon"] = *o.horizon;
      j["mean_count"] = number(f->mean);
      j["var_count"] = number(f->variance);
      j["var_count_error"] = number(2 * *o.horizon * f->integral_error);
      j["fano_finite"] = number(f->variance / f->mean);
      j["converged_finite"] = f->converged;
    }
    *dst.os << j.dump(2) << '\n';
  } else {
    std::vector<std::pair<std::string, std::string>> rows{
        {"kernel", k.describe()}, {"mode", mode_name(mode)}, {"u", fmt17(o.u)},
        {"mean_rate", fmt17(s.mean)}, {"var_rate", fmt17(s.variance)},
        {"var_rate_error", fmt17(2 * s.integral_error)}, {"fano", fmt17(s.fano)},
        {"converged", s.converged ? "yes" : "no"}};
    if (f) {
      rows.push_back({"horizon", fmt17(*o.horizon)});
      rows.push_back({"mean_count", fmt17(f->mean)});
      rows.push_back({"var_count", fmt17(f->variance)});
      rows.push_back({"var_count_error", fmt17(2 * *o.horizon * f->integral_error)});
      rows.push_back({"fano_finite", fmt17(f->variance / f->mean)});
      rows.push_back({"converged_finite", f->converged ? "yes" : "no"});
    }
    print_aligned(*dst.os, rows);
  }
  return ok ? kOk : kNumeric;
}

int cmd_sweep(const Options& o, std::ostream& out, std::ostream& err) {
  SweepSpec spec;
  spec.kernel = o.kernel;
  spec.u = o.u;
  for (const auto& a : o.axes) spec.axes.push_back(parse_axis(a));
  spec.quantities = o.quantities;
  spec.mode = parse_mode(o.mode);
  spec.horizon = o.horizon;
  spec.rel_tol = o.rel_tol;
  spec.abs_tol = o.abs_tol;
  spec.tail_cutoff = o.tail_cutoff;
  spec.jobs = o.jobs;
  const SweepTable t = run_sweep(spec);
  Output dst(o.out, out);
  if (o.json) write_json(t, *dst.os);
  else write_csv(t, *dst.os);
  if (!t.all_ok) {
    err << "levelcross: some sweep points failed (converged = 0)\n";
    return kNumeric;
  }
  return kOk;
}

int cmd_simulate(const Options& o, std::ostream& out, std::ostream& err) {
  const Kernel k = build_kernel(o.kernel);
  const CrossingMode mode = parse_mode(o.mode);
  SimConfig c(k);
  c.horizon = o.horizon.value_or(120.0);
  c.dt = default_dt(k, o.dt_factor);
  c.trials = o.trials;
  c.seed = o.seed;
  c.mode = mode;
  c.bootstrap = o.bootstrap;
  c.threads = o.jobs;
  if (o.method == "auto") c.method = SimMethod::Auto;
  else if (o.method == "sde") c.method = SimMethod::ExactSde;
  else if (o.method == "circulant") c.method = SimMethod::Circulant;
  else throw ParameterError("method must be auto, sde or circulant");
  c.validate();
  if (c.coarse_step()) err << "levelcross: warning: dt = " << c.dt << " exceeds 0.05 tau_fast; the fastest timescale is poorly resolved\n";
  if (!o.dump_path.empty()) dump_path(*make_simulator(c), 0, o.dump_path);

  const std::vector<double> levels = o.levels.empty() ? std::vector<double>{o.u} : o.levels;
  const auto sims = estimate_stats_multi(c, levels);
  const QuadratureSpec q = quadrature_for(k, o.rel_tol, o.abs_tol, o.tail_cutoff);

  bool numeric_ok = true;
  double worst_z = 0;
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  std::ostringstream text;
  text << "kernel " << k.describe() << ", mode " << mode_name(mode) << ", T = " << c.horizon << ", dt = " << c.dt
       << ", trials = " << c.trials << "\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-10s %-9s %16s %16s %12s %8s\n", "u", "quantity", "analytic", "simulated", "se", "z");
  text << line;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const CrossingStats a = variance_count(k, levels[i], c.horizon, mode, q);
    numeric_ok = numeric_ok && a.converged;
    const SimEstimate& s = sims[i];
    const double var_err = 2 * c.horizon * a.integral_error;
    const double fa = a.variance / a.mean;
    struct Row {
      const char* name;
      double analytic, sim, se;
    };
    const Row rows[] = {{"mean", a.mean, s.mean, s.mean_se},
                        {"variance", a.variance, s.variance, std::hypot(s.variance_se, var_err)},
                        {"fano", fa, s.fano, s.fano_se}};
    nlohmann::ordered_json obj;
    obj["u"] = levels[i];
    for (const auto& r : rows) {
      const double z = (r.sim - r.analytic) / r.se;
      worst_z = std::max(worst_z, std::isfinite(z) ? std::abs(z) : std::numeric_limits<double>::infinity());
      std::snprintf(line, sizeof line, "%-10.4g %-9s %16.9g %16.9g %12.4g %8.3f\n", levels[i], r.name, r.analytic, r.sim, r.se, z);
      text << line;
      obj[std::string(r.name) + "_analytic"] = number(r.analytic);
      obj[std::string(r.name) + "_simulated"] = number(r.sim);
      obj[std::string(r.name) + "_se"] = number(r.se);
      obj[std::string(r.name) + "_z"] = number(z);
    }
    obj["coarse_step"] = s.coarse_step;
    arr.push_back(std::move(obj));
  }
  Output dst(o.out, out);
  if (o.json) *dst.os << arr.dump(2) << '\n';
  else *dst.os << text.str();
  if (!numeric_ok) return kNumeric;
  if (worst_z > 4) {
    err << "levelcross: a z-score exceeds 4 (worst " << worst_z << ")\n";
    return kStatistical;
  }
  return kOk;
}

int cmd_verify(const Options& o, std::ostream& out) {
  const auto results = run_verify_suites(o.draws, o.seed);
  Output dst(o.out, out);
  bool all = true;
  if (o.json) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : results) arr.push_back({{"suite", r.name}, {"pass", r.pass}, {"detail", r.detail}});
    *dst.os << arr.dump(2) << '\n';
  }
  for (const auto& r : results) {
    all = all && r.pass;
    if (!o.json) *dst.os << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
  }
  return all ? kOk : kNumeric;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Level-crossing count statistics of smooth stationary Gaussian processes", "levelcross"};
  app.require_subcommand(1, 1);
  app.set_config("--config", "", "flat key = value file; command-line flags take precedence");
  app.allow_config_extras(CLI::config_extras_mode::error);

  auto* kg = app.add_option_group("kernel");
  kg->add_option("--kernel", o.kernel.kernel, "sdho | ou | rq | se")->check(CLI::IsMember({"sdho", "ou", "rq", "se"}));
  kg->add_option("--omega0", o.kernel.omega0, "SDHO natural frequency");
  kg->add_option("--zeta", o.kernel.zeta, "SDHO damping ratio");
  kg->add_option("--theta", o.kernel.theta, "SDHO noise intensity");
  kg->add_option("--sigma", o.kernel.sigma, "OU/RQ/SE amplitude");
  kg->add_option("--tau", o.kernel.tau, "RQ/SE timescale");
  kg->add_option("--alpha", o.kernel.alpha, "RQ shape");
  kg->add_option("--tau-f", o.kernel.tau_f, "OU input timescale");
  kg->add_option("--tau-e", o.kernel.tau_e, "OU filter timescale");

  auto* lg = app.add_option_group("level");
  lg->add_option("--u", o.u, "crossing level");
  lg->add_option("--levels", o.levels, "levels for simulate (overrides --u)")->delimiter(',');
  lg->add_option("--mode", o.mode, "up | down | total")->check(CLI::IsMember({"up", "down", "total"}));
  lg->add_option("--horizon", o.horizon, "finite observation window T");

  auto* qg = app.add_option_group("quadrature");
  qg->add_option("--rel-tol", o.rel_tol, "relative tolerance (default per kernel)");
  qg->add_option("--abs-tol", o.abs_tol, "absolute tolerance (default per kernel)");
  qg->add_option("--tail-cutoff", o.tail_cutoff, "truncate the lag integral at this many tau_slow");

  auto* sg = app.add_option_group("sweep");
  sg->add_option("--axis", o.axes, "name:min:max:points[:log]; 1 or 2 axes");
  sg->add_option("--quantity", o.quantities, "mean_rate | var_rate | fano")->delimiter(',');

  auto* mg = app.add_option_group("simulation");
  mg->add_option("--seed", o.seed, "random seed");
  mg->add_option("--trials", o.trials, "independent trajectories");
  mg->add_option("--dt-factor", o.dt_factor, "time step as a fraction of tau_slow");
  mg->add_option("--method", o.method, "auto | sde | circulant");
  mg->add_option("--bootstrap", o.bootstrap, "bootstrap resamples for the Fano standard error");
  mg->add_option("--dump-path", o.dump_path, "write trajectory 0 to this file");
  mg->add_option("--draws", o.draws, "random draws per verify suite");

  auto* og = app.add_option_group("output");
  og->add_flag("--json", o.json, "JSON instead of text/CSV");
  og->add_option("--out", o.out, "output file (default stdout)");
  og->add_option("--jobs", o.jobs, "worker threads (0 = all cores)");

  auto* stats = app.add_subcommand("stats", "mean rate, variance rate and Fano factor");
  auto* sweep = app.add_subcommand("sweep", "tabulate quantities over a parameter grid");
  auto* simulate = app.add_subcommand("simulate", "compare analytic values with Monte Carlo");
  auto* verify = app.add_subcommand("verify", "run the oracle suites");
  for (auto* s : {stats, sweep, simulate, verify}) s->fallthrough();

  std::vector<std::string> args;
  for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "levelcross: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (*stats) return cmd_stats(o, out);
    if (*sweep) return cmd_sweep(o, out, err);
    if (*simulate) return cmd_simulate(o, out, err);
    return cmd_verify(o, out);
  } catch (const ParameterError& e) {
    err << "levelcross: " << e.what() << '\n';
    return kUsage;
  } catch (const DomainError& e) {
    err << "levelcross: " << e.what() << '\n';
    return kUsage;
  } catch (const ValidityError& e) {
    err << "levelcross: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "levelcross: " << e.what() << '\n';
    return kNumeric;
  }
}

}  // namespace lcx::cli

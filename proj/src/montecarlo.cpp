#include "levelcross/montecarlo.hpp"

#include <fftw3.h>

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>
#include <thread>
#include <unsupported/Eigen/MatrixFunctions>

#include "levelcross/errors.hpp"
#include "levelcross/special.hpp"

namespace lcx {

namespace {

std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t trial) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(stream),
                    std::uint32_t(trial), std::uint32_t(trial >> 32)};
  return std::mt19937_64(seq);
}

constexpr std::uint64_t kPathStream = 0x50415448;
constexpr std::uint64_t kBootStream = 0x424f4f54;

// Exact one-step transition of dz = A z dt + B dW: z' = Phi z + chol(Q) xi.
class LinearSdeSimulator : public PathSimulator {
 public:
  LinearSdeSimulator(std::size_t n, double dt, std::uint64_t seed, const Eigen::Matrix2d& A,
                     const Eigen::Matrix2d& BBt, const Eigen::Matrix2d& stationary, int observed)
      : PathSimulator(n, dt, seed), observed_(observed) {
    // Van Loan: exp([[-A, BB^T], [0, A^T]] dt) = [[., F12], [0, F22]], Phi = F22^T, Q = Phi F12.
    Eigen::Matrix4d M = Eigen::Matrix4d::Zero();
    M.topLeftCorner<2, 2>() = -A;
    M.topRightCorner<2, 2>() = BBt;
    M.bottomRightCorner<2, 2>() = A.transpose();
    const Eigen::Matrix4d F = (M * dt).exp();
    phi_ = F.bottomRightCorner<2, 2>().transpose();
    Eigen::Matrix2d Q = phi_ * F.topRightCorner<2, 2>();
    Q = 0.5 * (Q + Q.transpose());
    if (!phi_.allFinite() || !Q.allFinite()) throw SimulationError("transition matrix is not finite");
    step_ = chol2(Q, "transition covariance");
    init_ = chol2(stationary, "stationary covariance");
  }

  bool has_aux() const override { return true; }

  void sample(std::uint64_t trial, std::vector<double>& x, std::vector<double>* aux) const override {
    auto gen = trial_rng(seed_, kPathStream, trial);
    std::normal_distribution<double> N;
    x.resize(n_);
    if (aux) aux->resize(n_);
    double a = N(gen), b = N(gen);
    Eigen::Vector2d z(init_(0, 0) * a, init_(1, 0) * a + init_(1, 1) * b);
    for (std::size_t i = 0; i < n_; ++i) {
      x[i] = z(observed_);
      if (aux) (*aux)[i] = z(1 - observed_);
      if (i + 1 == n_) break;
      a = N(gen);
      b = N(gen);
      z = phi_ * z + Eigen::Vector2d(step_(0, 0) * a, step_(1, 0) * a + step_(1, 1) * b);
    }
  }

 private:
  static Eigen::Matrix2d chol2(const Eigen::Matrix2d& S, const char* what) {
    if (!(S(0, 0) > 0)) throw SimulationError(std::string(what) + " is not positive definite");
    Eigen::Matrix2d L = Eigen::Matrix2d::Zero();
    L(0, 0) = std::sqrt(S(0, 0));
    L(1, 0) = S(1, 0) / L(0, 0);
    const double d = S(1, 1) - L(1, 0) * L(1, 0);
    if (d < -1e-12 * S(1, 1)) throw SimulationError(std::string(what) + " is not positive semidefinite");
    L(1, 1) = std::sqrt(std::max(d, 0.0));
    return L;
  }

  Eigen::Matrix2d phi_, step_, init_;
  int observed_;
};

class CirculantSimulator : public PathSimulator {
 public:
  CirculantSimulator(const Kernel& k, std::size_t n, double dt, std::uint64_t seed, int max_doublings,
                     double tolerance)
      : PathSimulator(n, dt, seed) {
    std::size_t m = std::max<std::size_t>(2 * (n - 1), 2);
    for (int attempt = 0;; ++attempt) {
      const double neg = embed(k, m);
      if (neg == 0.0) break;
      if (attempt >= max_doublings) {
        if (neg > tolerance * k.r0())
          throw SimulationError("circulant embedding is not non-negative definite within the padding cap");
        covariance_error_ = neg;
        break;
      }
      m *= 2;
    }
    m_ = m;
    fftw_complex* buf = fftw_alloc_complex(m_);
    plan_ = fftw_plan_dft_1d(int(m_), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_free(buf);
  }
  ~CirculantSimulator() override {
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(plan_);
  }

  void sample(std::uint64_t trial, std::vector<double>& x, std::vector<double>*) const override {
    auto gen = trial_rng(seed_, kPathStream, trial);
    std::normal_distribution<double> N;
    thread_local std::unique_ptr<fftw_complex[], decltype(&fftw_free)> cache(nullptr, &fftw_free);
    thread_local std::size_t cache_size = 0;
    if (cache_size != m_) {
      cache.reset(fftw_alloc_complex(m_));
      cache_size = m_;
    }
    fftw_complex* buf = cache.get();
    for (std::size_t j = 0; j < m_; ++j) {
      buf[j][0] = scale_[j] * N(gen);
      buf[j][1] = scale_[j] * N(gen);
    }
    fftw_execute_dft(plan_, buf, buf);
    x.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) x[i] = buf[i][0];
  }

  double covariance_error() const override { return covariance_error_; }

  static std::mutex& plan_mutex() {
    static std::mutex mu;
    return mu;
  }

 private:
  // Builds the embedding of size m and returns 0 if it is non-negative definite up to roundoff,
  // otherwise the bound sum(|negative eigenvalues|)/m on the covariance change from clamping them.
  // Lags past the path length are free, so the kernel is tapered smoothly to zero there.
  double embed(const Kernel& k, std::size_t m) {
    std::vector<double> c(m);
    const std::size_t half = m / 2;
    const std::size_t last = n_ - 1;
    for (std::size_t j = 0; j <= half; ++j) {
      double w = 1.0;
      if (j > last) {
        const double x = double(j - last) / double(half - last);
        w = 1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
      }
      c[j] = w * k.eval(double(j) * dt_).r;
    }
    for (std::size_t j = half + 1; j < m; ++j) c[j] = c[m - j];
    fftw_complex* buf = fftw_alloc_complex(m);
    for (std::size_t j = 0; j < m; ++j) {
      buf[j][0] = c[j];
      buf[j][1] = 0.0;
    }
    {
      std::lock_guard<std::mutex> lock(plan_mutex());
      fftw_plan p = fftw_plan_dft_1d(int(m), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
      fftw_execute(p);
      fftw_destroy_plan(p);
    }
    double lmin = 0.0, l1 = 0.0, neg = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      lmin = std::min(lmin, buf[j][0]);
      if (buf[j][0] < 0) neg -= buf[j][0];
      l1 += std::abs(c[j]);
    }
    scale_.resize(m);
    for (std::size_t j = 0; j < m; ++j) scale_[j] = std::sqrt(std::max(buf[j][0], 0.0) / double(m));
    fftw_free(buf);
    const double roundoff = 64 * std::numeric_limits<double>::epsilon() * l1;
    return lmin >= -roundoff ? 0.0 : neg / double(m);
  }

  std::size_t m_ = 0;
  double covariance_error_ = 0.0;
  std::vector<double> scale_;
  fftw_plan plan_ = nullptr;
};

int worker_count(int requested, long jobs) {
  long n = requested > 0 ? requested : long(std::max(1u, std::thread::hardware_concurrency()));
  return int(std::max(1L, std::min(n, jobs)));
}

}  // namespace

void SimConfig::validate() const {
  if (!(dt > 0) || !std::isfinite(dt)) throw ParameterError("dt must be positive");
  if (!(horizon >= dt) || !std::isfinite(horizon)) throw ParameterError("horizon must be at least one step");
  if (trials < 2) throw ParameterError("at least two trials are required");
  if (bootstrap < 0) throw ParameterError("bootstrap resamples must be non-negative");
  if (max_padding_doublings < 0 || !(embedding_tolerance >= 0)) throw ParameterError("invalid embedding limits");
}

bool SimConfig::coarse_step() const { return dt > 0.05 * kernel.tau_fast(); }

std::size_t SimConfig::samples() const { return std::size_t(std::llround(horizon / dt)) + 1; }

double default_dt(const Kernel& k, double factor) {
  if (!(factor > 0)) throw ParameterError("dt factor must be positive");
  return factor * k.tau_slow();
}

std::unique_ptr<PathSimulator> simulate_sdho_paths(const SimConfig& c) {
  c.validate();
  const auto* s = std::get_if<SdhoParams>(&c.kernel.params());
  if (!s) throw ParameterError("oscillator simulation needs an sdho kernel");
  const double w = s->omega0, z = s->zeta, th = s->theta;
  Eigen::Matrix2d A;
  A << 0, 1, -w * w, -2 * z * w;
  Eigen::Matrix2d BBt = Eigen::Matrix2d::Zero();
  BBt(1, 1) = 4 * z * w * th;
  Eigen::Matrix2d S = Eigen::Matrix2d::Zero();
  S(0, 0) = th / (w * w);
  S(1, 1) = th;
  return std::make_unique<LinearSdeSimulator>(c.samples(), c.dt, c.seed, A, BBt, S, 0);
}

std::unique_ptr<PathSimulator> simulate_ou_system_paths(const SimConfig& c) {
  c.validate();
  const auto* o = std::get_if<OuParams>(&c.kernel.params());
  if (!o) throw ParameterError("filtered-OU simulation needs an ou kernel");
  // State (x, y): dx = -x/tau_f dt + sqrt(2 sigma^2/tau_f) dW, dy = (x - y)/tau_e dt.
  Eigen::Matrix2d A;
  A << -1 / o->tau_f, 0, 1 / o->tau_e, -1 / o->tau_e;
  Eigen::Matrix2d BBt = Eigen::Matrix2d::Zero();
  BBt(0, 0) = 2 * o->sigma * o->sigma / o->tau_f;
  // Stationary covariance from A S + S A^T + BB^T = 0 over the entries (Sxx, Sxy, Syy).
  Eigen::Matrix3d L;
  L << 2 * A(0, 0), 2 * A(0, 1), 0,
       A(1, 0), A(0, 0) + A(1, 1), A(0, 1),
       0, 2 * A(1, 0), 2 * A(1, 1);
  const Eigen::Vector3d v = L.fullPivLu().solve(Eigen::Vector3d(-BBt(0, 0), -BBt(0, 1), -BBt(1, 1)));
  Eigen::Matrix2d S;
  S << v(0), v(1), v(1), v(2);
  return std::make_unique<LinearSdeSimulator>(c.samples(), c.dt, c.seed, A, BBt, S, 1);
}

std::unique_ptr<PathSimulator> simulate_kernel_paths(const Kernel& kernel, const SimConfig& c) {
  c.validate();
  return std::make_unique<CirculantSimulator>(kernel, c.samples(), c.dt, c.seed, c.max_padding_doublings,
                                              c.embedding_tolerance);
}

std::unique_ptr<PathSimulator> make_simulator(const SimConfig& c) {
  const Family f = c.kernel.family();
  const bool has_sde = f == Family::Sdho || f == Family::OuMeanRevert;
  if (c.method == SimMethod::ExactSde && !has_sde) throw ParameterError("no exact SDE for this kernel family");
  if (c.method == SimMethod::Circulant || !has_sde) return simulate_kernel_paths(c.kernel, c);
  return f == Family::Sdho ? simulate_sdho_paths(c) : simulate_ou_system_paths(c);
}

long count_crossings(const std::vector<double>& x, double u, CrossingMode mode) {
  long up = 0, down = 0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const bool below = x[i] < u, next_below = x[i + 1] < u;
    if (below && !next_below) ++up;
    if (!below && next_below) ++down;
  }
  switch (mode) {
    case CrossingMode::Up: return up;
    case CrossingMode::Down: return down;
    case CrossingMode::Total: return up + down;
  }
  return 0;
}

SimEstimate summarize_counts(std::vector<long> counts, int bootstrap, std::uint64_t seed) {
  SimEstimate e;
  const std::size_t n = counts.size();
  if (n < 2) throw ParameterError("at least two trials are required");
  const double dn = double(n);
  long long total = 0;
  for (long c : counts) total += c;
  const double mean = double(total) / dn;
  double m2 = 0, m4 = 0;
  for (long c : counts) {
    const double d = double(c) - mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  const double s2 = m2 / (dn - 1);
  m4 /= dn;
  e.mean = mean;
  e.variance = s2;
  e.fano = mean > 0 ? s2 / mean : std::numeric_limits<double>::quiet_NaN();
  e.mean_se = std::sqrt(s2 / dn);
  e.variance_se = std::sqrt(std::max(0.0, (m4 - (dn - 3) / (dn - 1) * s2 * s2) / dn));
  e.trials = long(n);
  e.total_crossings = total;

  if (bootstrap > 0 && mean > 0) {
    auto gen = trial_rng(seed, kBootStream, 0);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    double acc = 0, acc2 = 0;
    int used = 0;
    for (int b = 0; b < bootstrap; ++b) {
      double s = 0, ss = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double c = double(counts[pick(gen)]);
        s += c;
        ss += c * c;
      }
      const double bm = s / dn;
      if (!(bm > 0)) continue;
      const double bv = (ss - dn * bm * bm) / (dn - 1);
      const double f = bv / bm;
      acc += f;
      acc2 += f * f;
      ++used;
    }
    if (used > 1) {
      const double fm = acc / used;
      e.fano_se = std::sqrt(std::max(0.0, (acc2 - used * fm * fm) / (used - 1)));
    }
  }
  e.counts = std::move(counts);
  return e;
}

std::vector<SimEstimate> estimate_stats_multi(const SimConfig& config, const std::vector<double>& levels) {
  config.validate();
  if (levels.empty()) throw ParameterError("no levels given");
  const auto sim = make_simulator(config);
  const long trials = config.trials;
  std::vector<std::vector<long>> counts(levels.size(), std::vector<long>(std::size_t(trials)));
  std::atomic<long> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    std::vector<double> path;
    try {
      for (long i; (i = next.fetch_add(1)) < trials;) {
        sim->sample(std::uint64_t(i), path);
        for (std::size_t l = 0; l < levels.size(); ++l)
          counts[l][std::size_t(i)] = count_crossings(path, levels[l], config.mode);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = trials;
    }
  };
  const int nthreads = worker_count(config.threads, trials);
  std::vector<std::thread> pool;
  for (int t = 1; t < nthreads; ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  std::vector<SimEstimate> out;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    SimEstimate e = summarize_counts(std::move(counts[l]), config.bootstrap, config.seed + l);
    e.coarse_step = config.coarse_step();
    out.push_back(std::move(e));
  }
  return out;
}

SimEstimate estimate_stats(const SimConfig& config) { return estimate_stats_multi(config, {config.u}).front(); }

void dump_path(const PathSimulator& sim, std::uint64_t trial, const std::string& file) {
  std::vector<double> x;
  sim.sample(trial, x);
  std::ofstream os(file);
  if (!os) throw Error("cannot open " + file);
  os << std::setprecision(17);
  for (std::size_t i = 0; i < x.size(); ++i) os << double(i) * sim.dt() << ' ' << x[i] << '\n';
}

// ---------------------------------------------------------------------------------------------
// Brute-force velocity integrals.

namespace {

// Excess density f_Q - f_P of (X_0, X_t, X'_0, X'_t) at (u, u, y1, y2), with f_P the
// independent product of the stationary marginals; written as f_P expm1(L).
struct ExcessDensity {
  quad K[4][4];           // Sigma_Q^{-1} - Sigma_0^{-1}
  quad half_log_det = 0;  // log(det Sigma_Q / det Sigma_0) / 2
  quad r0, q0, u;
  double mean_shift;  // |conditional mean of the velocities|
  // Velocity law given X_0 = X_t = u: mean (m1, m2), covariance [[c11, c12], [c12, c22]].
  double m1, m2, c11, c12, c22;

  ExcessDensity(const Kernel& k, double u_, double t) {
    if (!(t > 0)) throw DomainError("lag must be positive");
    const Derivatives<quad> d0 = k.eval_extended(0);
    const Derivatives<quad> d = k.eval_extended(t);
    r0 = d0.r;
    q0 = d0.q;
    u = u_;
    const quad r = d.r, p = d.p, q = d.q;
    const quad s0[4] = {r0, r0, q0, q0};
    // E = Sigma_Q - Sigma_0.
    const quad E[4][4] = {{0, r, 0, p}, {r, 0, -p, 0}, {0, -p, 0, q}, {p, 0, q, 0}};
    // LDL^T of Sigma_Q, tracking pivot deficits dev_i = D_i - s0_i so the log-determinant ratio
    // keeps full relative accuracy when the lag correlations are tiny.
    quad Lm[4][4] = {};
    quad D[4], dev[4];
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < i; ++j) {
        quad v = E[i][j];
        for (int m = 0; m < j; ++m) v -= Lm[i][m] * Lm[j][m] * D[m];
        Lm[i][j] = v / D[j];
      }
      quad def = 0;
      for (int m = 0; m < i; ++m) def -= Lm[i][m] * Lm[i][m] * D[m];
      dev[i] = def;
      D[i] = s0[i] + def;
      if (!(D[i] > 0)) throw DegenerateLagError("lag covariance is not positive definite");
      Lm[i][i] = 1;
    }
    half_log_det = 0;
    for (int i = 0; i < 4; ++i) half_log_det += xp::log1p(dev[i] / s0[i]) / 2;
    // K = -Sigma_Q^{-1} E Sigma_0^{-1}; solve Sigma_Q X = E column by column.
    quad X[4][4];
    for (int c = 0; c < 4; ++c) {
      quad y[4];
      for (int i = 0; i < 4; ++i) {
        y[i] = E[i][c];
        for (int m = 0; m < i; ++m) y[i] -= Lm[i][m] * y[m];
      }
      for (int i = 0; i < 4; ++i) y[i] /= D[i];
      for (int i = 3; i >= 0; --i)
        for (int m = i + 1; m < 4; ++m) y[i] -= Lm[m][i] * y[m];
      for (int i = 0; i < 4; ++i) X[i][c] = y[i];
    }
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) K[i][j] = -X[i][j] / s0[j];
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < i; ++j) K[i][j] = K[j][i] = (K[i][j] + K[j][i]) / 2;
    mean_shift = double(xp::abs(p * u / (r0 + r)));
    // Sigma_YX = [[0, -p], [p, 0]], Sigma_XX^{-1} = [[r0, -r], [-r, r0]] / (r0^2 - r^2).
    const quad gap = (r0 - r) * (r0 + r);
    m1 = double(-p * u / (r0 + r));
    m2 = double(p * u / (r0 + r));
    c11 = double(q0 - p * p * r0 / gap);
    c22 = c11;
    c12 = double(q - p * p * r / gap);
  }

  // Coefficients of the quadratic form in y2 at fixed y1.
  struct Row {
    quad c0, c1, c2;  // L = c0 + c1 y2 + c2 y2^2
    quad log_fp0;     // log f_P without the y2 factor
  };

  Row row(quad y1) const {
    const quad uu = u;
    const quad a = uu * uu * (K[0][0] + 2 * K[0][1] + K[1][1]) + 2 * uu * y1 * (K[0][2] + K[1][2]) + K[2][2] * y1 * y1;
    const quad b = 2 * uu * (K[0][3] + K[1][3]) + 2 * K[2][3] * y1;
    Row rw;
    rw.c0 = -a / 2 - half_log_det;
    rw.c1 = -b / 2;
    rw.c2 = -K[3][3] / 2;
    const quad two_pi = 2 * pi<quad>();
    rw.log_fp0 = -uu * uu / r0 - y1 * y1 / (2 * q0) - xp::log(two_pi * two_pi * r0 * q0);
    return rw;
  }

  double value(const Row& rw, quad y2) const {
    const quad L = rw.c0 + y2 * (rw.c1 + rw.c2 * y2);
    return double(xp::exp(rw.log_fp0 - y2 * y2 / (2 * q0)) * xp::expm1(L));
  }
};

QuadratureSpec brute_quad(const BruteSpec& s, double abs_tol) {
  QuadratureSpec q;
  q.rel_tol = s.rel_tol;
  q.abs_tol = abs_tol;
  q.max_subdivisions = s.max_subdivisions;
  return q;
}

// Adaptive integral over [0, hi] split where a Gaussian feature centred at c with width w sits.
QuadratureResult integrate_around(const Integrand& f, double hi, double c, double w, const QuadratureSpec& q) {
  std::vector<double> cuts{0.0};
  if (w > 0 && std::isfinite(c))
    for (double k : {-12.0, -6.0, -2.0, 0.0, 2.0, 6.0, 12.0}) {
      const double x = c + k * w;
      if (x > cuts.back() && x < hi) cuts.push_back(x);
    }
  cuts.push_back(hi);
  QuadratureResult out{0, 0, 0, true};
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const QuadratureResult r = integrate_finite(f, cuts[i], cuts[i + 1], q);
    out.value += r.value;
    out.error += r.error;
    out.evaluations += r.evaluations;
    out.converged = out.converged && r.converged;
  }
  return out;
}

// Integral of |y1 y2| (f_Q - f_P) over the quadrant with the given signs.
BruteResult quadrant(const ExcessDensity& f, int s1, int s2, double bound, const BruteSpec& spec) {
  BruteResult out;
  bool inner_ok = true;
  double inner_err = 0;
  const QuadratureSpec outer_q = brute_quad(spec, spec.abs_tol);
  // Inner integrals run tighter so their errors stay below the outer tolerance.
  const QuadratureSpec inner_q = brute_quad({spec.rel_tol * 0.1, 0, spec.max_subdivisions}, spec.abs_tol / bound * 0.1);
  const double w2 = std::sqrt(std::max(0.0, f.c22 - f.c12 * f.c12 / f.c11));
  auto outer = [&](double a) {
    const double y1 = s1 * a;
    const ExcessDensity::Row rw = f.row(quad(y1));
    auto inner = [&](double b) { return b * f.value(rw, quad(s2) * quad(b)); };
    const double centre = f.m2 + f.c12 / f.c11 * (y1 - f.m1);
    const QuadratureResult r = integrate_around(inner, bound, s2 * centre, w2, inner_q);
    out.evaluations += r.evaluations;
    inner_ok = inner_ok && r.converged;
    inner_err = std::max(inner_err, a * r.error);
    return a * r.value;
  };
  const QuadratureResult r = integrate_around(outer, bound, s1 * f.m1, std::sqrt(f.c11), outer_q);
  out.value = r.value;
  out.error = r.error + inner_err * bound;
  out.converged = r.converged && inner_ok;
  return out;
}

}  // namespace

BruteResult bruteforce_integrand(const Kernel& k, double u, double t, CrossingMode mode, const BruteSpec& spec) {
  const ExcessDensity f(k, u, t);
  const double bound = f.mean_shift + 12.0 * std::sqrt(k.q0());
  if (mode != CrossingMode::Total) return quadrant(f, 1, 1, bound, spec);
  BruteResult sum;
  sum.converged = true;
  for (int s1 : {1, -1})
    for (int s2 : {1, -1}) {
      const BruteResult q = quadrant(f, s1, s2, bound, spec);
      sum.value += q.value;
      sum.error += q.error;
      sum.evaluations += q.evaluations;
      sum.converged = sum.converged && q.converged;
    }
  return sum;
}

BruteResult bruteforce_integrand_up(const Kernel& k, double u, double t, const BruteSpec& spec) {
  return bruteforce_integrand(k, u, t, CrossingMode::Up, spec);
}

BruteResult bruteforce_integrand_total(const Kernel& k, double u, double t, const BruteSpec& spec) {
  return bruteforce_integrand(k, u, t, CrossingMode::Total, spec);
}

TheoremValues bruteforce_theorem_integrals(double alpha, double beta, double gamma, const BruteSpec& spec) {
  if (!(alpha > 0) || !(beta > 0)) throw DomainError("alpha and beta must be positive");
  const double a = alpha, b = beta, g = gamma;
  const double wy = 12.0 / std::sqrt(b);
  const double lo = g - 12.0 / std::sqrt(a), hi = g + 12.0 / std::sqrt(a);
  QuadratureSpec iq = brute_quad({spec.rel_tol * 0.01, 1e-300, spec.max_subdivisions}, 1e-300);
  QuadratureSpec oq = brute_quad(spec, 1e-300);

  // Over y > |x| (and, doubled, |y| > |x|), and over |y| < |x|.
  auto above = [&](double x) {
    const double ax = std::abs(x);
    auto f = [&](double y) { return (y * y - x * x) * std::exp(-a * (x - g) * (x - g) - b * y * y); };
    return integrate_finite(f, ax, ax + wy, iq).value;
  };
  auto below = [&](double x) {
    const double ax = std::abs(x);
    if (ax == 0) return 0.0;
    auto f = [&](double y) { return (x * x - y * y) * std::exp(-a * (x - g) * (x - g) - b * y * y); };
    return integrate_finite(f, 0.0, ax, iq).value;
  };
  auto outer = [&](const std::function<double(double)>& h) {
    QuadratureResult r{0, 0, 0, true};
    if (lo < 0 && hi > 0) {
      const QuadratureResult l = integrate_finite(h, lo, 0.0, oq);
      const QuadratureResult rr = integrate_finite(h, 0.0, hi, oq);
      r = {l.value + rr.value, l.error + rr.error, l.evaluations + rr.evaluations, l.converged && rr.converged};
    } else {
      r = integrate_finite(h, lo, hi, oq);
    }
    return r;
  };
  const QuadratureResult up = outer(above);
  const QuadratureResult inside = outer(below);
  return {up.value, 2 * up.value + 2 * inside.value, up.error, 2 * (up.error + inside.error)};
}

BruteResult bruteforce_variance(const Kernel& k, double u, double horizon, CrossingMode mode, const BruteSpec& spec) {
  if (!(horizon > 0)) throw DomainError("horizon must be positive");
  const BruteSpec inner{spec.rel_tol * 0.01, spec.abs_tol, spec.max_subdivisions};
  BruteResult out;
  bool ok = true;
  auto f = [&](double t) {
    const BruteResult b = bruteforce_integrand(k, u, t, mode, inner);
    out.evaluations += b.evaluations;
    ok = ok && b.converged;
    return (1 - t / horizon) * b.value;
  };
  // The 4x4 lag covariance is singular to quad precision below ~1e-6 tau_slow; the first sliver
  // [0, t_floor] takes the value at t_floor.
  const double t_floor = 1e-5 * k.tau_slow();
  if (!(horizon > t_floor)) throw DomainError("horizon must exceed 1e-5 slow timescales for the brute-force variance");
  const double g1 = bruteforce_integrand(k, u, t_floor, mode, inner).value;
  const double g2 = bruteforce_integrand(k, u, 2 * t_floor, mode, inner).value;
  const double head = t_floor * (1 - 0.5 * t_floor / horizon) * g1, head_err = t_floor * std::abs(g2 - g1);
  QuadratureSpec q = brute_quad(spec, spec.abs_tol);
  const QuadratureResult r = integrate_finite(f, t_floor, horizon, q);
  out.value = mean_count(k, u, horizon, mode) + 2 * horizon * (head + r.value);
  out.error = 2 * horizon * (r.error + head_err);
  out.converged = ok && r.converged;
  return out;
}

LemmaCheck check_lemma(int lemma, double alpha, double beta, double gamma, double x) {
  if (!(alpha > 0) || !(beta > 0)) throw DomainError("alpha and beta must be positive");
  const double a = alpha, b = beta, g = gamma;
  const double sp = std::sqrt(std::numbers::pi);
  const double apb = a + b;
  QuadratureSpec q;
  q.rel_tol = 1e-13;
  q.abs_tol = 1e-300;
  q.max_subdivisions = 4000;
  auto quad1 = [&](const std::function<double(double)>& f, double lo, double hi, double split) {
    if (split > lo && split < hi) return integrate_finite(f, lo, split, q).value + integrate_finite(f, split, hi, q).value;
    return integrate_finite(f, lo, hi, q).value;
  };
  double closed = 0, numeric = 0;
  switch (lemma) {
    case 1: {
      const double ax = std::abs(x);
      const double ea = std::exp(-a * (x - g) * (x - g));
      closed = ax * std::exp(-a * (x - g) * (x - g) - b * x * x) / (2 * b) -
               sp / (4 * std::pow(b, 1.5)) * (2 * b * x * x - 1) * ea * std::erfc(std::sqrt(b) * ax);
      auto f = [&](double y) { return (y * y - x * x) * std::exp(-a * (x - g) * (x - g) - b * y * y); };
      numeric = quad1(f, ax, ax + 12 / std::sqrt(b), -1);
      break;
    }
    case 2: {
      closed = (std::exp(-a * g * g) * std::sqrt(apb) +
                sp * a * g * std::exp(-a * b * g * g / apb) * std::erf(a * g / std::sqrt(apb))) /
               std::pow(apb, 1.5);
      auto f = [&](double y) { return std::abs(y) * std::exp(-a * (y - g) * (y - g) - b * y * y); };
      const double c = a * g / apb, w = 12 / std::sqrt(apb);
      numeric = quad1(f, c - w, c + w, 0.0);
      break;
    }
    case 3: {
      const double c = g * std::sqrt(b), w = 12 * std::sqrt(b / a);
      closed = sp * std::sqrt(b / a) * (b / a + 2 * b * g * g - 1);
      auto f = [&](double y) { return (2 * y * y - 1) * std::exp(-a / b * (y - c) * (y - c)); };
      numeric = quad1(f, c - w, c + w, c);
      break;
    }
    case 4: {
      const double c = g * std::sqrt(b);
      closed = -b / std::pow(apb, 1.5) *
               (std::exp(-a * g * g) * std::sqrt(apb) +
                sp * g * (2 * a + b) * std::exp(-a * b * g * g / apb) * std::erf(a * g / std::sqrt(apb)));
      // The growing exponential is folded into the Gaussian: -(a/b)(y+c)^2 + 4 a g y / sqrt(b) = -(a/b)(y-c)^2.
      auto f = [&](double y) {
        const double e1 = std::exp(-a / b * (y + c) * (y + c) - y * y);
        const double e2 = std::exp(-a / b * (y - c) * (y - c) - y * y);
        return e1 * (c - y) - (y + c) * e2;
      };
      numeric = quad1(f, 0.0, std::abs(c) + 12, std::abs(c));
      break;
    }
    case 5: {
      const double r = std::sqrt(a / b), c = g * std::sqrt(b);
      closed = 4 * sp * owens_t(std::sqrt(2 * a * b / apb) * g, r);
      // erf(p) + erf(q) with p > 0 > q equals erfc(-q) - erfc(p), which keeps tiny sums accurate
      auto erf_pair = [](double p, double q) {
        if (p > 0 && q < 0) return std::erfc(-q) - std::erfc(p);
        if (p < 0 && q > 0) return std::erfc(-p) - std::erfc(q);
        return std::erf(p) + std::erf(q);
      };
      auto f = [&](double y) { return std::exp(-y * y) * erf_pair(r * (y + c), r * (y - c)); };
      numeric = quad1(f, 0.0, 12.0, std::abs(c));
      break;
    }
    case 6: {
      closed = std::numbers::pi / 2 * (a - b - 2 * a * b * g * g) / std::pow(a * b, 1.5);
      const double wy = 12 / std::sqrt(b), wx = 12 / std::sqrt(a);
      auto f = [&](double xx) {
        auto h = [&](double y) { return (y * y - xx * xx) * std::exp(-a * (xx - g) * (xx - g) - b * y * y); };
        QuadratureSpec iq = q;
        iq.rel_tol = 1e-14;
        return integrate_finite(h, -wy, 0.0, iq).value + integrate_finite(h, 0.0, wy, iq).value;
      };
      numeric = quad1(f, g - wx, g + wx, g);
      break;
    }
    default: throw ParameterError("lemma index must be in 1..6");
  }
  const double rel = closed == 0 ? std::abs(numeric) : std::abs(closed - numeric) / std::abs(closed);
  return {lemma, closed, numeric, rel};
}

}  // namespace lcx

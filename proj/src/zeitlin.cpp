#include "eulerstab/zeitlin.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

namespace eulerstab {

namespace {

using cd = std::complex<double>;

int mod(long long a, int L) {
  const long long r = a % L;
  return static_cast<int>(r < 0 ? r + L : r);
}

// Column-major flat index of mode k in the coefficient matrix.
int flat_index(const ModeIndex& k, int N) {
  const int L = 2 * N + 1;
  return (k.x() + N) + (k.y() + N) * L;
}

ModeIndex mode_of(int flat, int N) {
  const int L = 2 * N + 1;
  return {flat % L - N, flat / L - N};
}

}  // namespace

TruncationSpec::TruncationSpec(int N, double kappa) : N_(N), kappa_(kappa) {
  if (N_ < 1) throw std::invalid_argument("truncation N must be at least 1");
  if (!(kappa_ > 0.0) || !std::isfinite(kappa_)) throw std::invalid_argument("kappa must be positive");
}

double TruncationSpec::epsilon() const { return 2.0 * std::numbers::pi / size(); }

ModeIndex TruncationSpec::wrap(const ModeIndex& k) const {
  const int L = size();
  return {mod(k.x() + N_, L) - N_, mod(k.y() + N_, L) - N_};
}

TruncatedState::TruncatedState(const TruncationSpec& trunc)
    : N_(trunc.N()), omega_(Eigen::MatrixXcd::Zero(trunc.size(), trunc.size())) {}

double TruncatedState::reality_violation() const {
  const int L = 2 * N_ + 1;
  double worst = 0.0;
  for (int i = 0; i < L; ++i) {
    for (int j = 0; j < L; ++j) {
      worst = std::max(worst, std::abs(omega_(L - 1 - i, L - 1 - j) - std::conj(omega_(i, j))));
    }
  }
  return worst;
}

void TruncatedState::enforce_reality() {
  const int L = 2 * N_ + 1;
  for (int i = 0; i < L; ++i) {
    for (int j = 0; j < L; ++j) {
      const int mi = L - 1 - i;
      const int mj = L - 1 - j;
      if (mi * L + mj < i * L + j) continue;  // each conjugate pair once
      const cd avg = 0.5 * (omega_(i, j) + std::conj(omega_(mi, mj)));
      omega_(i, j) = avg;
      omega_(mi, mj) = std::conj(avg);
    }
  }
  omega_(N_, N_) = 0.0;
}

double structure_constant(const ModeIndex& k, const ModeIndex& l, const TruncationSpec& trunc) {
  const int L = trunc.size();
  int s = mod(cross(k, l), L);
  if (s > L / 2) s -= L;
  const double eps = trunc.epsilon();
  return trunc.kappa() * std::sin(eps * s) / eps;
}

TruncatedState vector_field(const TruncatedState& state, const TruncationSpec& trunc) {
  const int N = trunc.N();
  const int L = trunc.size();
  const double eps = trunc.epsilon();
  std::vector<double> sine(static_cast<std::size_t>(L));
  for (int s = 0; s < L; ++s) sine[static_cast<std::size_t>(s)] = trunc.kappa() * std::sin(eps * s) / eps;

  const Eigen::MatrixXcd& w = state.coefficients();
  Eigen::MatrixXd inv_norm(L, L);
  for (int a = 0; a < L; ++a) {
    for (int b = 0; b < L; ++b) {
      const ModeIndex j(a - N, b - N);
      inv_norm(a, b) = j.isZero() ? 0.0 : 1.0 / weighted_norm_sq(j, trunc.kappa());
    }
  }

  TruncatedState out(trunc);
  out.time = state.time;
  for (int k1 = -N; k1 <= N; ++k1) {
    for (int k2 = -N; k2 <= N; ++k2) {
      if (k1 == 0 && k2 == 0) continue;
      cd acc = 0.0;
      for (int j1 = -N; j1 <= N; ++j1) {
        const int m1 = mod(k1 + j1 + N, L);
        for (int j2 = -N; j2 <= N; ++j2) {
          const double weight = inv_norm(j1 + N, j2 + N);
          if (weight == 0.0) continue;
          const int m2 = mod(k2 + j2 + N, L);
          const cd target = w(m1, m2);
          if (target == cd(0.0)) continue;
          const double c = sine[static_cast<std::size_t>(mod(static_cast<long long>(k1) * j2 - static_cast<long long>(k2) * j1, L))];
          acc += c * weight * w(N - j1, N - j2) * target;
        }
      }
      out(ModeIndex(k1, k2)) = acc;
    }
  }
  return out;
}

double hamiltonian(const TruncatedState& state, const TruncationSpec& trunc) {
  const int N = trunc.N();
  double h = 0.0;
  for (int k1 = -N; k1 <= N; ++k1) {
    for (int k2 = -N; k2 <= N; ++k2) {
      const ModeIndex k(k1, k2);
      if (k.isZero()) continue;
      h += std::norm(state(k)) / weighted_norm_sq(k, trunc.kappa());
    }
  }
  return 0.5 * h;
}

Eigen::MatrixXcd basis_matrix(const ModeIndex& k, const TruncationSpec& trunc) {
  const int L = trunc.size();
  const double eps = trunc.epsilon();
  Eigen::MatrixXcd T = Eigen::MatrixXcd::Zero(L, L);
  for (int c = 0; c < L; ++c) {
    const int r = mod(c + k.y(), L);
    const int e = mod(-static_cast<long long>(k.x()) * k.y() + 2LL * k.x() * r, L);
    T(r, c) = std::polar(1.0, eps * e);
  }
  return T;
}

Eigen::MatrixXcd casimir_matrix(const TruncatedState& state, const TruncationSpec& trunc) {
  const int N = trunc.N();
  const int L = trunc.size();
  const double eps = trunc.epsilon();
  std::vector<cd> phase(static_cast<std::size_t>(L));
  for (int e = 0; e < L; ++e) phase[static_cast<std::size_t>(e)] = std::polar(1.0, eps * e);
  Eigen::MatrixXcd W = Eigen::MatrixXcd::Zero(L, L);
  for (int k1 = -N; k1 <= N; ++k1) {
    for (int k2 = -N; k2 <= N; ++k2) {
      const cd w = state(ModeIndex(k1, k2));
      if (w == cd(0.0)) continue;
      for (int c = 0; c < L; ++c) {
        const int r = mod(c + k2, L);
        const int e = mod(-static_cast<long long>(k1) * k2 + 2LL * k1 * r, L);
        W(r, c) += w * phase[static_cast<std::size_t>(e)];
      }
    }
  }
  return W;
}

Eigen::VectorXd casimirs(const TruncatedState& state, int max_order, const TruncationSpec& trunc) {
  const int L = trunc.size();
  if (max_order < 2 || max_order > L) {
    throw std::invalid_argument("Casimir order must lie in [2, 2N+1]");
  }
  const Eigen::MatrixXcd W = casimir_matrix(state, trunc);
  Eigen::MatrixXcd power = W;
  Eigen::VectorXd out(max_order - 1);
  for (int n = 2; n <= max_order; ++n) {
    power = power * W;
    const cd tr = power.trace() / static_cast<double>(L);
    if (std::abs(tr.imag()) > 1e-10 * std::max(1.0, std::abs(tr.real()))) {
      throw std::domain_error("Casimir trace is not real; the state violates the reality condition");
    }
    out(n - 2) = tr.real();
  }
  return out;
}

double casimir(const TruncatedState& state, int n, const TruncationSpec& trunc) {
  if (n < 2 || n > trunc.size()) throw std::invalid_argument("Casimir order must lie in [2, 2N+1]");
  return casimirs(state, n, trunc)(n - 2);
}

LiePoissonIntegrator::LiePoissonIntegrator(const TruncationSpec& trunc) : trunc_(trunc) {
  const int N = trunc.N();
  const int L = trunc.size();
  const double eps = trunc.epsilon();

  std::vector<ModeIndex> reps;
  for (int k1 = 0; k1 <= N; ++k1) {
    for (int k2 = -N; k2 <= N; ++k2) {
      if (k1 > 0 || k2 > 0) reps.emplace_back(k1, k2);
    }
  }
  std::stable_sort(reps.begin(), reps.end(), [&](const ModeIndex& a, const ModeIndex& b) {
    return weighted_norm_sq(a, trunc.kappa()) < weighted_norm_sq(b, trunc.kappa());
  });

  for (const ModeIndex& k : reps) {
    PairFlow pair;
    pair.k = k;
    pair.length = L / std::gcd(std::gcd(std::abs(k.x()), std::abs(k.y())), L);
    const double inv_norm = 1.0 / weighted_norm_sq(k, trunc.kappa());

    std::vector<char> visited(static_cast<std::size_t>(L * L), 0);
    std::vector<int> cyc;
    std::vector<int> mir;
    std::vector<double> coupling;
    for (int f = 0; f < L * L; ++f) {
      if (visited[static_cast<std::size_t>(f)]) continue;
      const ModeIndex j = mode_of(f, N);
      // Cycles with j x k = s and -s are conjugate mirrors; s = 0 is static.
      const int s = mod(cross(j, k), L);
      if (s == 0 || s > N) continue;
      ModeIndex cur = j;
      for (int m = 0; m < pair.length; ++m) {
        const int fc = flat_index(cur, N);
        visited[static_cast<std::size_t>(fc)] = 1;
        cyc.push_back(fc);
        mir.push_back(flat_index(ModeIndex(-cur.x(), -cur.y()), N));
        cur = trunc.wrap(cur + k);
      }
      coupling.push_back(trunc.kappa() * std::sin(eps * s) / eps * inv_norm);
    }
    const auto count = static_cast<Eigen::Index>(coupling.size());
    pair.cycles = Eigen::Map<Eigen::MatrixXi>(cyc.data(), pair.length, count);
    pair.mirrors = Eigen::Map<Eigen::MatrixXi>(mir.data(), pair.length, count);
    pair.coupling = Eigen::Map<Eigen::VectorXd>(coupling.data(), count);

    if (!fourier_.contains(pair.length)) {
      const int c = pair.length;
      Fourier F;
      F.forward.resize(c, c);
      F.roots.resize(c);
      for (int q = 0; q < c; ++q) {
        F.roots(q) = std::polar(1.0, 2.0 * std::numbers::pi * q / c);
        for (int m = 0; m < c; ++m) {
          F.forward(q, m) = std::polar(1.0, -2.0 * std::numbers::pi * mod(static_cast<long long>(q) * m, c) / c);
        }
      }
      fourier_.emplace(c, std::move(F));
    }
    pairs_.push_back(std::move(pair));
  }
}

std::vector<ModeIndex> LiePoissonIntegrator::pair_order() const {
  std::vector<ModeIndex> out;
  out.reserve(pairs_.size());
  for (const PairFlow& p : pairs_) out.push_back(p.k);
  return out;
}

void LiePoissonIntegrator::apply(const PairFlow& pair, Eigen::MatrixXcd& omega, double t) const {
  const Eigen::Index count = pair.coupling.size();
  if (count == 0) return;
  const int N = trunc_.N();
  cd* w = omega.data();
  const cd beta = w[flat_index(-pair.k, N)];
  const cd b = w[flat_index(pair.k, N)];
  const Fourier& F = fourier_.at(pair.length);
  const int c = pair.length;

  Eigen::MatrixXcd X(c, count);
  for (Eigen::Index col = 0; col < count; ++col) {
    for (int m = 0; m < c; ++m) X(m, col) = w[pair.cycles(m, col)];
  }
  Eigen::MatrixXcd spectral = F.forward * X;
  for (int q = 0; q < c; ++q) {
    const cd symbol = beta * F.roots(q) - b * std::conj(F.roots(q));
    for (Eigen::Index col = 0; col < count; ++col) {
      spectral(q, col) *= std::exp(t * pair.coupling(col) * symbol);
    }
  }
  X.noalias() = F.forward.adjoint() * spectral;
  X /= static_cast<double>(c);
  for (Eigen::Index col = 0; col < count; ++col) {
    for (int m = 0; m < c; ++m) {
      w[pair.cycles(m, col)] = X(m, col);
      w[pair.mirrors(m, col)] = std::conj(X(m, col));
    }
  }
}

void LiePoissonIntegrator::pair_flow(TruncatedState& state, const ModeIndex& k, double t) const {
  const ModeIndex rep = (k.x() > 0 || (k.x() == 0 && k.y() > 0)) ? k : ModeIndex(-k);
  for (const PairFlow& p : pairs_) {
    if (p.k == rep) {
      apply(p, state.coefficients(), t);
      return;
    }
  }
  throw std::invalid_argument("pair_flow: mode is not a nonzero mode of the truncation");
}

void LiePoissonIntegrator::step(TruncatedState& state, double dt) const {
  if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
  Eigen::MatrixXcd& omega = state.coefficients();
  const std::size_t P = pairs_.size();
  const double half = 0.5 * dt;
  for (std::size_t i = 0; i + 1 < P; ++i) apply(pairs_[i], omega, half);
  apply(pairs_[P - 1], omega, dt);
  for (std::size_t i = P - 1; i-- > 0;) apply(pairs_[i], omega, half);
  state.enforce_reality();
  state.time += dt;
}

TruncatedState lie_poisson_step(const TruncatedState& state, double dt, const TruncationSpec& trunc) {
  TruncatedState out = state;
  LiePoissonIntegrator(trunc).step(out, dt);
  return out;
}

std::vector<double> ConservationLog::hamiltonian_drift() const {
  std::vector<double> out;
  out.reserve(hamiltonian.size());
  const double h0 = hamiltonian.empty() ? 0.0 : hamiltonian.front();
  for (double h : hamiltonian) out.push_back(h0 != 0.0 ? std::abs(h - h0) / std::abs(h0) : std::abs(h - h0));
  return out;
}

double ConservationLog::max_hamiltonian_drift() const {
  const std::vector<double> d = hamiltonian_drift();
  return d.empty() ? 0.0 : *std::max_element(d.begin(), d.end());
}

Eigen::VectorXd ConservationLog::max_casimir_drift() const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(casimirs.cols());
  if (casimirs.rows() == 0) return out;
  const double c2 = std::abs(casimirs(0, 0));
  for (Eigen::Index n = 0; n < casimirs.cols(); ++n) {
    const double order = static_cast<double>(n + 2);
    double scale = std::max(std::abs(casimirs(0, n)), std::pow(c2, order / 2.0));
    if (scale == 0.0) scale = 1.0;
    out(n) = (casimirs.col(n).array() - casimirs(0, n)).abs().maxCoeff() / scale;
  }
  return out;
}

double state_distance(const TruncatedState& a, const TruncatedState& b) {
  return (a.coefficients() - b.coefficients()).norm();
}

SimulationResult simulate(const TruncatedState& initial, double t_end, double dt,
                          const TruncationSpec& trunc, const SimulationOptions& options) {
  if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
  if (!(t_end >= 0.0)) throw std::invalid_argument("t_end must be nonnegative");
  if (initial.N() != trunc.N()) throw std::invalid_argument("state and truncation disagree on N");
  const int every = std::max(1, options.snapshot_every);

  const LiePoissonIntegrator integrator(trunc);
  SimulationResult result;
  result.log.max_order = std::min(options.max_casimir_order, trunc.size());
  std::vector<Eigen::VectorXd> rows;

  TruncatedState state = initial;
  auto record = [&] {
    result.log.time.push_back(state.time);
    result.log.hamiltonian.push_back(hamiltonian(state, trunc));
    rows.push_back(casimirs(state, result.log.max_order, trunc));
    if (options.reference) result.perturbation_norm.push_back(state_distance(state, *options.reference));
  };

  record();
  result.snapshots.push_back(state);
  const long long steps = t_end > 0.0 ? static_cast<long long>(std::ceil(t_end / dt - 1e-9)) : 0;
  const double start = initial.time;
  for (long long s = 1; s <= steps; ++s) {
    const double h = (s == steps) ? t_end - static_cast<double>(steps - 1) * dt : dt;
    integrator.step(state, h);
    if (s == steps) state.time = start + t_end;
    record();
    if (s % every == 0 || s == steps) result.snapshots.push_back(state);
  }

  result.log.casimirs.resize(static_cast<Eigen::Index>(rows.size()), result.log.max_order - 1);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    result.log.casimirs.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
  }
  return result;
}

TruncatedState perturbed_equilibrium(const DomainSpec& spec, const TruncationSpec& trunc,
                                     double delta, std::uint64_t seed) {
  if (!trunc.contains(spec.p())) throw std::invalid_argument("p lies outside the truncated lattice");
  if (!(delta >= 0.0)) throw std::invalid_argument("perturbation size must be nonnegative");
  const int N = trunc.N();
  TruncatedState state(trunc);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const ModeIndex& p = spec.p();
  for (int k1 = 0; k1 <= N; ++k1) {
    for (int k2 = -N; k2 <= N; ++k2) {
      if (k1 == 0 && k2 <= 0) continue;
      const ModeIndex k(k1, k2);
      const double r = delta * unit(rng);
      const double phi = 2.0 * std::numbers::pi * unit(rng);
      if (k == p || k == -p) continue;
      state(k) = std::polar(r, phi);
      state(-k) = std::conj(state(k));
    }
  }
  state(p) = spec.gamma();
  state(-p) = spec.gamma();
  return state;
}

TruncatedState random_state(const TruncationSpec& trunc, double amplitude, std::uint64_t seed) {
  const int N = trunc.N();
  TruncatedState state(trunc);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k1 = 0; k1 <= N; ++k1) {
    for (int k2 = -N; k2 <= N; ++k2) {
      if (k1 == 0 && k2 <= 0) continue;
      const ModeIndex k(k1, k2);
      const double r = amplitude * unit(rng) / std::sqrt(weighted_norm_sq(k, trunc.kappa()));
      state(k) = std::polar(r, 2.0 * std::numbers::pi * unit(rng));
      state(-k) = std::conj(state(k));
    }
  }
  return state;
}

Eigen::MatrixXd vorticity_grid(const TruncatedState& state, const TruncationSpec& trunc,
                               int resolution) {
  if (resolution < 1) throw std::invalid_argument("grid resolution must be positive");
  const int N = trunc.N();
  const int L = trunc.size();
  Eigen::MatrixXcd E(resolution, L);
  for (int i = 0; i < resolution; ++i) {
    // kappa k2 x2 = 2 pi k2 j / R, so both directions share one table.
    for (int a = 0; a < L; ++a) E(i, a) = std::polar(1.0, 2.0 * std::numbers::pi * mod(static_cast<long long>(a - N) * i, resolution) / resolution);
  }
  const Eigen::MatrixXcd grid = E * state.coefficients() * E.transpose();
  const double scale = std::max(1.0, grid.cwiseAbs().maxCoeff());
  if (grid.imag().cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw std::domain_error("vorticity grid is not real; the state violates the reality condition");
  }
  return grid.real();
}

bool wrapped_casimir_stability_probe(const DomainSpec& spec, const TruncationSpec& trunc) {
  if (spec.p().y() != 0) throw std::invalid_argument("wrapped Casimir probe needs p = (p1, 0)");
  const int p1 = std::abs(spec.p().x());
  return std::gcd(trunc.size(), p1) == 1 && spec.kappa() >= p1;
}

std::optional<double> fit_growth_rate(std::span<const double> times, std::span<const double> norms,
                                      double lower, double upper) {
  if (times.size() != norms.size()) throw std::invalid_argument("times and norms differ in length");
  std::size_t i = 0;
  while (i < norms.size() && norms[i] < lower) ++i;
  double st = 0, sy = 0, stt = 0, sty = 0;
  int n = 0;
  for (; i < norms.size() && norms[i] >= lower && norms[i] <= upper; ++i) {
    const double y = std::log(norms[i]);
    st += times[i];
    sy += y;
    stt += times[i] * times[i];
    sty += times[i] * y;
    ++n;
  }
  if (n < 3) return std::nullopt;
  const double denom = n * stt - st * st;
  if (denom <= 0.0) return std::nullopt;
  return (n * sty - st * sy) / denom;
}

}  // namespace eulerstab

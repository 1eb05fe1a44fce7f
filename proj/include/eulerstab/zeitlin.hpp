#pragma once

#include "eulerstab/lattice.hpp"

#include <Eigen/Core>

#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace eulerstab {

/// Mode cutoff N (lattice {-N..N}^2, wrapped modulo 2N + 1) and torus aspect.
class TruncationSpec {
 public:
  /// Throws std::invalid_argument unless N >= 1 and kappa > 0.
  TruncationSpec(int N, double kappa);

  int N() const { return N_; }
  int size() const { return 2 * N_ + 1; }
  double kappa() const { return kappa_; }
  /// 2 pi / (2N + 1)
  double epsilon() const;

  /// Componentwise wrap into {-N..N}.
  ModeIndex wrap(const ModeIndex& k) const;
  bool contains(const ModeIndex& k) const {
    return std::abs(k.x()) <= N_ && std::abs(k.y()) <= N_;
  }

 private:
  int N_;
  double kappa_;
};

/// Complex mode amplitudes omega_k on the truncated lattice. Entry (i, j) of
/// the coefficient matrix holds omega_(i - N, j - N); the mean mode is kept at
/// zero.
class TruncatedState {
 public:
  explicit TruncatedState(const TruncationSpec& trunc);

  int N() const { return N_; }
  double time = 0.0;

  std::complex<double>& operator()(const ModeIndex& k) { return omega_(k.x() + N_, k.y() + N_); }
  const std::complex<double>& operator()(const ModeIndex& k) const {
    return omega_(k.x() + N_, k.y() + N_);
  }

  Eigen::MatrixXcd& coefficients() { return omega_; }
  const Eigen::MatrixXcd& coefficients() const { return omega_; }

  /// max_k |omega_{-k} - conj(omega_k)|
  double reality_violation() const;
  /// omega_k <- (omega_k + conj(omega_{-k})) / 2 and omega_0 <- 0.
  void enforce_reality();

 private:
  int N_;
  Eigen::MatrixXcd omega_;
};

/// kappa sin(eps k x l) / eps.
double structure_constant(const ModeIndex& k, const ModeIndex& l, const TruncationSpec& trunc);

/// d omega_k / dt = sum_j c(k, j) omega_{-j} omega_{k+j (wrapped)} / |j|_kappa^2.
TruncatedState vector_field(const TruncatedState& state, const TruncationSpec& trunc);

/// H = 1/2 sum_k |omega_k|^2 / |k|_kappa^2.
double hamiltonian(const TruncatedState& state, const TruncationSpec& trunc);

/// The (2N+1)x(2N+1) matrix sum_k omega_k T_k, with T_k = q^{-k1 k2} Z^{k1} X^{k2},
/// Z = diag(1, q^2, q^4, ...), X the cyclic shift e_j -> e_{j+1}, q = exp(i eps).
/// These satisfy T_k T_l = exp(i eps k x l) T_{k+l}.
Eigen::MatrixXcd casimir_matrix(const TruncatedState& state, const TruncationSpec& trunc);

/// Representation matrix T_k.
Eigen::MatrixXcd basis_matrix(const ModeIndex& k, const TruncationSpec& trunc);

/// C_n = tr(W^n) / (2N+1). Throws std::invalid_argument unless 2 <= n <= 2N+1.
double casimir(const TruncatedState& state, int n, const TruncationSpec& trunc);

/// C_2 .. C_max_order in one pass.
Eigen::VectorXd casimirs(const TruncatedState& state, int max_order, const TruncationSpec& trunc);

/// Explicit Lie-Poisson integrator: Strang composition of the exact flows of
/// the pair Hamiltonians omega_k omega_{-k} / |k|^2, pairs ordered by |k|_kappa.
///
/// Under one pair flow omega_{+-k} are frozen and every other mode moves on a
/// cycle j, j+k, j+2k, ... (mod 2N+1) by a circulant linear system with the
/// constant coupling c(j, k) / |k|^2; each cycle is advanced exactly in its
/// discrete Fourier basis. All cycles of one pair have the same length, so a
/// flow is two small dense products. Mirror cycles are filled by conjugation.
/// The precomputed cycle tables are immutable and may be shared between threads.
class LiePoissonIntegrator {
 public:
  explicit LiePoissonIntegrator(const TruncationSpec& trunc);

  const TruncationSpec& truncation() const { return trunc_; }

  /// One Strang step. Throws std::invalid_argument for dt <= 0.
  void step(TruncatedState& state, double dt) const;

  /// Exact flow of the single pair Hamiltonian through `k` for time t.
  void pair_flow(TruncatedState& state, const ModeIndex& k, double t) const;

  /// Pair representatives in composition order.
  std::vector<ModeIndex> pair_order() const;

 private:
  struct PairFlow {
    ModeIndex k;
    int length = 0;
    Eigen::MatrixXi cycles;     // length x count, flat indices of the computed half
    Eigen::MatrixXi mirrors;    // flat indices of the negated modes
    Eigen::VectorXd coupling;   // c(j, k) / |k|^2 per cycle
  };
  struct Fourier {
    Eigen::MatrixXcd forward;   // F(q, m) = exp(-2 pi i q m / c)
    Eigen::VectorXcd roots;     // exp(2 pi i q / c)
  };

  void apply(const PairFlow& pair, Eigen::MatrixXcd& omega, double t) const;

  TruncationSpec trunc_;
  std::vector<PairFlow> pairs_;
  std::map<int, Fourier> fourier_;
};

/// One Strang step; builds the pair tables on each call.
TruncatedState lie_poisson_step(const TruncatedState& state, double dt, const TruncationSpec& trunc);

struct ConservationLog {
  int max_order = 5;
  std::vector<double> time;
  std::vector<double> hamiltonian;
  /// Row r holds C_2 .. C_max_order at time[r].
  Eigen::MatrixXd casimirs;

  /// |H - H0| / H0 per record.
  std::vector<double> hamiltonian_drift() const;
  /// |C_n - C_n(0)| / max(|C_n(0)|, C_2(0)^{n/2}), max over records, for n = 2..max_order.
  Eigen::VectorXd max_casimir_drift() const;
  double max_hamiltonian_drift() const;
};

struct SimulationOptions {
  /// Keep every n-th state (the initial and final states are always kept).
  int snapshot_every = 100;
  int max_casimir_order = 5;
  /// Perturbation norms are measured against this state when present.
  std::optional<TruncatedState> reference;
};

struct SimulationResult {
  std::vector<TruncatedState> snapshots;
  ConservationLog log;
  /// ||omega - reference||_2 at each log time (empty without a reference).
  std::vector<double> perturbation_norm;
};

/// Advances the state by a duration t_end from initial.time; the last step is
/// shortened to land exactly on the end time. Deterministic. Throws std::invalid_argument for dt <= 0 or t_end < 0.
SimulationResult simulate(const TruncatedState& initial, double t_end, double dt,
                          const TruncationSpec& trunc, const SimulationOptions& options = {});

/// Equilibrium omega_{+-p} = gamma plus a reality-respecting perturbation of
/// modulus at most delta on every other mode, drawn from std::mt19937_64(seed).
/// Throws std::invalid_argument when p lies outside the truncation or delta < 0.
TruncatedState perturbed_equilibrium(const DomainSpec& spec, const TruncationSpec& trunc,
                                     double delta, std::uint64_t seed);

/// Reality-respecting state with |omega_k| <= amplitude / |k|_kappa and
/// uniform phases, drawn from std::mt19937_64(seed).
TruncatedState random_state(const TruncationSpec& trunc, double amplitude, std::uint64_t seed);

/// ||a - b||_2 over all modes.
double state_distance(const TruncatedState& a, const TruncatedState& b);

/// Omega(x) = sum_k omega_k exp(i (k1 x1 + kappa k2 x2)) on the grid
/// x1 = 2 pi i / R, x2 = 2 pi j / (kappa R); entry (i, j).
Eigen::MatrixXd vorticity_grid(const TruncatedState& state, const TruncationSpec& trunc,
                               int resolution);

/// gcd(2N+1, p1) == 1 and kappa >= |p1| for p = (p1, 0): the truncation then
/// fixes every (a, 0) mode through its Casimirs. Throws unless p2 == 0.
bool wrapped_casimir_stability_probe(const DomainSpec& spec, const TruncationSpec& trunc);

/// Least-squares slope of log(norm) against time over the first contiguous run
/// of samples with lower <= norm <= upper after norm first reaches lower.
std::optional<double> fit_growth_rate(std::span<const double> times, std::span<const double> norms,
                                      double lower, double upper);

}  // namespace eulerstab

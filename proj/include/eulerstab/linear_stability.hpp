#pragma once

#include "eulerstab/lattice.hpp"

#include <Eigen/Core>

#include <cmath>
#include <algorithm>
#include <complex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace eulerstab {

using Eigenvalues = std::vector<std::complex<double>>;

/// Raised when a dense eigensolve does not converge.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Offset window [m, n] of a class line.
struct Window {
  int m = -50;
  int n = 50;
  int size() const { return n - m + 1; }
};

/// Galerkin truncation A_m^n of one class: rows and columns are labelled by
/// offsets m..n, entry (k, k+1) = rho_{k+1}, entry (k, k-1) = -rho_{k-1}.
struct TruncatedClassMatrix {
  Window window;
  Eigen::MatrixXd entries;
  ClassSystem cls;
};

/// Dense A_m^n from rho_m..rho_n, in any scalar type.
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> tridiagonal_class_matrix(
    std::span<const double> rho) {
  const auto s = static_cast<Eigen::Index>(rho.size());
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> A =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(s, s);
  for (Eigen::Index i = 0; i + 1 < s; ++i) {
    A(i, i + 1) = Scalar(rho[static_cast<std::size_t>(i + 1)]);
    A(i + 1, i) = Scalar(-rho[static_cast<std::size_t>(i)]);
  }
  return A;
}

/// Throws std::invalid_argument when m >= n or the window has fewer than 3 rows.
TruncatedClassMatrix build_truncated_matrix(const ClassSystem& cls, int m, int n);

/// All eigenvalues of alpha * A_m^n. The matrix is split at zero columns
/// (vanishing rho) and each block is balanced before Hessenberg-QR.
/// Throws NumericalError naming the window on non-convergence.
Eigenvalues eigenvalues(const TruncatedClassMatrix& matrix, double alpha);

/// det(xI - A_m^n) carried as normalized * exp(log_scale).
///
/// The normalisation divides by the same recursion run on absolute values,
/// Q_k = (|x| + r) Q_{k-1} + |rho_k rho_{k-1}| Q_{k-2} with r = max |rho|, so
/// |normalized| <= 1 and a value near zero means x is a root relative to the
/// scale of the matrix. Q stays positive at x = 0. The sign (or phase) of normalized is that of the determinant.
template <typename Scalar>
struct CharPolyValue {
  Scalar normalized{};
  double log_scale = 0.0;

  Scalar value() const { return normalized * std::exp(log_scale); }
};

/// Three-term recursion P^k = x P^{k-1} + rho_k rho_{k-1} P^{k-2} over the
/// window rho_m..rho_n, rescaled every row to stay finite.
template <typename Scalar>
CharPolyValue<Scalar> char_poly(std::span<const double> rho, Scalar x) {
  if (rho.size() < 2) throw std::invalid_argument("char_poly needs a window with m < n");
  using std::abs;
  double r = 0.0;
  for (double v : rho) r = std::max(r, std::abs(v));
  const double ax = abs(x) + r;
  // (P_prev, P_cur) = (P^{k-2}, P^{k-1}) and likewise for Q.
  Scalar p_prev(1.0);
  Scalar p_cur = x;
  double q_prev = 1.0;
  // Q^{m} = |x| + r bounds |P^{m}| = |x|.
  double q_cur = ax;
  double log_scale = 0.0;
  for (std::size_t k = 1; k < rho.size(); ++k) {
    const double coupling = rho[k] * rho[k - 1];
    const Scalar p_next = x * p_cur + coupling * p_prev;
    const double q_next = ax * q_cur + std::abs(coupling) * q_prev;
    p_prev = p_cur;
    q_prev = q_cur;
    p_cur = p_next;
    q_cur = q_next;
    if (q_cur > 0.0) {
      const double s = q_cur;
      p_prev /= s;
      p_cur /= s;
      q_prev /= s;
      q_cur = 1.0;
      log_scale += std::log(s);
    }
  }
  CharPolyValue<Scalar> out;
  out.log_scale = log_scale;
  out.normalized = q_cur > 0.0 ? p_cur / q_cur : p_cur;
  return out;
}

/// Real roots of det(xI - A) on [lo, hi] located by sign changes on a uniform
/// grid of `samples` points followed by bisection to machine precision.
/// Roots of even multiplicity are not detected.
std::vector<double> char_poly_real_roots(std::span<const double> rho, double lo, double hi,
                                         int samples);

/// Lower bound sqrt(-rho_1 (rho_0 + rho_2)) on a real eigenvalue of every
/// truncation A_m^n with m <= 0 <= 2 <= n, after shifting the class so its
/// single interior mode sits at offset 0. Both orientations of the line are
/// tried and the larger bound is returned. Absent unless exactly one mode is
/// interior, every other rho on the line is strictly positive, and
/// rho_0 + rho_2 < 0 in at least one orientation.
std::optional<double> lambda_star(const ClassSystem& cls);

/// sqrt(3 (kappa^2 + 1)) / (2 (2 - sqrt 3)).
double instability_bound_threshold(double kappa);

/// |p|_kappa above instability_bound_threshold(kappa).
bool instability_bound_check(const DomainSpec& spec);

/// Segment i[lower, upper] on the imaginary axis.
struct ImaginaryInterval {
  double lower = 0.0;
  double upper = 0.0;
};

/// i[-2|alpha|/|p|^2, 2|alpha|/|p|^2].
ImaginaryInterval essential_spectrum_interval(const ClassSystem& cls, const DomainSpec& spec);

/// Window m = -max(50, 3 span), n = -m, where span counts interior offsets;
/// widened if needed to contain every interior offset with two spare rows.
Window default_window(const ClassSystem& cls);

enum class Verdict { LinearlyStable, LinearlyUnstable, Inconclusive };

std::string to_string(Verdict v);

struct ClassSpectrum {
  ClassSystem cls;
  Eigenvalues eigenvalues;
  std::optional<double> lambda_star;  ///< scaled by |alpha|
  ImaginaryInterval essential;
  double max_real_part = 0.0;
  int interior_points = 0;
  int non_imaginary = 0;
};

struct SpectrumCounts {
  int nu = 0;              ///< interior lattice points, origin excluded
  int nu_with_origin = 0;  ///< same count with the origin included
  int non_imaginary = 0;   ///< with multiplicity, all classes
  int distinct_locations = 0;
  std::vector<int> cluster_sizes;
};

struct SpectrumReport {
  Window window;
  double tol = 1e-6;
  std::vector<ClassSpectrum> classes;
  Verdict verdict = Verdict::Inconclusive;
  std::optional<ModeIndex> witness;
  double max_real_part = 0.0;
  SpectrumCounts counts;
};

/// |Re lambda| > tol * max(1, radius) with radius the spectral radius of `eigs`.
bool is_non_imaginary(const std::complex<double>& lambda, double radius, double tol);

double spectral_radius(const Eigenvalues& eigs);

/// Sizes of single-linkage clusters of `points` with linkage distance `radius`.
std::vector<int> cluster_sizes(const Eigenvalues& points, double radius);

/// Symmetric Hausdorff distance between two finite point sets.
double hausdorff_distance(const Eigenvalues& a, const Eigenvalues& b);

/// Spectrum of one class over a window, with the per-class diagnostics.
ClassSpectrum class_spectrum(const ClassSystem& cls, const DomainSpec& spec, Window window,
                             double tol = 1e-6);

/// Stability verdict, class spectra and counts for one equilibrium.
///
/// LinearlyStable is only returned when no nontrivial class meets the
/// unstable ellipse (every class is then similar to a skew operator). Any
/// class with a real part above tol * max(1, radius) or a lambda_star bound
/// makes the verdict LinearlyUnstable; the witness is the class with the
/// largest growth rate. Per-class work runs on `threads` workers (0 reads
/// EULER_STAB_THREADS, falling back to the hardware count).
///
/// Throws std::invalid_argument unless m <= -2, n >= 2 and the window holds
/// every interior offset of every candidate class.
SpectrumReport classify_equilibrium(const DomainSpec& spec, Window window, double tol = 1e-6,
                                    unsigned threads = 0);

struct DiscreteCountRecord {
  int nu = 0;
  int nu_with_origin = 0;
  int gcd = 0;
  /// 2 (nu - 2 gcd + 1), once with the origin excluded from nu and once with it included.
  int conjectured = 0;
  int conjectured_with_origin = 0;
  int measured = 0;
  int measured_distinct = 0;
  std::vector<int> cluster_sizes;
};

DiscreteCountRecord discrete_count_conjecture(const DomainSpec& spec, Window window,
                                              double tol = 1e-6, unsigned threads = 0);

struct QuadraticFormDiagnosis {
  bool definite = true;
  /// Interior lattice points that are not integer multiples of p.
  std::vector<ModeIndex> witnesses;
};

QuadraticFormDiagnosis energy_casimir_diagnosis(const DomainSpec& spec);

/// Largest Hausdorff distance, relative to the spectral radius, between the
/// class through `a` and its images (n a, n p, kappa) and
/// ((a2, a1), (p2, p1), 1/kappa) over the same window (mirrored for n < 0).
double class_symmetry_distance(const ModeIndex& a, const DomainSpec& spec, int n_scale,
                               Window window);

/// class_symmetry_distance < tol for every candidate class of `spec`, or for
/// the classes through (1, 0) and (0, 1) when the equilibrium has no candidates.
bool spectrum_symmetry_check(const DomainSpec& spec, int n_scale, Window window, double tol);

/// Largest real part over candidate classes whose interior modes all satisfy
/// max(|k1|, |k2|) <= cutoff, each on its default window. Absent when no such
/// class exists.
std::optional<double> dominant_real_part(const DomainSpec& spec, int cutoff, double tol = 1e-6);

/// Worker count from EULER_STAB_THREADS (0 or unset = hardware concurrency).
unsigned resolve_thread_count(unsigned requested = 0);

}  // namespace eulerstab

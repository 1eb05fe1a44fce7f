#include "eulerstab/linear_stability.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

namespace eulerstab {

namespace {

// Diagonal similarity scaling by powers of two so that row and column
// off-diagonal norms match (Parlett-Reinsch). Eigenvalues are unchanged.
void balance(Eigen::MatrixXd& A) {
  constexpr double radix = 2.0;
  constexpr double radix_sq = radix * radix;
  const Eigen::Index s = A.rows();
  bool done = false;
  while (!done) {
    done = true;
    for (Eigen::Index i = 0; i < s; ++i) {
      double c = A.col(i).cwiseAbs().sum() - std::abs(A(i, i));
      double r = A.row(i).cwiseAbs().sum() - std::abs(A(i, i));
      if (c == 0.0 || r == 0.0) continue;
      const double total = c + r;
      double f = 1.0;
      double g = r / radix;
      while (c < g) {
        f *= radix;
        c *= radix_sq;
      }
      g = r * radix;
      while (c > g) {
        f /= radix;
        c /= radix_sq;
      }
      if ((c + r) / f < 0.95 * total) {
        done = false;
        A.row(i) /= f;
        A.col(i) *= f;
      }
    }
  }
}

void solve_block(const Eigen::MatrixXd& block, const Window& window, Eigenvalues& out) {
  if (block.rows() == 1) {
    out.emplace_back(block(0, 0), 0.0);
    return;
  }
  Eigen::MatrixXd B = block;
  balance(B);
  Eigen::EigenSolver<Eigen::MatrixXd> solver(B, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("eigensolver did not converge for window [" + std::to_string(window.m) +
                         ", " + std::to_string(window.n) + "]");
  }
  const Eigen::VectorXcd& ev = solver.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) out.push_back(ev(i));
}

template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::vector<std::jthread> workers;
  workers.reserve(threads);
  std::mutex error_mutex;
  for (unsigned t = 0; t < threads; ++t) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          failed = true;
        }
      }
    });
  }
  workers.clear();
  if (error) std::rethrow_exception(error);
}

// Mode positions along the line that can be interior or on the boundary.
int boundary_reach(const ClassSystem& cls) {
  const double P = weighted_norm_sq(cls.p, cls.kappa);
  return static_cast<int>(std::ceil(1.0 + std::sqrt(weighted_norm_sq(cls.a, cls.kappa) / P))) + 2;
}

}  // namespace

TruncatedClassMatrix build_truncated_matrix(const ClassSystem& cls, int m, int n) {
  if (m >= n) throw std::invalid_argument("truncation window needs m < n");
  if (n - m + 1 < 3) throw std::invalid_argument("truncation window must have at least 3 rows");
  const std::vector<double> r = cls.rho_window(m, n);
  return {Window{m, n}, tridiagonal_class_matrix<double>(r), cls};
}

Eigenvalues eigenvalues(const TruncatedClassMatrix& matrix, double alpha) {
  const Eigen::MatrixXd& A = matrix.entries;
  const Eigen::Index s = A.rows();
  Eigenvalues out;
  out.reserve(static_cast<std::size_t>(s));
  if (alpha == 0.0) {
    out.assign(static_cast<std::size_t>(s), {0.0, 0.0});
    return out;
  }
  // A zero column j (rho_j = 0) makes the matrix block triangular: offsets
  // below and above j evolve independently and j contributes a zero eigenvalue.
  Eigen::Index start = 0;
  for (Eigen::Index j = 0; j <= s; ++j) {
    const bool zero_col = j < s && A.col(j).isZero(0.0);
    if (j == s || zero_col) {
      if (j > start) solve_block(alpha * A.block(start, start, j - start, j - start), matrix.window, out);
      if (zero_col) out.emplace_back(0.0, 0.0);
      start = j + 1;
    }
  }
  return out;
}

std::vector<double> char_poly_real_roots(std::span<const double> rho, double lo, double hi,
                                         int samples) {
  if (samples < 2 || !(hi > lo)) throw std::invalid_argument("char_poly_real_roots needs lo < hi and samples >= 2");
  auto sign_at = [&](double x) {
    const double v = char_poly<double>(rho, x).normalized;
    return (v > 0.0) - (v < 0.0);
  };
  std::vector<double> roots;
  const double h = (hi - lo) / (samples - 1);
  double x_prev = lo;
  int s_prev = sign_at(lo);
  if (s_prev == 0) roots.push_back(lo);
  for (int i = 1; i < samples; ++i) {
    const double x = (i == samples - 1) ? hi : lo + i * h;
    const int s = sign_at(x);
    if (s == 0) {
      roots.push_back(x);
    } else if (s_prev != 0 && s != s_prev) {
      double a = x_prev;
      double b = x;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (a + b);
        if (mid <= a || mid >= b) break;
        const int sm = sign_at(mid);
        if (sm == 0) {
          a = b = mid;
          break;
        }
        if (sm == s_prev) a = mid; else b = mid;
      }
      roots.push_back(0.5 * (a + b));
    }
    x_prev = x;
    s_prev = s;
  }
  return roots;
}

std::optional<double> lambda_star(const ClassSystem& cls) {
  if (cls.trivial()) return std::nullopt;
  const std::vector<int> interior = cls.interior_offsets();
  if (interior.size() != 1) return std::nullopt;
  const int j0 = interior.front();
  const double r0 = cls.rho(j0);
  const int reach = boundary_reach(cls);
  for (int k = j0 - 2 * reach; k <= j0 + 2 * reach; ++k) {
    if (k == j0) continue;
    const ModeIndex mk = cls.mode(k);
    const double P = weighted_norm_sq(cls.p, cls.kappa);
    if (std::abs(weighted_norm_sq(mk, cls.kappa) - P) <= kBoundaryRelTol * P) return std::nullopt;
    if (!(cls.rho(k) > 0.0)) return std::nullopt;
  }
  std::optional<double> best;
  for (const int dir : {1, -1}) {
    const double r1 = cls.rho(j0 + dir);
    const double r2 = cls.rho(j0 + 2 * dir);
    if (r0 + r2 < 0.0) {
      const double value = std::sqrt(-r1 * (r0 + r2));
      if (!best || value > *best) best = value;
    }
  }
  return best;
}

double instability_bound_threshold(double kappa) {
  return std::sqrt(3.0 * (kappa * kappa + 1.0)) / (2.0 * (2.0 - std::sqrt(3.0)));
}

bool instability_bound_check(const DomainSpec& spec) {
  return std::sqrt(spec.p_norm_sq()) > instability_bound_threshold(spec.kappa());
}

ImaginaryInterval essential_spectrum_interval(const ClassSystem& cls, const DomainSpec& spec) {
  const double half_width = 2.0 * std::abs(cls.alpha) / spec.p_norm_sq();
  return {-half_width, half_width};
}

Window default_window(const ClassSystem& cls) {
  const std::vector<int> interior = cls.interior_offsets();
  const int span = static_cast<int>(interior.size());
  int half = std::max(50, 3 * span);
  if (!interior.empty()) {
    half = std::max({half, 2 - interior.front(), interior.back() + 2});
  }
  return {-half, half};
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::LinearlyStable: return "LinearlyStable";
    case Verdict::LinearlyUnstable: return "LinearlyUnstable";
    case Verdict::Inconclusive: return "Inconclusive";
  }
  return "Inconclusive";
}

double spectral_radius(const Eigenvalues& eigs) {
  double r = 0.0;
  for (const auto& z : eigs) r = std::max(r, std::abs(z));
  return r;
}

bool is_non_imaginary(const std::complex<double>& lambda, double radius, double tol) {
  return std::abs(lambda.real()) > tol * std::max(1.0, radius);
}

std::vector<int> cluster_sizes(const Eigenvalues& points, double radius) {
  const std::size_t n = points.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(points[i] - points[j]) <= radius) parent[find(i)] = find(j);
    }
  }
  std::vector<int> count(n, 0);
  for (std::size_t i = 0; i < n; ++i) ++count[find(i)];
  std::vector<int> sizes;
  for (int c : count) {
    if (c > 0) sizes.push_back(c);
  }
  std::sort(sizes.begin(), sizes.end());
  return sizes;
}

double hausdorff_distance(const Eigenvalues& a, const Eigenvalues& b) {
  if (a.empty() && b.empty()) return 0.0;
  if (a.empty() || b.empty()) return std::numeric_limits<double>::infinity();
  auto directed = [](const Eigenvalues& from, const Eigenvalues& to) {
    double worst = 0.0;
    for (const auto& x : from) {
      double nearest = std::numeric_limits<double>::infinity();
      for (const auto& y : to) nearest = std::min(nearest, std::abs(x - y));
      worst = std::max(worst, nearest);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

ClassSpectrum class_spectrum(const ClassSystem& cls, const DomainSpec& spec, Window window,
                             double tol) {
  ClassSpectrum out;
  out.cls = cls;
  out.eigenvalues = eigenvalues(build_truncated_matrix(cls, window.m, window.n), cls.alpha);
  out.essential = essential_spectrum_interval(cls, spec);
  out.interior_points = static_cast<int>(cls.interior_offsets().size());
  if (auto ls = lambda_star(cls)) out.lambda_star = *ls * std::abs(cls.alpha);
  const double radius = spectral_radius(out.eigenvalues);
  for (const auto& z : out.eigenvalues) {
    out.max_real_part = std::max(out.max_real_part, z.real());
    if (is_non_imaginary(z, radius, tol)) ++out.non_imaginary;
  }
  return out;
}

SpectrumReport classify_equilibrium(const DomainSpec& spec, Window window, double tol,
                                    unsigned threads) {
  if (window.m > -2 || window.n < 2) {
    throw std::invalid_argument("classification window needs m <= -2 and n >= 2");
  }
  const std::vector<ClassSystem> candidates = enumerate_unstable_candidate_classes(spec);
  for (const ClassSystem& c : candidates) {
    for (int k : c.interior_offsets()) {
      if (k < window.m || k > window.n) {
        throw std::invalid_argument("classification window does not cover every interior offset");
      }
    }
  }

  SpectrumReport report;
  report.window = window;
  report.tol = tol;
  report.counts.nu = static_cast<int>(lattice_points_in_ellipse(spec).size());
  report.counts.nu_with_origin = report.counts.nu + 1;
  if (candidates.empty()) {
    report.verdict = Verdict::LinearlyStable;
    return report;
  }

  report.classes.resize(candidates.size());
  parallel_for(candidates.size(), resolve_thread_count(threads), [&](std::size_t i) {
    report.classes[i] = class_spectrum(candidates[i], spec, window, tol);
  });

  Eigenvalues discrete;
  double global_radius = 0.0;
  double best_growth = -std::numeric_limits<double>::infinity();
  bool unstable = false;
  for (const ClassSpectrum& cs : report.classes) {
    const double radius = spectral_radius(cs.eigenvalues);
    global_radius = std::max(global_radius, radius);
    for (const auto& z : cs.eigenvalues) {
      if (is_non_imaginary(z, radius, tol)) discrete.push_back(z);
    }
    const double growth = std::max(cs.max_real_part, cs.lambda_star.value_or(0.0));
    const bool class_unstable = cs.lambda_star.has_value() || cs.non_imaginary > 0;
    if (class_unstable) {
      unstable = true;
      if (growth > best_growth) {
        best_growth = growth;
        report.witness = cs.cls.a;
      }
    }
    report.max_real_part = std::max(report.max_real_part, cs.max_real_part);
  }
  report.verdict = unstable ? Verdict::LinearlyUnstable : Verdict::Inconclusive;
  report.counts.non_imaginary = static_cast<int>(discrete.size());
  report.counts.cluster_sizes = cluster_sizes(discrete, tol * std::max(1.0, global_radius));
  report.counts.distinct_locations = static_cast<int>(report.counts.cluster_sizes.size());
  return report;
}

DiscreteCountRecord discrete_count_conjecture(const DomainSpec& spec, Window window, double tol,
                                              unsigned threads) {
  const SpectrumReport report = classify_equilibrium(spec, window, tol, threads);
  DiscreteCountRecord rec;
  rec.nu = report.counts.nu;
  rec.nu_with_origin = report.counts.nu_with_origin;
  rec.gcd = std::gcd(spec.p().x(), spec.p().y());
  rec.conjectured = 2 * (rec.nu - 2 * rec.gcd + 1);
  rec.conjectured_with_origin = 2 * (rec.nu_with_origin - 2 * rec.gcd + 1);
  rec.measured = report.counts.non_imaginary;
  rec.measured_distinct = report.counts.distinct_locations;
  rec.cluster_sizes = report.counts.cluster_sizes;
  return rec;
}

QuadraticFormDiagnosis energy_casimir_diagnosis(const DomainSpec& spec) {
  QuadraticFormDiagnosis out;
  for (const ModeIndex& k : lattice_points_in_ellipse(spec)) {
    if (!is_integer_multiple(k, spec.p())) out.witnesses.push_back(k);
  }
  out.definite = out.witnesses.empty();
  return out;
}

double class_symmetry_distance(const ModeIndex& a, const DomainSpec& spec, int n_scale,
                               Window window) {
  if (n_scale == 0) throw std::invalid_argument("symmetry scale must be nonzero");
  auto spectrum = [&](const ModeIndex& lead, const DomainSpec& s, Window w) {
    return eigenvalues(build_truncated_matrix(make_class(lead, s), w.m, w.n), make_class(lead, s).alpha);
  };
  const Eigenvalues base = spectrum(a, spec, window);
  const double scale = std::max(spectral_radius(base), std::numeric_limits<double>::min());

  const DomainSpec scaled(spec.kappa(), n_scale * spec.p(), spec.gamma());
  const ModeIndex swapped_a(a.y(), a.x());
  const DomainSpec swapped(1.0 / spec.kappa(), ModeIndex(spec.p().y(), spec.p().x()), spec.gamma());

  double worst = hausdorff_distance(base, spectrum(n_scale * a, scaled, window));
  // (-n a, n p) runs along the same modes in the opposite direction.
  worst = std::max(worst, hausdorff_distance(base, spectrum(-n_scale * a, scaled, Window{-window.n, -window.m})));
  worst = std::max(worst, hausdorff_distance(base, spectrum(swapped_a, swapped, window)));
  return worst / scale;
}

bool spectrum_symmetry_check(const DomainSpec& spec, int n_scale, Window window, double tol) {
  std::vector<ModeIndex> leads;
  for (const ClassSystem& c : enumerate_unstable_candidate_classes(spec)) leads.push_back(c.a);
  if (leads.empty()) leads = {ModeIndex(1, 0), ModeIndex(0, 1)};
  for (const ModeIndex& a : leads) {
    if (!(class_symmetry_distance(a, spec, n_scale, window) < tol)) return false;
  }
  return true;
}

std::optional<double> dominant_real_part(const DomainSpec& spec, int cutoff, double tol) {
  std::optional<double> best;
  for (const ClassSystem& cls : enumerate_unstable_candidate_classes(spec)) {
    bool inside = true;
    for (int k : cls.interior_offsets()) inside = inside && cls.mode(k).cwiseAbs().maxCoeff() <= cutoff;
    if (!inside) continue;
    const double r = class_spectrum(cls, spec, default_window(cls), tol).max_real_part;
    best = std::max(best.value_or(r), r);
  }
  return best;
}

unsigned resolve_thread_count(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("EULER_STAB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace eulerstab

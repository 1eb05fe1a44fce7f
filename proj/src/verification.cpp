#include "eulerstab/verification.hpp"

#include "eulerstab/linear_stability.hpp"
#include "eulerstab/zeitlin.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace eulerstab {

namespace {

using Suite = std::function<SuiteResult(std::mt19937_64&)>;

SuiteResult named(std::string name) {
  SuiteResult r;
  r.name = std::move(name);
  return r;
}

ClassSystem random_class(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> coord(-4, 4);
  std::uniform_real_distribution<double> kappa(0.4, 2.5);
  for (;;) {
    const ModeIndex p(coord(rng), coord(rng));
    const ModeIndex a(coord(rng), coord(rng));
    if (p.isZero() || is_trivial_class(a, p)) continue;
    return make_class(a, DomainSpec(kappa(rng), p));
  }
}

SuiteResult charpoly_suite(std::mt19937_64& rng) {
  SuiteResult r = named("charpoly");
  std::uniform_int_distribution<int> size(3, 12);
  std::uniform_int_distribution<int> start(-8, 0);
  double worst_residual = 0.0;
  double worst_root_gap = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const ClassSystem cls = random_class(rng);
    const int m = start(rng);
    const int n = m + size(rng) - 1;
    const std::vector<double> rho = cls.rho_window(m, n);
    const Eigenvalues eigs = eigenvalues(build_truncated_matrix(cls, m, n), 1.0);
    double bound = 0.0;
    for (double v : rho) bound = std::max(bound, 2.0 * std::abs(v));
    bound = 1.01 * bound + 1e-9;
    std::vector<double> real_eigs;
    for (const auto& z : eigs) {
      if (z.imag() != 0.0) continue;
      worst_residual = std::max(worst_residual, std::abs(char_poly(std::span<const double>(rho), z.real()).normalized));
      real_eigs.push_back(z.real());
    }
    for (double root : char_poly_real_roots(rho, -bound, bound, 20001)) {
      double gap = std::numeric_limits<double>::infinity();
      for (double x : real_eigs) gap = std::min(gap, std::abs(x - root));
      worst_root_gap = std::max(worst_root_gap, gap / std::max(1.0, std::abs(root)));
    }
  }
  r.passed = worst_residual < 1e-6 && worst_root_gap < 1e-8;
  std::ostringstream os;
  os << "max |normalized P(lambda)| = " << worst_residual << ", max bisection/eigensolver gap = " << worst_root_gap;
  r.detail = os.str();
  return r;
}

SuiteResult symmetry_suite(std::mt19937_64& rng) {
  SuiteResult r = named("symmetry");
  std::uniform_int_distribution<int> pick(0, 3);
  const int scales[] = {-1, 1, 2, 3};
  double worst = 0.0;
  for (int trial = 0; trial < 25; ++trial) {
    const ClassSystem cls = random_class(rng);
    const DomainSpec spec(cls.kappa, cls.p);
    worst = std::max(worst, class_symmetry_distance(cls.a, spec, scales[pick(rng)], Window{-15, 15}));
  }
  r.passed = worst < 1e-8;
  std::ostringstream os;
  os << "max relative Hausdorff distance = " << worst;
  r.detail = os.str();
  return r;
}

SuiteResult stable_suite(std::mt19937_64&) {
  SuiteResult r = named("stable");
  const std::pair<int, double> cases[] = {{1, 1.0}, {2, 2.0}, {2, 3.0}, {3, 3.0}, {3, 4.0}};
  double worst = 0.0;
  for (const auto& [p1, kappa] : cases) {
    const DomainSpec spec(kappa, ModeIndex(p1, 0));
    if (classify_equilibrium(spec, Window{-100, 100}).verdict != Verdict::LinearlyStable) r.passed = false;
    std::set<ModeIndex, ModeLess> reps;
    for (int a1 = -10; a1 <= 10; ++a1) {
      for (int a2 = -10; a2 <= 10; ++a2) {
        if (!is_trivial_class(ModeIndex(a1, a2), spec.p())) reps.insert(class_representative(ModeIndex(a1, a2), spec));
      }
    }
    for (const ModeIndex& a : reps) {
      const ClassSystem cls = make_class(a, spec);
      for (const auto& z : eigenvalues(build_truncated_matrix(cls, -100, 100), cls.alpha)) {
        worst = std::max(worst, std::abs(z.real()));
      }
    }
  }
  r.passed = r.passed && worst < 1e-8;
  std::ostringstream os;
  os << "max |Re lambda| over exterior classes = " << worst;
  r.detail = os.str();
  return r;
}

SuiteResult lambda_star_suite(std::mt19937_64&) {
  SuiteResult r = named("lambda-star");
  const DomainSpec spec(1.0, ModeIndex(2, 0));
  const ClassSystem cls = make_class(ModeIndex(0, 1), spec);
  const std::optional<double> ls = lambda_star(cls);
  if (!ls || std::abs(*ls - 0.16715614398097436) > 1e-6) {
    r.passed = false;
    r.detail = "lambda_star missing or wrong";
    return r;
  }
  std::ostringstream os;
  os << "lambda* = " << *ls;
  for (const int half : {5, 20, 80}) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& z : eigenvalues(build_truncated_matrix(cls, -half, half), 1.0)) {
      if (z.imag() == 0.0) best = std::max(best, z.real());
    }
    os << ", window " << half << ": max real eigenvalue " << best;
    if (!(best >= *ls * (1.0 - 1e-12))) r.passed = false;
  }
  r.detail = os.str();
  return r;
}

SuiteResult representation_suite(std::mt19937_64& rng) {
  SuiteResult r = named("representation");
  const TruncationSpec trunc(4, 1.0);
  std::uniform_int_distribution<int> coord(-4, 4);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const ModeIndex k(coord(rng), coord(rng));
    const ModeIndex l(coord(rng), coord(rng));
    const Eigen::MatrixXcd Tk = basis_matrix(k, trunc);
    const Eigen::MatrixXcd Tl = basis_matrix(l, trunc);
    const Eigen::MatrixXcd lhs = Tk * Tl - Tl * Tk;
    const Eigen::MatrixXcd rhs = std::complex<double>(0.0, 2.0 * std::sin(trunc.epsilon() * cross(k, l))) *
                                 basis_matrix(trunc.wrap(k + l), trunc);
    worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
  }
  r.passed = worst < 1e-12;
  std::ostringstream os;
  os << "max |[T_k, T_l] - 2i sin(eps k x l) T_{k+l}| = " << worst;
  r.detail = os.str();
  return r;
}

SuiteResult conservation_suite(std::mt19937_64& rng) {
  SuiteResult r = named("conservation");
  double drift = 0.0;
  double reality = 0.0;
  for (const double kappa : {1.0, 2.0}) {
    const TruncationSpec trunc(8, kappa);
    const TruncatedState initial = random_state(trunc, 1.0, rng());
    SimulationOptions opts;
    opts.snapshot_every = 1000;
    const SimulationResult sim = simulate(initial, 10.0, 1e-2, trunc, opts);
    drift = std::max(drift, sim.log.max_casimir_drift().maxCoeff());
    reality = std::max(reality, sim.snapshots.back().reality_violation());
  }
  r.passed = drift < 1e-9 && reality < 1e-12;
  std::ostringstream os;
  os << "max relative Casimir drift C2..C5 = " << drift << ", reality violation = " << reality;
  r.detail = os.str();
  return r;
}

SuiteResult convergence_suite(std::mt19937_64& rng) {
  SuiteResult r = named("convergence");
  const TruncationSpec trunc(6, 1.0);
  const TruncatedState initial = random_state(trunc, 1.0, rng());
  std::vector<double> drift;
  for (const double dt : {4e-2, 2e-2, 1e-2}) {
    SimulationOptions opts;
    opts.snapshot_every = 100000;
    drift.push_back(simulate(initial, 2.0, dt, trunc, opts).log.max_hamiltonian_drift());
  }
  const double order1 = std::log2(drift[0] / drift[1]);
  const double order2 = std::log2(drift[1] / drift[2]);
  r.passed = order1 >= 1.8 && order1 <= 2.2 && order2 >= 1.8 && order2 <= 2.2;
  std::ostringstream os;
  os << "H drift orders " << order1 << ", " << order2;
  r.detail = os.str();
  return r;
}

SuiteResult conjecture_suite(std::mt19937_64& rng) {
  SuiteResult r = named("conjecture");
  r.fatal = false;
  int one_ok = 0, one_total = 0, two_ok = 0, two_total = 0;
  for (int trial = 0; trial < 400 && (one_total < 10 || two_total < 10); ++trial) {
    const ClassSystem cls = random_class(rng);
    const int interior = static_cast<int>(cls.interior_offsets().size());
    if (interior != 1 && interior != 2) continue;
    if ((interior == 1 && one_total >= 10) || (interior == 2 && two_total >= 10)) continue;
    const Eigenvalues eigs = eigenvalues(build_truncated_matrix(cls, -60, 60), 1.0);
    const double radius = spectral_radius(eigs);
    int count = 0;
    int real_count = 0;
    for (const auto& z : eigs) {
      if (is_non_imaginary(z, radius, 1e-6)) {
        ++count;
        if (std::abs(z.imag()) <= 1e-6 * std::max(1.0, radius)) ++real_count;
      }
    }
    if (interior == 1) {
      ++one_total;
      if (count == 2 && real_count == 2) ++one_ok;
    } else {
      ++two_total;
      if (count == 4) ++two_ok;
    }
  }
  r.passed = one_ok == one_total && two_ok == two_total;
  std::ostringstream os;
  os << "one interior point: " << one_ok << "/" << one_total << " show one real pair; two interior points: "
     << two_ok << "/" << two_total << " show four non-imaginary eigenvalues";
  r.detail = os.str();
  return r;
}

const std::vector<std::pair<std::string, Suite>>& registry() {
  static const std::vector<std::pair<std::string, Suite>> suites = {
      {"charpoly", charpoly_suite},         {"symmetry", symmetry_suite},
      {"stable", stable_suite},             {"lambda-star", lambda_star_suite},
      {"representation", representation_suite}, {"conservation", conservation_suite},
      {"convergence", convergence_suite},   {"conjecture", conjecture_suite},
  };
  return suites;
}

}  // namespace

std::vector<std::string> verification_suites() {
  std::vector<std::string> names;
  for (const auto& [name, fn] : registry()) names.push_back(name);
  return names;
}

std::vector<SuiteResult> run_verification(const std::string& suite, unsigned seed) {
  std::vector<SuiteResult> out;
  bool found = false;
  for (const auto& [name, fn] : registry()) {
    if (suite != "all" && suite != name) continue;
    found = true;
    std::mt19937_64 rng(seed);
    out.push_back(fn(rng));
  }
  if (!found) throw std::invalid_argument("unknown verification suite: " + suite);
  return out;
}

}  // namespace eulerstab

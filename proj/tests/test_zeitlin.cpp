#include "eulerstab/linear_stability.hpp"
#include "eulerstab/zeitlin.hpp"

#include <doctest.h>

#include <boost/numeric/odeint.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

using namespace eulerstab;
using cd = std::complex<double>;
namespace odeint = boost::numeric::odeint;

namespace {

int wrap1(int x, int N) {
  const int L = 2 * N + 1;
  return ((x + N) % L + L) % L - N;
}

std::vector<ModeIndex> all_modes(int N) {
  std::vector<ModeIndex> out;
  for (int i = -N; i <= N; ++i) {
    for (int j = -N; j <= N; ++j) {
      if (i || j) out.emplace_back(i, j);
    }
  }
  return out;
}

// d omega_k/dt = sum_{j in sources} kappa sin(eps k x j)/eps omega_{-j} omega_{k+j} / |j|^2,
// written as an explicit double loop.
TruncatedState reference_rhs(const TruncatedState& s, const TruncationSpec& t, const std::vector<ModeIndex>& sources) {
  const int N = t.N();
  const double eps = 2 * std::numbers::pi / (2 * N + 1);
  const double kap = t.kappa();
  TruncatedState out(t);
  for (const ModeIndex& k : all_modes(N)) {
    cd acc = 0.0;
    for (const ModeIndex& j : sources) {
      const ModeIndex m(wrap1(k.x() + j.x(), N), wrap1(k.y() + j.y(), N));
      if (m.isZero()) continue;
      const double c = kap * std::sin(eps * (k.x() * j.y() - k.y() * j.x())) / eps;
      const double w = j.x() * j.x() + kap * kap * j.y() * j.y();
      acc += c * s(ModeIndex(-j.x(), -j.y())) * s(m) / w;
    }
    out(k) = acc;
  }
  return out;
}

using Flat = std::vector<double>;

Flat flatten(const TruncatedState& s) {
  Flat v;
  for (const ModeIndex& k : all_modes(s.N())) {
    v.push_back(s(k).real());
    v.push_back(s(k).imag());
  }
  return v;
}

void unflatten(const Flat& v, TruncatedState& s) {
  std::size_t i = 0;
  for (const ModeIndex& k : all_modes(s.N())) {
    s(k) = cd(v[i], v[i + 1]);
    i += 2;
  }
}

// Adaptive Dormand-Prince reference for the flow generated by `sources`.
TruncatedState reference_flow(const TruncatedState& start, const TruncationSpec& t,
                              const std::vector<ModeIndex>& sources, double duration) {
  Flat x = flatten(start);
  TruncatedState work(t);
  auto rhs = [&](const Flat& y, Flat& dy, double) {
    unflatten(y, work);
    dy = flatten(reference_rhs(work, t, sources));
  };
  odeint::integrate_adaptive(odeint::make_controlled<odeint::runge_kutta_dopri5<Flat>>(1e-14, 1e-14), rhs, x, 0.0,
                             duration, 1e-3);
  TruncatedState out(t);
  unflatten(x, out);
  return out;
}

TruncatedState equilibrium(const ModeIndex& p, double gamma, const TruncationSpec& t) {
  TruncatedState s(t);
  s(p) = gamma;
  s(ModeIndex(-p.x(), -p.y())) = gamma;
  return s;
}

double max_diff(const TruncatedState& a, const TruncatedState& b) {
  return (a.coefficients() - b.coefficients()).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_SUITE("zeitlin") {

TEST_CASE("truncation spec") {
  const TruncationSpec t(5, 1.5);
  CHECK(t.size() == 11);
  CHECK(t.epsilon() * 11 == doctest::Approx(2 * std::numbers::pi).epsilon(1e-15));
  CHECK(t.wrap(ModeIndex(6, -6)) == ModeIndex(-5, 5));
  CHECK(t.wrap(ModeIndex(10, 3)) == ModeIndex(-1, 3));
  CHECK_THROWS_AS(TruncationSpec(0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(TruncationSpec(3, 0.0), std::invalid_argument);
}

TEST_CASE("structure constant") {
  const TruncationSpec t(2, 1.0);
  CHECK(structure_constant(ModeIndex(1, 0), ModeIndex(0, 1), t) ==
        doctest::Approx(std::sin(2 * std::numbers::pi / 5) / (2 * std::numbers::pi / 5)).epsilon(1e-14));
  CHECK(structure_constant(ModeIndex(1, 0), ModeIndex(0, 1), t) == doctest::Approx(0.756827).epsilon(1e-6));
  CHECK(structure_constant(ModeIndex(2, 1), ModeIndex(-4, -2), t) == 0.0);

  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> c(-6, 6);
  const TruncationSpec t6(6, 0.8);
  for (int i = 0; i < 1000; ++i) {
    const ModeIndex k(c(rng), c(rng)), l(c(rng), c(rng));
    CHECK(structure_constant(k, l, t6) == -structure_constant(l, k, t6));
    const ModeIndex s = t6.wrap(k + l);
    CHECK(t6.contains(s));
  }
}

TEST_CASE("structure constant approaches the continuum bracket") {
  // Error ratio between cutoffs N and 2N for one pair with cross product x.
  auto exact_ratio = [](int x, int N) {
    const double e1 = 2 * std::numbers::pi / (2 * N + 1), e2 = 2 * std::numbers::pi / (4 * N + 1);
    return (x - std::sin(e1 * x) / e1) / (x - std::sin(e2 * x) / e2);
  };
  for (int N : {16, 64}) {
    const TruncationSpec coarse(N, 1.0), fine(2 * N, 1.0);
    for (int a = -3; a <= 3; ++a)
      for (int b = -3; b <= 3; ++b)
        for (int c = -3; c <= 3; ++c)
          for (int d = -3; d <= 3; ++d) {
            const ModeIndex k(a, b), l(c, d);
            const int x = cross(k, l);
            if (k.squaredNorm() > 9 || l.squaredNorm() > 9 || x == 0) continue;
            const double ratio = (structure_constant(k, l, coarse) - x) / (structure_constant(k, l, fine) - x);
            CHECK(ratio == doctest::Approx(exact_ratio(std::abs(x), N)).epsilon(1e-8));
            // At N = 16 the O(1/N^2) regime needs eps |k x l| small; the corner pairs with |k x l| = 9 sit at 3.48.
            if (N == 64 || std::abs(x) <= 8) {
              CHECK(ratio >= 3.5);
              CHECK(ratio <= 4.5);
            }
          }
  }
}

TEST_CASE("vector field") {
  const TruncationSpec t(3, 1.4);
  CHECK(vector_field(equilibrium(ModeIndex(2, 1), 0.8, t), t).coefficients().cwiseAbs().maxCoeff() < 1e-15);
  TruncatedState pair(t);
  pair(ModeIndex(1, -2)) = cd(0.3, 0.4);
  pair(ModeIndex(-1, 2)) = cd(0.3, -0.4);
  CHECK(vector_field(pair, t).coefficients().cwiseAbs().maxCoeff() < 1e-15);

  const TruncatedState s = random_state(t, 1.0, 21);
  CHECK(max_diff(vector_field(s, t), reference_rhs(s, t, all_modes(3))) < 1e-13);
}

TEST_CASE("vector field is the commutator in the matrix representation") {
  const TruncationSpec t(3, 0.9);
  const TruncatedState s = random_state(t, 1.0, 4);
  TruncatedState psi(t);
  for (const ModeIndex& k : all_modes(3)) psi(k) = s(k) / weighted_norm_sq(k, 0.9);
  const Eigen::MatrixXcd W = casimir_matrix(s, t);
  const Eigen::MatrixXcd P = casimir_matrix(psi, t);
  const Eigen::MatrixXcd C = P * W - W * P;
  const TruncatedState f = vector_field(s, t);
  const double eps = t.epsilon();
  for (const ModeIndex& k : all_modes(3)) {
    const cd coeff = (basis_matrix(ModeIndex(-k.x(), -k.y()), t) * C).trace() / double(t.size());
    CHECK(std::abs(f(k) - 0.9 / (cd(0, 2) * eps) * coeff) < 1e-13);
  }
}

TEST_CASE("representation satisfies the sine algebra") {
  const TruncationSpec t(4, 1.0);
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> c(-4, 4);
  for (int i = 0; i < 50; ++i) {
    const ModeIndex k(c(rng), c(rng)), l(c(rng), c(rng));
    const Eigen::MatrixXcd Tk = basis_matrix(k, t), Tl = basis_matrix(l, t);
    const Eigen::MatrixXcd rhs = cd(0, 2 * std::sin(t.epsilon() * cross(k, l))) * basis_matrix(t.wrap(k + l), t);
    CHECK((Tk * Tl - Tl * Tk - rhs).cwiseAbs().maxCoeff() < 1e-12);
    const double tr = std::abs((Tk * Tl).trace());
    CHECK(tr == doctest::Approx(t.wrap(k + l).isZero() ? double(t.size()) : 0.0));
  }
}

TEST_CASE("Hamiltonian") {
  const TruncationSpec t(4, 1.0);
  CHECK(hamiltonian(TruncatedState(t), t) == 0.0);
  CHECK(hamiltonian(equilibrium(ModeIndex(1, 0), 1.7, t), t) == doctest::Approx(1.7 * 1.7));
  TruncatedState s = random_state(t, 1.0, 3);
  const double h = hamiltonian(s, t);
  s.coefficients() *= 3.0;
  CHECK(hamiltonian(s, t) == doctest::Approx(9 * h).epsilon(1e-14));
}

TEST_CASE("Casimirs") {
  const TruncationSpec t(3, 1.0);
  CHECK(casimirs(TruncatedState(t), 5, t).cwiseAbs().maxCoeff() == 0.0);
  CHECK(casimir(equilibrium(ModeIndex(1, 2), 1.5, t), 2, t) == doctest::Approx(2 * 1.5 * 1.5).epsilon(1e-14));
  const TruncatedState s = random_state(t, 1.0, 8);
  double sum = 0.0;
  for (const ModeIndex& k : all_modes(3)) sum += std::norm(s(k));
  CHECK(casimir(s, 2, t) == doctest::Approx(sum).epsilon(1e-13));
  CHECK(casimirs(s, 4, t)(2) == doctest::Approx(casimir(s, 4, t)).epsilon(1e-13));
  CHECK_THROWS_AS(casimir(s, 1, t), std::invalid_argument);
  CHECK_THROWS_AS(casimir(s, 8, t), std::invalid_argument);

  TruncatedState broken = s;
  broken(ModeIndex(1, 1)) += cd(0, 0.5);
  CHECK_THROWS_AS(casimirs(broken, 3, t), std::domain_error);
}

TEST_CASE("Casimirs are conserved by the exact flow") {
  const TruncationSpec t(3, 1.2);
  const TruncatedState s = random_state(t, 1.0, 5);
  const TruncatedState e = reference_flow(s, t, all_modes(3), 0.5);
  const Eigen::VectorXd c0 = casimirs(s, 5, t), c1 = casimirs(e, 5, t);
  for (int i = 0; i < c0.size(); ++i) CHECK(std::abs(c1(i) - c0(i)) < 1e-9 * std::max(1.0, std::abs(c0(i))));
  CHECK(hamiltonian(e, t) == doctest::Approx(hamiltonian(s, t)).epsilon(1e-10));
}

TEST_CASE("pair flows are exact") {
  const TruncationSpec t(3, 1.3);
  const LiePoissonIntegrator integ(t);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> c(-3, 3);
  int done = 0;
  while (done < 20) {
    const ModeIndex k(c(rng), c(rng));
    if (k.isZero()) continue;
    const double dt = 1.0 - u(rng);
    const TruncatedState s = random_state(t, 1.0, rng());
    TruncatedState ours = s;
    integ.pair_flow(ours, k, dt);
    const TruncatedState ref = reference_flow(s, t, {k, ModeIndex(-k.x(), -k.y())}, dt);
    CHECK(max_diff(ours, ref) < 1e-10);
    ++done;
  }
}

TEST_CASE("pair order and Strang step") {
  const TruncationSpec t(3, 2.0);
  const LiePoissonIntegrator integ(t);
  const std::vector<ModeIndex> order = integ.pair_order();
  CHECK(order.size() == 24);
  for (std::size_t i = 1; i < order.size(); ++i) {
    CHECK(weighted_norm_sq(order[i - 1], 2.0) <= weighted_norm_sq(order[i], 2.0));
  }

  const TruncatedState eq = equilibrium(ModeIndex(1, 1), 1.0, t);
  CHECK(max_diff(lie_poisson_step(eq, 0.1, t), eq) < 1e-14);
  TruncatedState bad = eq;
  CHECK_THROWS_AS(integ.step(bad, 0.0), std::invalid_argument);

  // Second-order agreement with the exact flow.
  const TruncatedState s = random_state(t, 1.0, 6);
  const TruncatedState ref = reference_flow(s, t, all_modes(3), 0.4);
  auto error = [&](int steps) {
    TruncatedState x = s;
    for (int i = 0; i < steps; ++i) integ.step(x, 0.4 / steps);
    return max_diff(x, ref);
  };
  const double ratio = error(10) / error(20);
  CHECK(ratio > 3.5);
  CHECK(ratio < 4.5);
}

TEST_CASE("linearisation matches the class matrix with the truncated coupling") {
  const DomainSpec spec(1.0, ModeIndex(2, 0), 1.0);
  const TruncationSpec t(18, 1.0);
  const TruncatedState eq = equilibrium(spec.p(), 1.0, t);
  const ClassSystem cls = make_class(ModeIndex(0, 1), spec);
  const int half = 3;
  const std::vector<double> rho = cls.rho_window(-half, half);
  const double alpha_n = spec.gamma() * spec.kappa() * std::sin(t.epsilon() * cross(cls.a, spec.p())) / t.epsilon();
  const double h = 1e-4;
  for (int col = -half; col <= half; ++col) {
    TruncatedState plus = eq, minus = eq;
    plus(cls.mode(col)) += h;
    minus(cls.mode(col)) -= h;
    const TruncatedState fp = vector_field(plus, t), fm = vector_field(minus, t);
    for (int row = -half; row <= half; ++row) {
      const cd d = (fp(cls.mode(row)) - fm(cls.mode(row))) / (2 * h);
      double expected = 0.0;
      if (col == row + 1) expected = alpha_n * rho[col + half];
      if (col == row - 1) expected = -alpha_n * rho[col + half];
      CHECK(std::abs(d - expected) < 1e-6);
    }
  }
  // The truncated coupling tends to the continuum one.
  CHECK(alpha_n / cls.alpha == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("simulation") {
  const TruncationSpec t(4, 1.0);
  const TruncatedState s = random_state(t, 1.0, 12);
  const SimulationResult zero = simulate(s, 0.0, 0.1, t);
  CHECK(zero.snapshots.size() == 1);
  CHECK(max_diff(zero.snapshots[0], s) == 0.0);
  CHECK_THROWS_AS(simulate(s, 1.0, 0.0, t), std::invalid_argument);
  CHECK_THROWS_AS(simulate(s, -1.0, 0.1, t), std::invalid_argument);

  SimulationOptions opts;
  opts.snapshot_every = 4;
  const SimulationResult run = simulate(s, 1.05, 0.1, t, opts);
  CHECK(run.log.time.back() == doctest::Approx(1.05).epsilon(1e-14));
  CHECK(run.log.time.size() == 12);
  CHECK(run.snapshots.front().time == 0.0);
  CHECK(run.snapshots.back().time == doctest::Approx(1.05));
  CHECK(run.snapshots.size() == 4);
  CHECK(run.log.max_casimir_drift().maxCoeff() < 1e-11);
  for (const TruncatedState& x : run.snapshots) CHECK(x.reality_violation() < 1e-12);

  const SimulationResult again = simulate(s, 1.05, 0.1, t, opts);
  CHECK(max_diff(again.snapshots.back(), run.snapshots.back()) == 0.0);
}

TEST_CASE("equilibrium is a fixed point of the simulation") {
  const DomainSpec spec(1.0, ModeIndex(2, 1), 1.0);
  const TruncationSpec t(5, 1.0);
  const TruncatedState eq = perturbed_equilibrium(spec, t, 0.0, 1);
  SimulationOptions opts;
  opts.reference = eq;
  const SimulationResult run = simulate(eq, 2.0, 0.05, t, opts);
  CHECK(max_diff(run.snapshots.back(), eq) < 1e-12);
  CHECK(run.log.max_hamiltonian_drift() < 1e-12);
  CHECK(run.log.max_casimir_drift().maxCoeff() < 1e-12);
  for (double v : run.perturbation_norm) CHECK(v < 1e-12);
}

TEST_CASE("perturbed equilibrium") {
  const DomainSpec spec(1.0, ModeIndex(2, 0), 1.5);
  const TruncationSpec t(6, 1.0);
  const TruncatedState eq = perturbed_equilibrium(spec, t, 0.0, 9);
  CHECK(eq(ModeIndex(2, 0)) == cd(1.5));
  CHECK(eq(ModeIndex(-2, 0)) == cd(1.5));
  CHECK(eq.coefficients().cwiseAbs().sum() == doctest::Approx(3.0));

  const TruncatedState a = perturbed_equilibrium(spec, t, 1e-3, 9);
  const TruncatedState b = perturbed_equilibrium(spec, t, 1e-3, 9);
  const TruncatedState c = perturbed_equilibrium(spec, t, 1e-3, 10);
  CHECK(max_diff(a, b) == 0.0);
  CHECK(max_diff(a, c) > 0.0);
  CHECK(a.reality_violation() == 0.0);
  CHECK(a(ModeIndex(0, 0)) == cd(0.0));
  TruncatedState diff = a;
  diff.coefficients() -= eq.coefficients();
  CHECK(diff.coefficients().cwiseAbs().maxCoeff() <= 1e-3);
  CHECK(diff(ModeIndex(2, 0)) == cd(0.0));

  CHECK_THROWS_AS(perturbed_equilibrium(DomainSpec(1.0, ModeIndex(7, 0)), t, 1e-3, 1), std::invalid_argument);
  CHECK_THROWS_AS(perturbed_equilibrium(spec, t, -1.0, 1), std::invalid_argument);
}

TEST_CASE("vorticity grid") {
  const TruncationSpec t(4, 1.0);
  const int R = 16;
  const Eigen::MatrixXd g = vorticity_grid(equilibrium(ModeIndex(3, 2), 1.25, t), t, R);
  double err = 0.0;
  for (int i = 0; i < R; ++i) {
    for (int j = 0; j < R; ++j) {
      const double x1 = 2 * std::numbers::pi * i / R, x2 = 2 * std::numbers::pi * j / R;
      err = std::max(err, std::abs(g(i, j) - 2 * 1.25 * std::cos(3 * x1 + 2 * x2)));
    }
  }
  CHECK(err < 1e-12);
  CHECK(vorticity_grid(TruncatedState(t), t, 8).cwiseAbs().maxCoeff() == 0.0);

  const TruncationSpec tk(3, 2.0);
  const TruncatedState a = random_state(tk, 1.0, 1), b = random_state(tk, 1.0, 2);
  TruncatedState sum = a;
  sum.coefficients() += b.coefficients();
  const Eigen::MatrixXd lhs = vorticity_grid(sum, tk, 12);
  const Eigen::MatrixXd rhs = vorticity_grid(a, tk, 12) + vorticity_grid(b, tk, 12);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("wrapped Casimir probe") {
  CHECK_FALSE(wrapped_casimir_stability_probe(DomainSpec(4.0, ModeIndex(3, 0)), TruncationSpec(4, 4.0)));
  CHECK(wrapped_casimir_stability_probe(DomainSpec(4.0, ModeIndex(3, 0)), TruncationSpec(5, 4.0)));
  CHECK_FALSE(wrapped_casimir_stability_probe(DomainSpec(1.0, ModeIndex(2, 0)), TruncationSpec(8, 1.0)));
  CHECK_THROWS(wrapped_casimir_stability_probe(DomainSpec(1.0, ModeIndex(2, 1)), TruncationSpec(8, 1.0)));
}

TEST_CASE("growth-rate fit") {
  std::vector<double> times, norms;
  for (int i = 0; i <= 400; ++i) {
    times.push_back(0.1 * i);
    norms.push_back(std::min(1e-6 * std::exp(0.37 * 0.1 * i), 0.5));
  }
  const auto rate = fit_growth_rate(times, norms, 2e-5, 1e-2);
  REQUIRE(rate);
  CHECK(*rate == doctest::Approx(0.37).epsilon(1e-10));
  CHECK_FALSE(fit_growth_rate(times, norms, 1.0, 2.0));
}

}  // TEST_SUITE

#include "eulerstab/lattice.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace eulerstab {

namespace {

bool strictly_inside(double norm_sq, double p_norm_sq) {
  return norm_sq < p_norm_sq * (1.0 - kBoundaryRelTol);
}

}  // namespace

DomainSpec::DomainSpec(double kappa, ModeIndex p, double gamma)
    : kappa_(kappa), p_(std::move(p)), gamma_(gamma) {
  if (!(kappa_ > 0.0) || !std::isfinite(kappa_)) {
    throw std::invalid_argument("kappa must be a positive finite number");
  }
  if (p_.isZero()) {
    throw std::invalid_argument("equilibrium wave vector p must be nonzero");
  }
  if (!std::isfinite(gamma_)) {
    throw std::invalid_argument("gamma must be finite");
  }
}

double rho(const ModeIndex& k, const DomainSpec& spec) {
  if (k.isZero()) {
    throw std::invalid_argument("rho is undefined for the mean mode k = (0,0)");
  }
  return 1.0 / spec.p_norm_sq() - 1.0 / weighted_norm_sq(k, spec.kappa());
}

bool in_unstable_ellipse(const ModeIndex& k, const DomainSpec& spec) {
  return strictly_inside(weighted_norm_sq(k, spec.kappa()), spec.p_norm_sq());
}

bool on_ellipse_boundary(const ModeIndex& k, const DomainSpec& spec) {
  const double P = spec.p_norm_sq();
  return std::abs(weighted_norm_sq(k, spec.kappa()) - P) <= kBoundaryRelTol * P;
}

bool in_representative_set(const ModeIndex& a, const DomainSpec& spec) {
  const double P = spec.p_norm_sq();
  const double x = 2.0 * weighted_dot(a, spec.p(), spec.kappa());
  const double tol = kBoundaryRelTol * P;
  // Ties at the upper edge belong to the set, ties at the lower edge do not.
  return x + P > tol && x - P <= tol;
}

ModeIndex class_representative(const ModeIndex& a, const DomainSpec& spec) {
  const double P = spec.p_norm_sq();
  const double t = 2.0 * weighted_dot(a, spec.p(), spec.kappa()) / P;
  // Each shift by p moves 2<a,p>/P by 2, so one floor lands within a step of
  // the answer; the loop settles roundoff at the edges.
  auto s = static_cast<long long>(std::floor((1.0 - t) / 2.0));
  for (int guard = 0; guard < 8; ++guard) {
    const ModeIndex candidate = a + static_cast<int>(s) * spec.p();
    if (in_representative_set(candidate, spec)) return candidate;
    const double x = 2.0 * weighted_dot(candidate, spec.p(), spec.kappa());
    s += (x > 0.0) ? -1 : 1;
  }
  throw std::logic_error("class_representative failed to settle");
}

bool is_integer_multiple(const ModeIndex& k, const ModeIndex& p) {
  if (cross(k, p) != 0) return false;
  if (p.x() != 0) return k.x() % p.x() == 0;
  return k.y() % p.y() == 0;
}

double ClassSystem::rho(int offset) const {
  const ModeIndex k = mode(offset);
  if (k.isZero()) return 0.0;
  return 1.0 / weighted_norm_sq(p, kappa) - 1.0 / weighted_norm_sq(k, kappa);
}

std::vector<double> ClassSystem::rho_window(int m, int n) const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(std::max(0, n - m + 1)));
  for (int k = m; k <= n; ++k) out.push_back(rho(k));
  return out;
}

std::vector<int> ClassSystem::interior_offsets() const {
  const double P = weighted_norm_sq(p, kappa);
  // |a + kp| >= |k||p| - |a|, so interior offsets satisfy |k| < 1 + |a|/|p|.
  const int reach = static_cast<int>(std::ceil(1.0 + std::sqrt(weighted_norm_sq(a, kappa) / P))) + 1;
  std::vector<int> out;
  for (int k = -reach; k <= reach; ++k) {
    const ModeIndex mk = mode(k);
    if (!mk.isZero() && strictly_inside(weighted_norm_sq(mk, kappa), P)) out.push_back(k);
  }
  return out;
}

ClassSystem make_class(const ModeIndex& a, const DomainSpec& spec) {
  ClassSystem c;
  c.a = a;
  c.p = spec.p();
  c.kappa = spec.kappa();
  c.alpha = spec.gamma() * spec.kappa() * static_cast<double>(cross(a, spec.p()));
  return c;
}

std::vector<ModeIndex> lattice_points_in_ellipse(const DomainSpec& spec) {
  const double radius = std::sqrt(spec.p_norm_sq());
  const int b1 = static_cast<int>(std::ceil(radius));
  const int b2 = static_cast<int>(std::ceil(radius / spec.kappa()));
  std::vector<ModeIndex> points;
  for (int k1 = -b1; k1 <= b1; ++k1) {
    for (int k2 = -b2; k2 <= b2; ++k2) {
      const ModeIndex k(k1, k2);
      if (!k.isZero() && in_unstable_ellipse(k, spec)) points.push_back(k);
    }
  }
  return points;
}

std::vector<ClassSystem> enumerate_unstable_candidate_classes(const DomainSpec& spec) {
  std::map<ModeIndex, ClassSystem, ModeLess> classes;
  for (const ModeIndex& k : lattice_points_in_ellipse(spec)) {
    if (is_trivial_class(k, spec.p())) continue;
    const ModeIndex a = class_representative(k, spec);
    classes.try_emplace(a, make_class(a, spec));
  }
  std::vector<ClassSystem> out;
  out.reserve(classes.size());
  for (auto& [a, c] : classes) out.push_back(c);
  return out;
}

}  // namespace eulerstab

#pragma once

#include <Eigen/Core>

#include <vector>

namespace eulerstab {

/// Fourier mode label k = (k1, k2) on the integer lattice.
using ModeIndex = Eigen::Vector2i;

/// Relative tolerance used to keep points on (or within roundoff of) the
/// ellipse boundary out of the interior.
inline constexpr double kBoundaryRelTol = 1e-12;

inline int cross(const ModeIndex& a, const ModeIndex& b) {
  return a.x() * b.y() - a.y() * b.x();
}

template <typename Scalar = double>
Scalar weighted_dot(const ModeIndex& a, const ModeIndex& b, Scalar kappa) {
  return Scalar(a.x()) * Scalar(b.x()) + kappa * kappa * Scalar(a.y()) * Scalar(b.y());
}

/// |k|_kappa^2 = k1^2 + kappa^2 k2^2.
template <typename Scalar = double>
Scalar weighted_norm_sq(const ModeIndex& k, Scalar kappa) {
  return weighted_dot<Scalar>(k, k, kappa);
}

/// Lexicographic order, for sorted containers of modes.
struct ModeLess {
  bool operator()(const ModeIndex& a, const ModeIndex& b) const {
    return a.x() != b.x() ? a.x() < b.x() : a.y() < b.y();
  }
};

/// Torus aspect and shear equilibrium 2*gamma*cos(p1 x1 + kappa p2 x2).
class DomainSpec {
 public:
  /// Throws std::invalid_argument unless kappa > 0 and p != 0.
  DomainSpec(double kappa, ModeIndex p, double gamma = 1.0);

  double kappa() const { return kappa_; }
  const ModeIndex& p() const { return p_; }
  double gamma() const { return gamma_; }

  /// |p|_kappa^2
  double p_norm_sq() const { return weighted_norm_sq(p_, kappa_); }

 private:
  double kappa_;
  ModeIndex p_;
  double gamma_;
};

/// rho_k = 1/|p|^2 - 1/|k|^2. Throws std::invalid_argument for k = 0.
double rho(const ModeIndex& k, const DomainSpec& spec);

/// Strictly inside the unstable ellipse |k|_kappa < |p|_kappa, with points
/// within relative kBoundaryRelTol of the boundary counted as outside.
bool in_unstable_ellipse(const ModeIndex& k, const DomainSpec& spec);

/// Within relative kBoundaryRelTol of the ellipse boundary.
bool on_ellipse_boundary(const ModeIndex& k, const DomainSpec& spec);

/// Membership in the half-open strip -|p|^2 < 2 <a,p>_kappa <= |p|^2.
bool in_representative_set(const ModeIndex& a, const DomainSpec& spec);

/// a + s p for the unique integer s that lands in the representative set.
ModeIndex class_representative(const ModeIndex& a, const DomainSpec& spec);

/// a x p == 0; such classes have zero coupling.
inline bool is_trivial_class(const ModeIndex& a, const ModeIndex& p) { return cross(a, p) == 0; }

/// k == t p for some integer t.
bool is_integer_multiple(const ModeIndex& k, const ModeIndex& p);

/// One decoupled line {a + k p} of the linearised operator.
struct ClassSystem {
  ModeIndex a = ModeIndex::Zero();
  ModeIndex p = ModeIndex(1, 0);
  double kappa = 1.0;
  /// gamma * kappa * (a x p)
  double alpha = 0.0;

  ModeIndex mode(int offset) const { return a + offset * p; }
  bool trivial() const { return is_trivial_class(a, p); }

  /// rho_{a + offset p}; the excluded zero mode of a trivial line reports 0.
  double rho(int offset) const;
  /// rho_m, ..., rho_n.
  std::vector<double> rho_window(int m, int n) const;

  /// Offsets whose mode lies strictly inside the unstable ellipse, ascending.
  std::vector<int> interior_offsets() const;
};

/// Class through a (not reduced to its representative).
ClassSystem make_class(const ModeIndex& a, const DomainSpec& spec);

/// All k != 0 strictly inside the unstable ellipse, in lexicographic order.
std::vector<ModeIndex> lattice_points_in_ellipse(const DomainSpec& spec);

/// Nontrivial classes whose line meets the ellipse interior, one entry per
/// representative, sorted lexicographically by representative.
std::vector<ClassSystem> enumerate_unstable_candidate_classes(const DomainSpec& spec);

}  // namespace eulerstab

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hjprox/core.hpp"
#include "hjprox/optimize.hpp"

namespace hjprox {

enum class PriorKind { L1, NegL1, NegAbs1D, MinPlusQuadratics, ConcaveQuadratic, Zero, Custom };

std::string to_string(PriorKind kind);
PriorKind prior_kind_from_string(const std::string& s);

/// An analytic prior J together with what is known about it in closed form.
///
/// Kinds:
///  - L1:                 J(y) = |y|_1
///  - NegL1:              J(y) = -|y|_1 (any dimension)
///  - NegAbs1D:           J(y) = -|y|, y in R
///  - MinPlusQuadratics:  J(y) = min_i |y - mu_i|^2 / (2 sigma_i)
///  - ConcaveQuadratic:   J(y) = -c |y|^2, optionally made linear beyond
///                        radius huber_radius so that J is Lipschitz
///  - Zero:               J = 0
///  - Custom:             user callable, numeric solvers only
struct PriorSpec {
  PriorKind kind = PriorKind::Zero;
  std::vector<Point> centers;
  std::vector<double> widths;
  double curvature = 0.25;
  /// 0 disables Huberisation.
  double huber_radius = 0.0;
  ScalarField custom_value;
  VectorField custom_gradient;
  bool custom_convex = false;

  static PriorSpec l1();
  static PriorSpec neg_l1();
  static PriorSpec neg_abs_1d();
  static PriorSpec min_plus(std::vector<Point> centers, std::vector<double> widths);
  /// mu_1 = e_1, mu_2 = (1,...,1)/sqrt(n), sigma_1 = sigma_2 = 1.
  static PriorSpec min_plus_two_wells(std::size_t dim);
  static PriorSpec concave_quadratic(double curvature = 0.25, double huber_radius = 0.0);
  static PriorSpec zero();
  static PriorSpec custom(ScalarField value, VectorField gradient = {}, bool convex = false);

  /// Dimension the prior is tied to, if any.
  std::optional<std::size_t> fixed_dim() const;
  bool is_convex() const;
  /// True when S, grad S and prox have closed forms at (x, t).
  bool has_closed_form(const Point& x, TimeParam t) const;
  /// A (sub)gradient-based objective for numeric solvers.
  Objective objective() const;
  void validate() const;
};

double eval_J(const PriorSpec& p, const Point& y);
/// A subgradient of J; at the kinks of -|.| it picks the +1 side so descent
/// leaves the local maximum.
Point subgradient_J(const PriorSpec& p, const Point& y);

double eval_S_closed(const PriorSpec& p, const Point& x, TimeParam t);
/// Throws Nondifferentiable when x lies on the kink set of S.
Point eval_grad_S_closed(const PriorSpec& p, const Point& x, TimeParam t);
/// Full argmin set of the proximal problem, multivalued points included.
std::vector<Point> eval_prox_closed(const PriorSpec& p, const Point& x, TimeParam t);
double eval_Jbvs_closed(const PriorSpec& p, const Point& y, TimeParam t);
/// psi(x,t) = |x|^2/2 - t S(x,t).
double eval_psi(const PriorSpec& p, const Point& x, TimeParam t);

/// True when x is within tol of the known non-differentiability set of S.
bool near_nondiff(const PriorSpec& p, const Point& x, TimeParam t, double tol);

/// Huber_t(u): u^2/(2t) for |u| <= t, |u| - t/2 otherwise.
double huber(double u, double t);
double soft_threshold(double u, double t);

}  // namespace hjprox

#pragma once

#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "hjprox/core.hpp"
#include "hjprox/priors.hpp"

namespace hjprox {

struct ForwardResult {
  double value = 0.0;
  Point minimizer;
  /// (x - minimizer) / t
  Point grad_estimate;
};

struct ForwardOptions {
  /// 0 picks 1 start for convex priors and 8 otherwise.
  int restarts = 0;
  std::optional<Box> restart_box;
};

/// S(x,t) by numerically minimising the Lax-Oleinik objective.
ForwardResult forward_solve(const PriorSpec& p, const Point& x, TimeParam t,
                            const ForwardOptions& opts = {});

/// One-sided difference test: flags x when forward and backward differences
/// of S along some axis disagree by more than 1e-3 (1 + |S(x)|).
bool looks_differentiable(const ScalarField& S, const Point& x, double h = 1e-4);

/// Which normalisation of the characteristics representation to test.
enum class CharacteristicsForm {
  /// S = (t/2)|grad S|^2 + J(x - t grad S)
  TimeScaled,
  /// S = |grad S|^2 / (2t) + J(x - t grad S)
  AsPrinted,
};

/// |S(x,t) - [k(t) |grad S|^2 + J(x - t grad S)]|. Refuses (Nondifferentiable)
/// at kinks of S.
double characteristics_residual(const PriorSpec& p, const Point& x, TimeParam t,
                                CharacteristicsForm form = CharacteristicsForm::TimeScaled);

/// Source for the backward (terminal value) problem. Either S or a convex
/// psi(x) = |x|^2/2 - t S(x,t) is required; having both enables both forms.
struct BackwardQuery {
  ScalarField S;
  VectorField grad_S;
  ScalarField psi;
  VectorField grad_psi;
  Box search_box;
  int restarts = 1;

  /// Closed-form S and psi of an analytic prior. The search box is the data
  /// box [-a, a]^dim inflated by 2 t L, L the largest sampled |grad S|.
  static BackwardQuery from_prior(const PriorSpec& p, TimeParam t, std::size_t dim, double a);
  static BackwardQuery from_psi(ScalarField psi, VectorField grad_psi, Box search_box);
};

enum class BackwardForm {
  /// sup_x { S(x,t) - |x - y|^2 / (2t) }
  Sup,
  /// (sup_x { <x,y> - psi(x) } - |y|^2 / 2) / t
  Conjugate,
};

/// J_BVS(y). Throws UnboundedConjugate if the ascent leaves the search box.
double backward_solve(const BackwardQuery& q, const Point& y, TimeParam t,
                      std::optional<BackwardForm> form = std::nullopt);

/// backward_solve with a cache keyed on the exact bits of y. Thread-safe.
class BackwardSolver {
 public:
  BackwardSolver(BackwardQuery q, TimeParam t, std::optional<BackwardForm> form = std::nullopt);
  double operator()(const Point& y) const;
  std::size_t cache_size() const;

 private:
  BackwardQuery query_;
  TimeParam t_;
  std::optional<BackwardForm> form_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<std::string, double> cache_;
};

/// |inf_y { |x - y|^2 / (2t) + J_BVS(y) } - S(x,t)| with J_BVS from the
/// numeric backward solver, the infimum taken over the grid and refined by
/// coordinate-wise Brent searches.
double roundtrip_check(const PriorSpec& p, const Point& x, TimeParam t, const Grid& grid);
double roundtrip_check(const PriorSpec& p, const Point& x, TimeParam t, const Grid& grid,
                       const BackwardSolver& jbvs);

}  // namespace hjprox

#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hjprox/dataset.hpp"
#include "hjprox/hj.hpp"
#include "hjprox/icnn.hpp"
#include "hjprox/minorants.hpp"
#include "hjprox/priors.hpp"

namespace hjprox {

enum class RecoveryMethod { DirectConjugate, InvertLpn, MinorantPQM, BackwardNumeric };

std::string to_string(RecoveryMethod m);
RecoveryMethod recovery_method_from_string(const std::string& s);

/// A prior estimate J-hat that can be evaluated pointwise.
struct RecoveredPrior {
  RecoveryMethod method = RecoveryMethod::DirectConjugate;
  /// phi_G for DirectConjugate, psi_theta for InvertLpn.
  std::shared_ptr<const IcnnModel> model;
  std::shared_ptr<const MinorantModel> minorant;
  std::shared_ptr<const BackwardSolver> backward;
  TimeParam t{1.0};
  /// DirectConjugate: divide phi_G(x) - |x|^2/2 by t. Off by default, which
  /// is the t = 1 formula.
  bool general_t = false;
  /// InvertLpn: the ascent must stay inside this box.
  std::optional<Box> search_box;

  static RecoveredPrior direct(IcnnModel phi_G, TimeParam t = TimeParam(1.0), bool general_t = false);
  static RecoveredPrior invert(IcnnModel psi, TimeParam t, Box search_box);
  static RecoveredPrior from_minorant(MinorantModel m);
  static RecoveredPrior from_backward(std::shared_ptr<const BackwardSolver> solver, TimeParam t,
                                      std::size_t dim);

  std::size_t dim() const;
  double operator()(const Point& x) const;

 private:
  std::size_t dim_ = 0;
};

/// phi_G(x) - |x|^2/2, divided by t when general_t is set.
double eval_direct(const RecoveredPrior& rp, const Point& x);

/// (sup_x { <x,y> - psi_theta(x) } - |y|^2/2) / t by quasi-Newton ascent
/// from x0 = y, with a multistart retry if the ascent stalls. Throws
/// OutOfRange when the ascent leaves the search box, i.e. y is not in the
/// range of grad psi_theta.
double eval_invert(const RecoveredPrior& rp, const Point& y);

/// Mean of (f - truth)^2 over the points.
double score_mse(const ScalarField& f, const ScalarField& truth, const std::vector<Point>& points);
double score_mse(const RecoveredPrior& rp, const ScalarField& truth, const std::vector<Point>& points);

/// Mean squared error of psi_theta against the psi targets of a dataset.
double score_psi_mse(const IcnnModel& psi, const Dataset& held_out);

/// Points where the true prior is attained: the true proximal points of the
/// held-out samples, at which J = J_BVS.
std::vector<Point> reachable_points(const Dataset& held_out);

/// score_mse against J at reachable_points(held_out).
double score_prior_mse(const RecoveredPrior& rp, const PriorSpec& truth, const Dataset& held_out);

struct CrossSectionRow {
  double s = 0.0;
  double value = 0.0;
  std::optional<double> truth;
};

/// f along origin + s d / |d| for s uniform on [-halfwidth, halfwidth]
/// (s = 0 alone when samples == 1). Evaluates truth too when given.
std::vector<CrossSectionRow> cross_section(const ScalarField& f, const Point& origin, const Point& direction,
                                           double halfwidth, std::size_t samples, const ScalarField& truth = {});

/// `s,value` or, with a truth column, `s,value,truth`.
void write_cross_section(std::ostream& os, const std::vector<CrossSectionRow>& rows);
std::vector<CrossSectionRow> read_cross_section(std::istream& is);

struct MseRow {
  std::string example;
  std::size_t dim = 0;
  double mse_psi = 0.0;
  double mse_prior = 0.0;
};

/// `example,dim,mse_psi,mse_prior`
void write_mse_report(std::ostream& os, const std::vector<MseRow>& rows);
std::vector<MseRow> read_mse_report(std::istream& is);

}  // namespace hjprox

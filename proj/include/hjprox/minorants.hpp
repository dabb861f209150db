#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "hjprox/core.hpp"
#include "hjprox/dataset.hpp"

namespace hjprox {

enum class MinorantMode { PAM, PQM };

std::string to_string(MinorantMode mode);
MinorantMode minorant_mode_from_string(const std::string& s);

/// Where the anchor values j_k came from, most trusted first.
enum class JSource { ClosedForm, BackwardSolve, File };

struct Anchor {
  Point y;  ///< proximal point x - t grad S(x)
  Point x;  ///< sample location
  double j = 0.0;
};

/// Piecewise affine (alpha = 0) or quadratic minorant of J_BVS:
///   J(y) = (1/t) max_k { t j_k + |x_k - y_k|^2/2 - |x_k - y|^2/2 + (alpha/2) |y - y_k|^2 }.
struct MinorantModel {
  MinorantMode mode = MinorantMode::PAM;
  double alpha = 0.0;
  double t = 1.0;
  std::size_t dim = 0;
  std::vector<Anchor> anchors;
  JSource source = JSource::File;
};

/// Anchors from dataset samples; y_k within 1e-12 (max norm) of an earlier
/// anchor are merged, keeping the larger j. alpha is ignored for PAM and must
/// lie in (0, 1] for PQM.
MinorantModel build_minorant(const Dataset& ds, const std::vector<double>& j_values, MinorantMode mode,
                             double alpha = 0.0, JSource source = JSource::File);

double eval_minorant(const MinorantModel& m, const Point& y);

/// Value of S(x_k, t) when x matches an anchor's x_k to within 1e-12, and
/// +inf everywhere else.
double recovered_S_pam(const MinorantModel& m, const Point& x);

/// inf_y { |x - y|^2 / (2t) + J_PQM(y) }, solved exactly through the dual
/// quadratic program over the simplex of anchor weights.
double recovered_S_pqm(const MinorantModel& m, const Point& x);

/// Largest alpha in {1, 1/2, 1/4, ..., 2^-20} whose PQM stays below the
/// held-out J_BVS values (tolerance 1e-6); 0 when none does.
double estimate_alpha(const Dataset& ds, const std::vector<double>& j_values,
                      const std::vector<Point>& holdout_y, const std::vector<double>& holdout_j);

/// Header `mode,alpha,t,dim,K`, then one `y_1..y_n,x_1..x_n,j` row per anchor.
void write_minorant(std::ostream& os, const MinorantModel& m);
MinorantModel read_minorant(std::istream& is);
void save_minorant(const std::filesystem::path& path, const MinorantModel& m);
MinorantModel load_minorant(const std::filesystem::path& path);

}  // namespace hjprox

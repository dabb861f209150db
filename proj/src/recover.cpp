#include "hjprox/recover.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "hjprox/csv.hpp"
#include "hjprox/optimize.hpp"

namespace hjprox {

std::string to_string(RecoveryMethod m) {
  switch (m) {
    case RecoveryMethod::DirectConjugate: return "direct";
    case RecoveryMethod::InvertLpn: return "invert";
    case RecoveryMethod::MinorantPQM: return "pqm";
    case RecoveryMethod::BackwardNumeric: return "backward";
  }
  return "direct";
}

RecoveryMethod recovery_method_from_string(const std::string& s) {
  if (s == "direct") return RecoveryMethod::DirectConjugate;
  if (s == "invert") return RecoveryMethod::InvertLpn;
  if (s == "pqm") return RecoveryMethod::MinorantPQM;
  if (s == "backward") return RecoveryMethod::BackwardNumeric;
  throw InvalidArgument("unknown recovery method '" + s + "'");
}

RecoveredPrior RecoveredPrior::direct(IcnnModel phi_G, TimeParam t, bool general_t) {
  RecoveredPrior rp;
  rp.method = RecoveryMethod::DirectConjugate;
  rp.dim_ = phi_G.config().dim;
  rp.model = std::make_shared<const IcnnModel>(std::move(phi_G));
  rp.t = t;
  rp.general_t = general_t;
  return rp;
}

RecoveredPrior RecoveredPrior::invert(IcnnModel psi, TimeParam t, Box search_box) {
  if (search_box.dim() != psi.config().dim) throw DimensionMismatch(psi.config().dim, search_box.dim());
  RecoveredPrior rp;
  rp.method = RecoveryMethod::InvertLpn;
  rp.dim_ = psi.config().dim;
  rp.model = std::make_shared<const IcnnModel>(std::move(psi));
  rp.t = t;
  rp.search_box = std::move(search_box);
  return rp;
}

RecoveredPrior RecoveredPrior::from_minorant(MinorantModel m) {
  RecoveredPrior rp;
  rp.method = RecoveryMethod::MinorantPQM;
  rp.dim_ = m.dim;
  rp.t = TimeParam(m.t);
  rp.minorant = std::make_shared<const MinorantModel>(std::move(m));
  return rp;
}

RecoveredPrior RecoveredPrior::from_backward(std::shared_ptr<const BackwardSolver> solver, TimeParam t,
                                             std::size_t dim) {
  if (!solver) throw InvalidArgument("from_backward: null solver");
  RecoveredPrior rp;
  rp.method = RecoveryMethod::BackwardNumeric;
  rp.dim_ = dim;
  rp.backward = std::move(solver);
  rp.t = t;
  return rp;
}

std::size_t RecoveredPrior::dim() const { return dim_; }

double RecoveredPrior::operator()(const Point& x) const {
  switch (method) {
    case RecoveryMethod::DirectConjugate: return eval_direct(*this, x);
    case RecoveryMethod::InvertLpn: return eval_invert(*this, x);
    case RecoveryMethod::MinorantPQM:
      require_dim(x, dim_);
      return eval_minorant(*minorant, x);
    case RecoveryMethod::BackwardNumeric:
      require_dim(x, dim_);
      return (*backward)(x);
  }
  throw InvalidArgument("RecoveredPrior: bad method");
}

double eval_direct(const RecoveredPrior& rp, const Point& x) {
  if (rp.method != RecoveryMethod::DirectConjugate || !rp.model)
    throw InvalidArgument("eval_direct: needs a DirectConjugate prior");
  require_dim(x, rp.dim());
  const double v = forward(*rp.model, x) - 0.5 * x.squaredNorm();
  return rp.general_t ? v / rp.t.value() : v;
}

double eval_invert(const RecoveredPrior& rp, const Point& y) {
  if (rp.method != RecoveryMethod::InvertLpn || !rp.model || !rp.search_box)
    throw InvalidArgument("eval_invert: needs an InvertLpn prior");
  require_dim(y, rp.dim());
  const IcnnModel& m = *rp.model;
  Objective obj;
  obj.value = [&](const Point& x) { return forward(m, x) - x.dot(y); };
  obj.gradient = [&](const Point& x) -> Point { return input_gradient(m, x) - y; };
  MinimizeOptions opts;
  opts.bounds = rp.search_box;
  opts.restart_box = rp.search_box;
  opts.seed = hash_point(y, 0x1a7e);
  opts.polish = false;
  MinimizeResult r = multistart_minimize(obj, {y}, opts);
  if (!r.left_bounds && obj.grad(r.argmin).norm() > 1e-6) {
    opts.restarts = 8;
    MinimizeResult retry = multistart_minimize(obj, {y}, opts);
    if (retry.left_bounds || retry.value < r.value) r = std::move(retry);
  }
  if (r.left_bounds || !rp.search_box->contains(r.argmin))
    throw OutOfRange("eval_invert: y is outside the range of the learned proximal map");
  return (-r.value - 0.5 * y.squaredNorm()) / rp.t.value();
}

double score_mse(const ScalarField& f, const ScalarField& truth, const std::vector<Point>& points) {
  if (points.empty()) throw InvalidArgument("score_mse: empty point set");
  std::vector<double> err(points.size());
  parallel_for(points.size(), [&](std::size_t i) {
    const double d = f(points[i]) - truth(points[i]);
    err[i] = d * d;
  });
  double sum = 0.0;
  for (double e : err) sum += e;
  return sum / static_cast<double>(points.size());
}

double score_mse(const RecoveredPrior& rp, const ScalarField& truth, const std::vector<Point>& points) {
  return score_mse([&](const Point& x) { return rp(x); }, truth, points);
}

double score_psi_mse(const IcnnModel& psi, const Dataset& held_out) {
  if (held_out.samples.empty()) throw InvalidArgument("score_psi_mse: empty dataset");
  require_dim(held_out.samples.front().x, psi.config().dim);
  Eigen::MatrixXd Y(static_cast<Eigen::Index>(held_out.dim), static_cast<Eigen::Index>(held_out.samples.size()));
  Eigen::RowVectorXd target(Y.cols());
  for (std::size_t i = 0; i < held_out.samples.size(); ++i) {
    const auto& s = held_out.samples[i];
    Y.col(static_cast<Eigen::Index>(i)) = s.x;
    target[static_cast<Eigen::Index>(i)] = 0.5 * s.x.squaredNorm() - held_out.t * s.s_value;
  }
  return (forward_batch(psi, Y) - target).squaredNorm() / static_cast<double>(Y.cols());
}

std::vector<Point> reachable_points(const Dataset& held_out) {
  std::vector<Point> out;
  out.reserve(held_out.samples.size());
  const TimeParam t(held_out.t);
  for (const auto& s : held_out.samples) out.push_back(s.prox_point(t));
  return out;
}

double score_prior_mse(const RecoveredPrior& rp, const PriorSpec& truth, const Dataset& held_out) {
  return score_mse(rp, [&](const Point& x) { return eval_J(truth, x); }, reachable_points(held_out));
}

std::vector<CrossSectionRow> cross_section(const ScalarField& f, const Point& origin, const Point& direction,
                                           double halfwidth, std::size_t samples, const ScalarField& truth) {
  if (direction.size() != origin.size()) throw DimensionMismatch(static_cast<std::size_t>(origin.size()),
                                                                 static_cast<std::size_t>(direction.size()));
  const double len = direction.norm();
  if (!(len > 0.0) || !std::isfinite(len)) throw InvalidArgument("cross_section: zero direction");
  if (!(halfwidth >= 0.0) || samples == 0) throw InvalidArgument("cross_section: need halfwidth >= 0 and samples >= 1");
  const Point d = direction / len;
  std::vector<CrossSectionRow> rows(samples);
  parallel_for(samples, [&](std::size_t i) {
    const double s = samples == 1 ? 0.0
                                  : -halfwidth + 2.0 * halfwidth * static_cast<double>(i) /
                                                     static_cast<double>(samples - 1);
    const Point x = origin + s * d;
    rows[i].s = s;
    rows[i].value = f(x);
    if (truth) rows[i].truth = truth(x);
  });
  return rows;
}

void write_cross_section(std::ostream& os, const std::vector<CrossSectionRow>& rows) {
  const bool with_truth = !rows.empty() && rows.front().truth.has_value();
  os << (with_truth ? "s,value,truth\n" : "s,value\n");
  for (const auto& r : rows) {
    if (with_truth) {
      csv::write_row(os, std::vector<double>{r.s, r.value, r.truth.value_or(std::nan(""))});
    } else {
      csv::write_row(os, std::vector<double>{r.s, r.value});
    }
  }
}

std::vector<CrossSectionRow> read_cross_section(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || (line != "s,value" && line != "s,value,truth"))
    throw InvalidArgument("cross-section csv: bad header");
  const bool with_truth = line == "s,value,truth";
  std::vector<CrossSectionRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != (with_truth ? 3u : 2u)) throw InvalidArgument("cross-section csv: bad row");
    CrossSectionRow r{csv::parse_double(f[0]), csv::parse_double(f[1]), std::nullopt};
    if (with_truth) r.truth = csv::parse_double(f[2]);
    rows.push_back(r);
  }
  return rows;
}

void write_mse_report(std::ostream& os, const std::vector<MseRow>& rows) {
  os << "example,dim,mse_psi,mse_prior\n";
  for (const auto& r : rows) {
    csv::write_row(os, {r.example, std::to_string(r.dim), csv::format(r.mse_psi), csv::format(r.mse_prior)});
  }
}

std::vector<MseRow> read_mse_report(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "example,dim,mse_psi,mse_prior")
    throw InvalidArgument("mse report: bad header");
  std::vector<MseRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != 4) throw InvalidArgument("mse report: bad row");
    rows.push_back({std::string(f[0]), static_cast<std::size_t>(csv::parse_int(f[1])), csv::parse_double(f[2]),
                    csv::parse_double(f[3])});
  }
  return rows;
}

}  // namespace hjprox

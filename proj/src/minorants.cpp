#include "hjprox/minorants.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>

#include "hjprox/csv.hpp"

namespace hjprox {
namespace {

constexpr double kDedupTol = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

double piece(const MinorantModel& m, const Anchor& a, const Point& y) {
  double v = m.t * a.j + 0.5 * (a.x - a.y).squaredNorm() - 0.5 * (a.x - y).squaredNorm();
  if (m.mode == MinorantMode::PQM) v += 0.5 * m.alpha * (y - a.y).squaredNorm();
  return v;
}

// Euclidean projection onto the probability simplex (sort-based).
Eigen::VectorXd project_simplex(const Eigen::VectorXd& v) {
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    cum += u[i];
    const double cand = (cum - 1.0) / static_cast<double>(i + 1);
    if (u[i] - cand > 0.0) theta = cand;
  }
  return (v.array() - theta).max(0.0).matrix();
}

// min_y (alpha/2)|y|^2 + max_k (g_k . y + c_k)
struct PiecewiseQP {
  Eigen::MatrixXd G;  // n x K
  Eigen::VectorXd c;  // K
  double alpha;

  double primal(const Eigen::VectorXd& y) const {
    return 0.5 * alpha * y.squaredNorm() + (G.transpose() * y + c).maxCoeff();
  }
  double dual(const Eigen::VectorXd& lam) const {
    return c.dot(lam) - (G * lam).squaredNorm() / (2.0 * alpha);
  }
  Eigen::VectorXd y_of(const Eigen::VectorXd& lam) const { return -(G * lam) / alpha; }

  // Solves the KKT system restricted to the support set; returns the primal
  // value at the resulting y if the multipliers are feasible.
  std::optional<double> kkt(const std::vector<Eigen::Index>& support) const {
    const auto m = static_cast<Eigen::Index>(support.size());
    if (m == 0) return std::nullopt;
    Eigen::MatrixXd GA(G.rows(), m);
    Eigen::VectorXd cA(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      GA.col(i) = G.col(support[static_cast<std::size_t>(i)]);
      cA[i] = c[support[static_cast<std::size_t>(i)]];
    }
    // [ -GA^T GA / alpha   -1 ] [lam]   [-cA]
    // [  1^T               0  ] [ s ] = [ 1 ]
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m + 1, m + 1);
    A.topLeftCorner(m, m) = -(GA.transpose() * GA) / alpha;
    A.topRightCorner(m, 1).setConstant(-1.0);
    A.bottomLeftCorner(1, m).setConstant(1.0);
    Eigen::VectorXd rhs(m + 1);
    rhs.head(m) = -cA;
    rhs[m] = 1.0;
    const Eigen::VectorXd sol = A.completeOrthogonalDecomposition().solve(rhs);
    if (!sol.allFinite()) return std::nullopt;
    const Eigen::VectorXd lamA = sol.head(m);
    if (lamA.minCoeff() < -1e-12) return std::nullopt;
    const Eigen::VectorXd y = -(GA * lamA) / alpha;
    return primal(y);
  }

  double solve() const {
    const Eigen::Index K = c.size();
    Eigen::Index best_k = 0;
    c.maxCoeff(&best_k);
    double best = primal(Eigen::VectorXd::Zero(G.rows()));
    const double lip = (G * G.transpose()).selfadjointView<Eigen::Lower>().eigenvalues().maxCoeff() / alpha;
    Eigen::VectorXd lam = Eigen::VectorXd::Zero(K);
    lam[best_k] = 1.0;
    if (!(lip > 0.0)) return best;

    Eigen::VectorXd z = lam, prev = lam;
    double tk = 1.0;
    double lower = dual(lam);
    for (int it = 0; it < 20000; ++it) {
      const Eigen::VectorXd grad = c - G.transpose() * (G * z) / alpha;
      lam = project_simplex(z + grad / lip);
      const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
      z = lam + ((tk - 1.0) / tn) * (lam - prev);
      // adaptive restart when the momentum step goes downhill
      if (dual(lam) < dual(prev)) {
        z = lam;
        tk = 1.0;
      } else {
        tk = tn;
      }
      prev = lam;
      if (it % 16 == 0 || it < 16) {
        lower = std::max(lower, dual(lam));
        best = std::min(best, primal(y_of(lam)));
        if (best - lower <= 1e-14 * (1.0 + std::abs(best))) break;
      }
    }
    best = std::min(best, primal(y_of(lam)));

    std::vector<Eigen::Index> support;
    for (Eigen::Index k = 0; k < K; ++k)
      if (lam[k] > 1e-10) support.push_back(k);
    if (auto v = kkt(support)) best = std::min(best, *v);
    const Eigen::VectorXd y = y_of(lam);
    const Eigen::VectorXd vals = G.transpose() * y + c;
    const double top = vals.maxCoeff();
    support.clear();
    for (Eigen::Index k = 0; k < K; ++k)
      if (vals[k] >= top - 1e-8 * (1.0 + std::abs(top))) support.push_back(k);
    if (auto v = kkt(support)) best = std::min(best, *v);
    return best;
  }
};

}  // namespace

std::string to_string(MinorantMode mode) { return mode == MinorantMode::PAM ? "PAM" : "PQM"; }

MinorantMode minorant_mode_from_string(const std::string& s) {
  if (s == "PAM" || s == "pam") return MinorantMode::PAM;
  if (s == "PQM" || s == "pqm") return MinorantMode::PQM;
  throw InvalidArgument("unknown minorant mode '" + s + "'");
}

MinorantModel build_minorant(const Dataset& ds, const std::vector<double>& j_values, MinorantMode mode,
                             double alpha, JSource source) {
  ds.validate();
  if (j_values.size() != ds.samples.size()) {
    throw InvalidArgument("build_minorant: " + std::to_string(j_values.size()) + " j values for " +
                          std::to_string(ds.samples.size()) + " samples");
  }
  if (mode == MinorantMode::PQM && !(alpha > 0.0 && alpha <= 1.0)) {
    throw InvalidArgument("build_minorant: PQM needs 0 < alpha <= 1");
  }
  MinorantModel m;
  m.mode = mode;
  m.alpha = mode == MinorantMode::PQM ? alpha : 0.0;
  m.t = ds.t;
  m.dim = ds.dim;
  m.source = source;
  const TimeParam t(ds.t);

  std::vector<Anchor> raw;
  raw.reserve(ds.samples.size());
  for (std::size_t k = 0; k < ds.samples.size(); ++k) {
    if (!std::isfinite(j_values[k])) throw NumericFailure("build_minorant: non-finite j", to_std(ds.samples[k].x));
    raw.push_back({ds.samples[k].prox_point(t), ds.samples[k].x, j_values[k]});
  }
  // sweep in order of the first coordinate; only neighbours within the
  // tolerance along it can be duplicates
  std::vector<std::size_t> order(raw.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return raw[a].y[0] < raw[b].y[0]; });
  std::vector<bool> dropped(raw.size(), false);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::size_t a = order[i];
    if (dropped[a]) continue;
    for (std::size_t k = i + 1; k < order.size() && raw[order[k]].y[0] - raw[a].y[0] <= kDedupTol; ++k) {
      const std::size_t b = order[k];
      if (dropped[b] || (raw[a].y - raw[b].y).cwiseAbs().maxCoeff() > kDedupTol) continue;
      // keep the earlier index, carrying the larger value
      const std::size_t keep = std::min(a, b), drop = std::max(a, b);
      const double j = std::max(raw[a].j, raw[b].j);
      if (raw[drop].j > raw[keep].j) raw[keep] = raw[drop];
      raw[keep].j = j;
      dropped[drop] = true;
      if (drop == a) break;
    }
  }
  for (std::size_t k = 0; k < raw.size(); ++k)
    if (!dropped[k]) m.anchors.push_back(std::move(raw[k]));
  return m;
}

double eval_minorant(const MinorantModel& m, const Point& y) {
  if (m.anchors.empty()) throw InvalidArgument("minorant has no anchors");
  require_dim(y, m.dim);
  double best = -kInf;
  for (const auto& a : m.anchors) best = std::max(best, piece(m, a, y));
  return best / m.t;
}

double recovered_S_pam(const MinorantModel& m, const Point& x) {
  require_dim(x, m.dim);
  double best = kInf;
  for (const auto& a : m.anchors) {
    if ((a.x - x).cwiseAbs().maxCoeff() <= kDedupTol) {
      best = std::min(best, (a.x - a.y).squaredNorm() / (2.0 * m.t) + a.j);
    }
  }
  return best;
}

double recovered_S_pqm(const MinorantModel& m, const Point& x) {
  if (m.mode != MinorantMode::PQM || !(m.alpha > 0.0)) {
    throw Unsupported("recovered_S_pqm needs a PQM model with alpha > 0; the PAM infimum is formal");
  }
  if (m.anchors.empty()) throw InvalidArgument("minorant has no anchors");
  require_dim(x, m.dim);
  const auto K = static_cast<Eigen::Index>(m.anchors.size());
  PiecewiseQP qp{Eigen::MatrixXd(x.size(), K), Eigen::VectorXd(K), m.alpha};
  for (Eigen::Index k = 0; k < K; ++k) {
    const Anchor& a = m.anchors[static_cast<std::size_t>(k)];
    qp.G.col(k) = a.x - x - m.alpha * a.y;
    qp.c[k] = 0.5 * x.squaredNorm() - 0.5 * a.x.squaredNorm() + 0.5 * m.alpha * a.y.squaredNorm() + m.t * a.j +
              0.5 * (a.x - a.y).squaredNorm();
  }
  return checked(qp.solve() / m.t, x, "recovered_S_pqm");
}

double estimate_alpha(const Dataset& ds, const std::vector<double>& j_values,
                      const std::vector<Point>& holdout_y, const std::vector<double>& holdout_j) {
  if (holdout_y.size() != holdout_j.size() || holdout_y.empty()) {
    throw InvalidArgument("estimate_alpha: need matching, nonempty held-out points and values");
  }
  for (int e = 0; e <= 20; ++e) {
    const double alpha = std::ldexp(1.0, -e);
    const MinorantModel m = build_minorant(ds, j_values, MinorantMode::PQM, alpha);
    bool ok = true;
    for (std::size_t i = 0; i < holdout_y.size() && ok; ++i) ok = eval_minorant(m, holdout_y[i]) <= holdout_j[i] + 1e-6;
    if (ok) return alpha;
  }
  return 0.0;
}

void write_minorant(std::ostream& os, const MinorantModel& m) {
  csv::write_row(os, {to_string(m.mode), csv::format(m.alpha), csv::format(m.t), std::to_string(m.dim),
                      std::to_string(m.anchors.size())});
  std::vector<double> row(2 * m.dim + 1);
  for (const auto& a : m.anchors) {
    for (std::size_t j = 0; j < m.dim; ++j) {
      row[j] = a.y[static_cast<Eigen::Index>(j)];
      row[m.dim + j] = a.x[static_cast<Eigen::Index>(j)];
    }
    row[2 * m.dim] = a.j;
    csv::write_row(os, row);
  }
}

MinorantModel read_minorant(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw InvalidArgument("minorant: missing header");
  const auto head = csv::split(line);
  if (head.size() != 5) throw InvalidArgument("minorant: header must be mode,alpha,t,dim,K");
  MinorantModel m;
  m.mode = minorant_mode_from_string(std::string(head[0]));
  m.alpha = csv::parse_double(head[1]);
  m.t = TimeParam(csv::parse_double(head[2])).value();
  m.dim = static_cast<std::size_t>(csv::parse_int(head[3]));
  const auto K = static_cast<std::size_t>(csv::parse_int(head[4]));
  if (m.dim == 0) throw InvalidArgument("minorant: dim must be >= 1");
  const auto n = static_cast<Eigen::Index>(m.dim);
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = csv::split(line);
    if (f.size() != 2 * m.dim + 1) throw InvalidArgument("minorant: bad row width");
    Anchor a{Point(n), Point(n), 0.0};
    for (Eigen::Index j = 0; j < n; ++j) {
      a.y[j] = csv::parse_double(f[static_cast<std::size_t>(j)]);
      a.x[j] = csv::parse_double(f[m.dim + static_cast<std::size_t>(j)]);
    }
    a.j = csv::parse_double(f[2 * m.dim]);
    m.anchors.push_back(std::move(a));
  }
  if (m.anchors.size() != K) throw InvalidArgument("minorant: row count does not match header");
  return m;
}

void save_minorant(const std::filesystem::path& path, const MinorantModel& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DependencyMissing("cannot write " + path.string());
  write_minorant(os, m);
}

MinorantModel load_minorant(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DependencyMissing("minorant model not found: " + path.string());
  return read_minorant(is);
}

}  // namespace hjprox

#include "hjprox/priors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hjprox {
namespace {

struct WellChoice {
  std::size_t best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  double second_val = std::numeric_limits<double>::infinity();
};

// Index of the active quadratic of S = min_i |x - mu_i|^2 / (2 (sigma_i + t)).
WellChoice active_well(const PriorSpec& p, const Point& x, double t) {
  WellChoice w;
  for (std::size_t i = 0; i < p.centers.size(); ++i) {
    const double v = (x - p.centers[i]).squaredNorm() / (2.0 * (p.widths[i] + t));
    if (v < w.best_val) {
      w.second_val = w.best_val;
      w.best_val = v;
      w.best = i;
    } else if (v < w.second_val) {
      w.second_val = v;
    }
  }
  return w;
}

double concave_denominator(const PriorSpec& p, double t) { return 1.0 - 2.0 * p.curvature * t; }

void check_dim(const PriorSpec& p, const Point& x) {
  if (x.size() == 0) throw InvalidArgument("point must have dimension >= 1");
  if (const auto d = p.fixed_dim()) require_dim(x, *d);
}

void require_closed_form(const PriorSpec& p, const Point& x, TimeParam t) {
  check_dim(p, x);
  if (!p.has_closed_form(x, t)) {
    throw Unsupported("no closed form for prior " + to_string(p.kind) + " at this (x, t)");
  }
}

double sign_or_zero(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

std::string to_string(PriorKind kind) {
  switch (kind) {
    case PriorKind::L1: return "L1";
    case PriorKind::NegL1: return "NegL1";
    case PriorKind::NegAbs1D: return "NegAbs1D";
    case PriorKind::MinPlusQuadratics: return "MinPlusQuadratics";
    case PriorKind::ConcaveQuadratic: return "ConcaveQuadratic";
    case PriorKind::Zero: return "Zero";
    case PriorKind::Custom: return "Custom";
  }
  return "?";
}

PriorKind prior_kind_from_string(const std::string& s) {
  for (auto k : {PriorKind::L1, PriorKind::NegL1, PriorKind::NegAbs1D, PriorKind::MinPlusQuadratics,
                 PriorKind::ConcaveQuadratic, PriorKind::Zero, PriorKind::Custom}) {
    if (to_string(k) == s) return k;
  }
  throw InvalidArgument("unknown prior kind '" + s + "'");
}

namespace {
PriorSpec with_kind(PriorKind k) {
  PriorSpec p;
  p.kind = k;
  return p;
}
}  // namespace

PriorSpec PriorSpec::l1() { return with_kind(PriorKind::L1); }
PriorSpec PriorSpec::neg_l1() { return with_kind(PriorKind::NegL1); }
PriorSpec PriorSpec::neg_abs_1d() { return with_kind(PriorKind::NegAbs1D); }
PriorSpec PriorSpec::zero() { return with_kind(PriorKind::Zero); }

PriorSpec PriorSpec::min_plus(std::vector<Point> centers, std::vector<double> widths) {
  PriorSpec p = with_kind(PriorKind::MinPlusQuadratics);
  p.centers = std::move(centers);
  p.widths = std::move(widths);
  p.validate();
  return p;
}

PriorSpec PriorSpec::min_plus_two_wells(std::size_t dim) {
  if (dim == 0) throw InvalidArgument("min-plus prior needs dim >= 1");
  const auto n = static_cast<Eigen::Index>(dim);
  Point mu1 = Point::Zero(n);
  mu1[0] = 1.0;
  const Point mu2 = Point::Constant(n, 1.0 / std::sqrt(static_cast<double>(dim)));
  return min_plus({mu1, mu2}, {1.0, 1.0});
}

PriorSpec PriorSpec::concave_quadratic(double curvature, double huber_radius) {
  PriorSpec p = with_kind(PriorKind::ConcaveQuadratic);
  p.curvature = curvature;
  p.huber_radius = huber_radius;
  p.validate();
  return p;
}

PriorSpec PriorSpec::custom(ScalarField value, VectorField gradient, bool convex) {
  PriorSpec p = with_kind(PriorKind::Custom);
  p.custom_value = std::move(value);
  p.custom_gradient = std::move(gradient);
  p.custom_convex = convex;
  p.validate();
  return p;
}

void PriorSpec::validate() const {
  switch (kind) {
    case PriorKind::MinPlusQuadratics: {
      if (centers.empty() || centers.size() != widths.size()) {
        throw InvalidArgument("min-plus prior needs matching, nonempty centers and widths");
      }
      for (std::size_t i = 0; i < centers.size(); ++i) {
        if (centers[i].size() != centers[0].size() || centers[i].size() == 0) {
          throw InvalidArgument("min-plus centers must share a dimension >= 1");
        }
        if (!(widths[i] > 0.0)) throw InvalidArgument("min-plus widths must be > 0");
      }
      break;
    }
    case PriorKind::ConcaveQuadratic:
      if (!(curvature > 0.0)) throw InvalidArgument("concave curvature must be > 0");
      if (huber_radius < 0.0) throw InvalidArgument("huber radius must be >= 0");
      break;
    case PriorKind::Custom:
      if (!custom_value) throw InvalidArgument("custom prior needs a value callable");
      break;
    default:
      break;
  }
}

std::optional<std::size_t> PriorSpec::fixed_dim() const {
  if (kind == PriorKind::NegAbs1D) return 1;
  if (kind == PriorKind::MinPlusQuadratics) return static_cast<std::size_t>(centers.front().size());
  return std::nullopt;
}

bool PriorSpec::is_convex() const {
  return kind == PriorKind::L1 || kind == PriorKind::Zero ||
         (kind == PriorKind::MinPlusQuadratics && centers.size() == 1) ||
         (kind == PriorKind::Custom && custom_convex);
}

bool PriorSpec::has_closed_form(const Point& x, TimeParam t) const {
  switch (kind) {
    case PriorKind::Custom: return false;
    case PriorKind::ConcaveQuadratic: {
      const double den = concave_denominator(*this, t);
      if (!(den > 0.0)) return false;
      return huber_radius == 0.0 || x.norm() / den <= huber_radius;
    }
    default: return true;
  }
}

Objective PriorSpec::objective() const {
  Objective f;
  const PriorSpec self = *this;
  f.value = [self](const Point& y) { return eval_J(self, y); };
  if (kind != PriorKind::Custom || custom_gradient) {
    f.gradient = [self](const Point& y) { return subgradient_J(self, y); };
  }
  return f;
}

double eval_J(const PriorSpec& p, const Point& y) {
  check_dim(p, y);
  switch (p.kind) {
    case PriorKind::L1: return y.lpNorm<1>();
    case PriorKind::NegL1:
    case PriorKind::NegAbs1D: return -y.lpNorm<1>();
    case PriorKind::MinPlusQuadratics: {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < p.centers.size(); ++i) {
        best = std::min(best, (y - p.centers[i]).squaredNorm() / (2.0 * p.widths[i]));
      }
      return best;
    }
    case PriorKind::ConcaveQuadratic: {
      const double r = y.norm();
      if (p.huber_radius > 0.0 && r > p.huber_radius) {
        return -p.curvature * (2.0 * p.huber_radius * r - p.huber_radius * p.huber_radius);
      }
      return -p.curvature * r * r;
    }
    case PriorKind::Zero: return 0.0;
    case PriorKind::Custom: return p.custom_value(y);
  }
  return 0.0;
}

Point subgradient_J(const PriorSpec& p, const Point& y) {
  check_dim(p, y);
  switch (p.kind) {
    case PriorKind::L1: return y.unaryExpr([](double v) { return sign_or_zero(v); });
    case PriorKind::NegL1:
    case PriorKind::NegAbs1D: return y.unaryExpr([](double v) { return v >= 0.0 ? -1.0 : 1.0; });
    case PriorKind::MinPlusQuadratics: {
      std::size_t best = 0;
      double best_val = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < p.centers.size(); ++i) {
        const double v = (y - p.centers[i]).squaredNorm() / (2.0 * p.widths[i]);
        if (v < best_val) {
          best_val = v;
          best = i;
        }
      }
      return (y - p.centers[best]) / p.widths[best];
    }
    case PriorKind::ConcaveQuadratic: {
      const double r = y.norm();
      if (p.huber_radius > 0.0 && r > p.huber_radius) {
        return (-2.0 * p.curvature * p.huber_radius / r) * y;
      }
      return -2.0 * p.curvature * y;
    }
    case PriorKind::Zero: return Point::Zero(y.size());
    case PriorKind::Custom:
      if (p.custom_gradient) return p.custom_gradient(y);
      return finite_diff_gradient(p.custom_value, y, 1e-6);
  }
  return Point::Zero(y.size());
}

double huber(double u, double t) {
  const double a = std::abs(u);
  return a <= t ? u * u / (2.0 * t) : a - t / 2.0;
}

double soft_threshold(double u, double t) {
  if (u > t) return u - t;
  if (u < -t) return u + t;
  return 0.0;
}

double eval_S_closed(const PriorSpec& p, const Point& x, TimeParam t) {
  require_closed_form(p, x, t);
  const double tv = t.value();
  switch (p.kind) {
    case PriorKind::L1: {
      double s = 0.0;
      for (Eigen::Index j = 0; j < x.size(); ++j) s += huber(x[j], tv);
      return s;
    }
    case PriorKind::NegL1:
    case PriorKind::NegAbs1D: {
      double s = 0.0;
      for (Eigen::Index j = 0; j < x.size(); ++j) s += -tv / 2.0 - std::abs(x[j]);
      return s;
    }
    case PriorKind::MinPlusQuadratics: return active_well(p, x, tv).best_val;
    case PriorKind::ConcaveQuadratic:
      return -p.curvature * x.squaredNorm() / concave_denominator(p, tv);
    case PriorKind::Zero: return 0.0;
    case PriorKind::Custom: break;
  }
  throw Unsupported("no closed form");
}

Point eval_grad_S_closed(const PriorSpec& p, const Point& x, TimeParam t) {
  require_closed_form(p, x, t);
  const double tv = t.value();
  switch (p.kind) {
    case PriorKind::L1:
      return x.unaryExpr([tv](double v) { return std::clamp(v / tv, -1.0, 1.0); });
    case PriorKind::NegL1:
    case PriorKind::NegAbs1D: {
      Point g(x.size());
      for (Eigen::Index j = 0; j < x.size(); ++j) {
        if (x[j] == 0.0) throw Nondifferentiable("S is not differentiable where a coordinate is 0");
        g[j] = x[j] > 0.0 ? -1.0 : 1.0;
      }
      return g;
    }
    case PriorKind::MinPlusQuadratics: {
      const WellChoice w = active_well(p, x, tv);
      if (w.best_val == w.second_val) throw Nondifferentiable("x lies on the min-plus bisector");
      return (x - p.centers[w.best]) / (p.widths[w.best] + tv);
    }
    case PriorKind::ConcaveQuadratic:
      return (-2.0 * p.curvature / concave_denominator(p, tv)) * x;
    case PriorKind::Zero: return Point::Zero(x.size());
    case PriorKind::Custom: break;
  }
  throw Unsupported("no closed form");
}

std::vector<Point> eval_prox_closed(const PriorSpec& p, const Point& x, TimeParam t) {
  require_closed_form(p, x, t);
  const double tv = t.value();
  switch (p.kind) {
    case PriorKind::L1:
      return {x.unaryExpr([tv](double v) { return soft_threshold(v, tv); })};
    case PriorKind::NegL1:
    case PriorKind::NegAbs1D: {
      // product set: every zero coordinate doubles the alternatives
      std::vector<Point> out{Point(x.size())};
      for (Eigen::Index j = 0; j < x.size(); ++j) {
        if (x[j] != 0.0) {
          for (auto& q : out) q[j] = x[j] > 0.0 ? x[j] + tv : x[j] - tv;
          continue;
        }
        std::vector<Point> next;
        next.reserve(2 * out.size());
        for (const auto& q : out) {
          for (double v : {-tv, tv}) {
            next.push_back(q);
            next.back()[j] = v;
          }
        }
        out = std::move(next);
      }
      return out;
    }
    case PriorKind::MinPlusQuadratics: {
      const WellChoice w = active_well(p, x, tv);
      std::vector<Point> out;
      for (std::size_t i = 0; i < p.centers.size(); ++i) {
        const double v = (x - p.centers[i]).squaredNorm() / (2.0 * (p.widths[i] + tv));
        if (v == w.best_val) {
          out.push_back((p.widths[i] * x + tv * p.centers[i]) / (p.widths[i] + tv));
        }
      }
      return out;
    }
    case PriorKind::ConcaveQuadratic: return {x / concave_denominator(p, tv)};
    case PriorKind::Zero: return {x};
    case PriorKind::Custom: break;
  }
  throw Unsupported("no closed form");
}

double eval_Jbvs_closed(const PriorSpec& p, const Point& y, TimeParam t) {
  check_dim(p, y);
  const double tv = t.value();
  switch (p.kind) {
    case PriorKind::NegAbs1D:
    case PriorKind::NegL1: {
      double s = 0.0;
      for (Eigen::Index j = 0; j < y.size(); ++j) {
        const double a = std::abs(y[j]);
        s += a > tv ? -a : -tv / 2.0 - y[j] * y[j] / (2.0 * tv);
      }
      return s;
    }
    case PriorKind::Zero: return 0.0;
    // J is reachable everywhere (the proximal map is onto), so J_BVS = J.
    case PriorKind::L1: return y.lpNorm<1>();
    case PriorKind::ConcaveQuadratic:
      if (p.huber_radius == 0.0 && concave_denominator(p, tv) > 0.0) return eval_J(p, y);
      break;
    default: break;
  }
  throw Unsupported("no closed-form J_BVS for prior " + to_string(p.kind) +
                    "; use the numeric backward solver");
}

double eval_psi(const PriorSpec& p, const Point& x, TimeParam t) {
  return 0.5 * x.squaredNorm() - t.value() * eval_S_closed(p, x, t);
}

bool near_nondiff(const PriorSpec& p, const Point& x, TimeParam t, double tol) {
  switch (p.kind) {
    case PriorKind::L1:
    case PriorKind::NegL1:
    case PriorKind::NegAbs1D: return x.cwiseAbs().minCoeff() < tol;
    case PriorKind::MinPlusQuadratics: {
      if (p.centers.size() < 2) return false;
      const WellChoice w = active_well(p, x, t.value());
      return w.second_val - w.best_val < tol;
    }
    default: return false;
  }
}

}  // namespace hjprox

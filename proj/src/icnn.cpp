#include "hjprox/icnn.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "hjprox/rng.hpp"
#include "hjprox/tape.hpp"

namespace hjprox {
namespace {

constexpr char kMagic[8] = {'H', 'J', 'P', 'X', 'I', 'C', 'N', 'N'};
constexpr std::uint32_t kVersion = 1;
static_assert(std::endian::native == std::endian::little, "checkpoint format assumes a little-endian host");

Eigen::Index ix(std::size_t v) { return static_cast<Eigen::Index>(v); }

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw InvalidArgument("checkpoint: truncated file");
  return v;
}

void require_feasible(const IcnnModel& m) {
  if (!weights_nonnegative(m)) throw InvalidArgument("icnn: constrained weight is negative; project_weights first");
}

}  // namespace

void IcnnConfig::validate() const {
  if (dim == 0 || hidden == 0 || layers == 0) throw InvalidArgument("icnn: dim, hidden and layers must be >= 1");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw InvalidArgument("icnn: softplus beta must be > 0");
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw InvalidArgument("icnn: mu must be >= 0");
}

IcnnModel::Offsets IcnnModel::layout(const IcnnConfig& cfg) {
  Offsets o;
  std::size_t pos = 0;
  const std::size_t h = cfg.hidden, n = cfg.dim;
  o.W.push_back(0);  // unused slot so W(k) indexes from 1
  for (std::size_t k = 0; k < cfg.layers; ++k) {
    if (k > 0) {
      o.W.push_back(pos);
      pos += h * h;
    }
    o.H.push_back(pos);
    pos += h * n;
    o.b.push_back(pos);
    pos += h;
  }
  o.w_out = pos;
  pos += h;
  o.h_out = pos;
  pos += n;
  o.b_out = pos;
  pos += 1;
  o.total = pos;
  return o;
}

std::size_t IcnnModel::param_count(const IcnnConfig& cfg) { return layout(cfg).total; }

IcnnModel::IcnnModel(const IcnnConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  off_ = layout(cfg_);
  params_ = Eigen::VectorXd::Zero(ix(off_.total));
  const CounterRng rng(cfg_.seed);
  const std::size_t h = cfg_.hidden, n = cfg_.dim;
  for (std::size_t k = 0; k < cfg_.layers; ++k) {
    const std::size_t fan_in = k == 0 ? n : h + n;
    const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
    auto fill = [&](std::size_t start, std::size_t count, bool nonneg) {
      for (std::size_t i = start; i < start + count; ++i) {
        const double v = rng.uniform(i, -s, s);
        params_[ix(i)] = nonneg ? std::abs(v) : v;
      }
    };
    if (k > 0) fill(off_.W[k], h * h, true);
    fill(off_.H[k], h * n, false);
    fill(off_.b[k], h, false);
  }
}

IcnnModel::IcnnModel(const IcnnConfig& cfg, Eigen::VectorXd params) : cfg_(cfg), params_(std::move(params)) {
  cfg_.validate();
  off_ = layout(cfg_);
  if (static_cast<std::size_t>(params_.size()) != off_.total) {
    throw DimensionMismatch(off_.total, static_cast<std::size_t>(params_.size()));
  }
}

IcnnModel::CMap IcnnModel::H(std::size_t k) const { return CMap(params_.data() + off_.H.at(k), ix(cfg_.hidden), ix(cfg_.dim)); }
IcnnModel::CMap IcnnModel::b(std::size_t k) const { return CMap(params_.data() + off_.b.at(k), ix(cfg_.hidden), 1); }
IcnnModel::CMap IcnnModel::W(std::size_t k) const {
  if (k == 0 || k >= cfg_.layers) throw OutOfRange("icnn: W index out of range");
  return CMap(params_.data() + off_.W[k], ix(cfg_.hidden), ix(cfg_.hidden));
}
IcnnModel::CMap IcnnModel::w_out() const { return CMap(params_.data() + off_.w_out, ix(cfg_.hidden), 1); }
IcnnModel::CMap IcnnModel::h_out() const { return CMap(params_.data() + off_.h_out, ix(cfg_.dim), 1); }
double IcnnModel::b_out() const { return params_[ix(off_.b_out)]; }
IcnnModel::Map IcnnModel::W(std::size_t k) {
  if (k == 0 || k >= cfg_.layers) throw OutOfRange("icnn: W index out of range");
  return Map(params_.data() + off_.W[k], ix(cfg_.hidden), ix(cfg_.hidden));
}
IcnnModel::Map IcnnModel::w_out() { return Map(params_.data() + off_.w_out, ix(cfg_.hidden), 1); }

bool weights_nonnegative(const IcnnModel& m) {
  for (std::size_t k = 1; k < m.config().layers; ++k)
    if ((m.W(k).array() < 0.0).any()) return false;
  return !(m.w_out().array() < 0.0).any();
}

void project_weights_inplace(IcnnModel& m) {
  for (std::size_t k = 1; k < m.config().layers; ++k) m.W(k) = m.W(k).cwiseMax(0.0);
  m.w_out() = m.w_out().cwiseMax(0.0);
}

IcnnModel project_weights(IcnnModel m) {
  project_weights_inplace(m);
  return m;
}

Eigen::RowVectorXd forward_batch(const IcnnModel& m, const Eigen::MatrixXd& Y) {
  require_feasible(m);
  if (static_cast<std::size_t>(Y.rows()) != m.dim()) throw DimensionMismatch(m.dim(), static_cast<std::size_t>(Y.rows()));
  const double beta = m.config().beta;
  Eigen::MatrixXd A = m.H(0) * Y;
  A.colwise() += m.b(0).col(0);
  Eigen::MatrixXd Z = tape::softplus(A, beta);
  for (std::size_t k = 1; k < m.config().layers; ++k) {
    A.noalias() = m.W(k) * Z;
    A.noalias() += m.H(k) * Y;
    A.colwise() += m.b(k).col(0);
    Z = tape::softplus(A, beta);
  }
  Eigen::RowVectorXd out = m.w_out().transpose() * Z + m.h_out().transpose() * Y;
  out.array() += m.b_out();
  if (m.config().mu != 0.0) out += 0.5 * m.config().mu * Y.colwise().squaredNorm();
  return out;
}

double forward(const IcnnModel& m, const Point& y) { return forward_batch(m, y)(0); }

Eigen::MatrixXd input_gradient_batch(const IcnnModel& m, const Eigen::MatrixXd& Y) {
  require_feasible(m);
  if (static_cast<std::size_t>(Y.rows()) != m.dim()) throw DimensionMismatch(m.dim(), static_cast<std::size_t>(Y.rows()));
  const double beta = m.config().beta;
  const std::size_t L = m.config().layers;
  std::vector<Eigen::MatrixXd> pre(L);
  pre[0] = m.H(0) * Y;
  pre[0].colwise() += m.b(0).col(0);
  Eigen::MatrixXd Z = tape::softplus(pre[0], beta);
  for (std::size_t k = 1; k < L; ++k) {
    pre[k].noalias() = m.W(k) * Z;
    pre[k].noalias() += m.H(k) * Y;
    pre[k].colwise() += m.b(k).col(0);
    if (k + 1 < L) Z = tape::softplus(pre[k], beta);
  }
  Eigen::MatrixXd G = m.h_out().col(0).replicate(1, Y.cols());
  if (m.config().mu != 0.0) G += m.config().mu * Y;
  Eigen::MatrixXd D = tape::sigmoid(pre[L - 1], beta).array().colwise() * m.w_out().col(0).array();
  for (std::size_t k = L; k-- > 0;) {
    G.noalias() += m.H(k).transpose() * D;
    if (k > 0) {
      Eigen::MatrixXd back = m.W(k).transpose() * D;
      D = back.cwiseProduct(tape::sigmoid(pre[k - 1], beta));
    }
  }
  return G;
}

Point input_gradient(const IcnnModel& m, const Point& y) { return input_gradient_batch(m, y).col(0); }

LossKind loss_kind_from_string(const std::string& s) {
  if (s == "mse" || s == "MSE") return LossKind::MSE;
  if (s == "l1" || s == "L1") return LossKind::L1;
  throw InvalidArgument("unknown loss '" + s + "'");
}

LossTarget loss_target_from_string(const std::string& s) {
  if (s == "psi" || s == "value") return LossTarget::Value;
  if (s == "prox" || s == "gradient") return LossTarget::Gradient;
  throw InvalidArgument("unknown loss target '" + s + "'");
}

TapeGradient param_gradient(const IcnnModel& m, const Eigen::MatrixXd& Y, const Eigen::MatrixXd& targets,
                            LossKind loss, LossTarget target) {
  require_feasible(m);
  if (Y.cols() == 0) throw InvalidArgument("param_gradient: empty batch");
  if (static_cast<std::size_t>(Y.rows()) != m.dim()) throw DimensionMismatch(m.dim(), static_cast<std::size_t>(Y.rows()));
  const Eigen::Index want_rows = target == LossTarget::Value ? 1 : Y.rows();
  if (targets.rows() != want_rows || targets.cols() != Y.cols()) {
    throw InvalidArgument("param_gradient: targets have the wrong shape");
  }
  const IcnnConfig& cfg = m.config();
  tape::Tape tp;
  std::vector<tape::Var> leaves;
  std::vector<std::pair<std::size_t, std::size_t>> spans;  // (offset, size) of each leaf in params
  auto param_leaf = [&](const IcnnModel::CMap& block) {
    leaves.push_back(tp.leaf(Eigen::MatrixXd(block), true));
    spans.emplace_back(static_cast<std::size_t>(block.data() - m.params().data()), static_cast<std::size_t>(block.size()));
    return leaves.back();
  };
  const tape::Var y = tp.leaf(Y, true);
  tape::Var z = tp.softplus(tp.add_bias(tp.matmul(param_leaf(m.H(0)), y), param_leaf(m.b(0))), cfg.beta);
  for (std::size_t k = 1; k < cfg.layers; ++k) {
    const tape::Var w = param_leaf(m.W(k));
    const tape::Var h = param_leaf(m.H(k));
    const tape::Var bb = param_leaf(m.b(k));
    z = tp.softplus(tp.add_bias(tp.add(tp.matmul(w, z), tp.matmul(h, y)), bb), cfg.beta);
  }
  const tape::Var wo = param_leaf(m.w_out());
  const tape::Var ho = param_leaf(m.h_out());
  const tape::Var bo = tp.leaf(Eigen::MatrixXd::Constant(1, 1, m.b_out()), true);
  leaves.push_back(bo);
  spans.emplace_back(static_cast<std::size_t>(m.params().size()) - 1, 1);
  tape::Var out = tp.add_bias(tp.add(tp.matmul(wo, z, true, false), tp.matmul(ho, y, true, false)), bo);
  if (cfg.mu != 0.0) out = tp.add(out, tp.scale(tp.col_sum(tp.mul(y, y)), 0.5 * cfg.mu));

  tape::Var pred = out;
  if (target == LossTarget::Gradient) pred = tp.grad_graph(tp.sum_all(out), {y})[0];
  const tape::Var diff = tp.sub(pred, tp.constant(targets));
  const double inv = 1.0 / static_cast<double>(targets.size());
  const tape::Var total = loss == LossKind::MSE ? tp.scale(tp.sum_all(tp.mul(diff, diff)), inv)
                                                : tp.scale(tp.sum_all(tp.abs(diff)), inv);

  std::vector<tape::Var> wrt = leaves;
  wrt.push_back(y);
  const std::vector<Eigen::MatrixXd> g = tp.grad(total, wrt);
  TapeGradient res;
  res.loss = tp.value(total)(0, 0);
  res.d_params = Eigen::VectorXd::Zero(m.params().size());
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    res.d_params.segment(ix(spans[i].first), ix(spans[i].second)) =
        Eigen::Map<const Eigen::VectorXd>(g[i].data(), g[i].size());
  }
  res.d_input = g.back();
  return res;
}

double batch_loss(const IcnnModel& m, const Eigen::MatrixXd& Y, const Eigen::MatrixXd& targets, LossKind loss,
                  LossTarget target) {
  const Eigen::MatrixXd pred = target == LossTarget::Value ? Eigen::MatrixXd(forward_batch(m, Y)) : input_gradient_batch(m, Y);
  if (pred.rows() != targets.rows() || pred.cols() != targets.cols()) throw InvalidArgument("batch_loss: target shape");
  const Eigen::ArrayXXd d = (pred - targets).array();
  return loss == LossKind::MSE ? d.square().mean() : d.abs().mean();
}

void save_checkpoint(const std::filesystem::path& path, const IcnnModel& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DependencyMissing("cannot write " + path.string());
  const IcnnConfig& c = m.config();
  os.write(kMagic, sizeof kMagic);
  put(os, kVersion);
  put(os, static_cast<std::uint64_t>(c.layers));
  put(os, static_cast<std::uint64_t>(c.hidden));
  put(os, static_cast<std::uint64_t>(c.dim));
  put(os, c.beta);
  put(os, c.seed);
  put(os, c.mu);
  put(os, static_cast<std::uint64_t>(m.params().size()));
  os.write(reinterpret_cast<const char*>(m.params().data()), static_cast<std::streamsize>(m.params().size() * sizeof(double)));
  if (!os) throw Error("write failed: " + path.string());
}

IcnnModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DependencyMissing("checkpoint not found: " + path.string());
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw InvalidArgument("checkpoint: bad magic");
  if (get<std::uint32_t>(is) != kVersion) throw InvalidArgument("checkpoint: unsupported version");
  IcnnConfig c;
  c.layers = get<std::uint64_t>(is);
  c.hidden = get<std::uint64_t>(is);
  c.dim = get<std::uint64_t>(is);
  c.beta = get<double>(is);
  c.seed = get<std::uint64_t>(is);
  c.mu = get<double>(is);
  const auto count = get<std::uint64_t>(is);
  c.validate();
  if (count != IcnnModel::param_count(c)) throw InvalidArgument("checkpoint: parameter count does not match header");
  Eigen::VectorXd p(ix(count));
  is.read(reinterpret_cast<char*>(p.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (!is) throw InvalidArgument("checkpoint: truncated parameters");
  return IcnnModel(c, std::move(p));
}

}  // namespace hjprox

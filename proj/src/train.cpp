#include "hjprox/train.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>

#include "hjprox/csv.hpp"
#include "hjprox/hj.hpp"
#include "hjprox/rng.hpp"

namespace hjprox {
namespace {

constexpr double kNondiffTol = 1e-6;
constexpr double kDivergence = 1e6;
constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

// Fisher-Yates from a counter-based stream, so the order depends only on
// (seed, epoch).
std::vector<Eigen::Index> permutation(std::size_t n, const CounterRng& rng) {
  std::vector<Eigen::Index> p(n);
  std::iota(p.begin(), p.end(), Eigen::Index{0});
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.bits(i) % i);
    std::swap(p[i - 1], p[j]);
  }
  return p;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr0 > 0.0) || !(decay_factor > 0.0)) throw InvalidArgument("train: lr0 and decay_factor must be > 0");
  if (batch_size == 0) throw InvalidArgument("train: batch_size must be >= 1");
  if (decay_every == 0) throw InvalidArgument("train: decay_every must be >= 1");
  if (total_steps != 0 && total_steps < decay_every) throw InvalidArgument("train: need total_steps >= decay_every");
  if (desk_scale && !(*desk_scale > 0.0)) throw InvalidArgument("train: desk_scale must be > 0");
  IcnnConfig{1, hidden, layers, beta, mu, seed}.validate();
}

std::size_t TrainConfig::steps() const {
  if (!desk_scale) return total_steps;
  return static_cast<std::size_t>(std::llround(static_cast<double>(total_steps) * *desk_scale));
}

std::size_t TrainConfig::decay_interval() const {
  if (!desk_scale) return decay_every;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(decay_every) * *desk_scale)));
}

double TrainConfig::lr_at(std::size_t step) const {
  return lr0 * std::pow(decay_factor, static_cast<double>(step / decay_interval()));
}

Dataset synthesize_dataset(const PriorSpec& p, std::size_t dim, TimeParam t, std::size_t N, double a,
                           std::uint64_t seed) {
  p.validate();
  if (dim == 0 || N == 0 || !(a > 0.0)) throw InvalidArgument("synthesize_dataset: need dim, N >= 1 and a > 0");
  if (const auto d = p.fixed_dim(); d && *d != dim) throw DimensionMismatch(*d, dim);
  const bool closed = p.kind != PriorKind::Custom;
  if (!closed && dim > 3) throw Unsupported("synthesize_dataset: numeric targets are limited to dim <= 3");

  Dataset ds;
  ds.t = t.value();
  ds.dim = dim;
  ds.a = a;
  ds.seed = seed;
  ds.samples.resize(N);
  const CounterRng rng(seed);
  const auto n = static_cast<Eigen::Index>(dim);
  parallel_for(N, [&](std::size_t i) {
    const CounterRng stream = rng.split(i);
    Point x(n);
    for (std::uint64_t attempt = 0;; ++attempt) {
      if (attempt > 10000) throw DegenerateInput("synthesize_dataset: could not avoid the kink set");
      for (Eigen::Index j = 0; j < n; ++j) x[j] = stream.uniform(attempt * dim + static_cast<std::uint64_t>(j), -a, a);
      if (!closed || !near_nondiff(p, x, t, kNondiffTol)) break;
    }
    if (p.has_closed_form(x, t)) {
      ds.samples[i] = {x, eval_S_closed(p, x, t), eval_grad_S_closed(p, x, t)};
    } else {
      if (dim > 3) throw Unsupported("synthesize_dataset: no closed form here and dim > 3");
      const ForwardResult r = forward_solve(p, x, t);
      ds.samples[i] = {x, r.value, r.grad_estimate};
    }
  });
  ds.validate();
  return ds;
}

Eigen::RowVectorXd psi_targets(const Dataset& ds) {
  Eigen::RowVectorXd out(static_cast<Eigen::Index>(ds.samples.size()));
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const auto& s = ds.samples[i];
    out[static_cast<Eigen::Index>(i)] = 0.5 * s.x.squaredNorm() - ds.t * s.s_value;
  }
  return out;
}

Eigen::MatrixXd sample_matrix(const Dataset& ds) {
  Eigen::MatrixXd Y(static_cast<Eigen::Index>(ds.dim), static_cast<Eigen::Index>(ds.samples.size()));
  for (std::size_t i = 0; i < ds.samples.size(); ++i) Y.col(static_cast<Eigen::Index>(i)) = ds.samples[i].x;
  return Y;
}

TrainResult train_icnn(const IcnnConfig& net, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                       const TrainConfig& cfg, const StepObserver& observer) {
  cfg.validate();
  if (inputs.cols() == 0) throw InvalidArgument("train: empty dataset");
  if (targets.cols() != inputs.cols()) throw InvalidArgument("train: inputs and targets differ in count");
  TrainResult res{IcnnModel(net), {}, 0.0};
  IcnnModel& m = res.model;
  const auto N = static_cast<std::size_t>(inputs.cols());
  const std::size_t B = std::min(cfg.batch_size, N);
  const std::size_t per_epoch = N / B;
  const std::size_t total = cfg.steps();

  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(m.params().size());
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(m.params().size());
  const CounterRng shuffle_rng(mix64(cfg.seed ^ 0x5fu));
  std::vector<Eigen::Index> order;
  std::vector<Eigen::Index> batch(B);
  double epoch_sum = 0.0;
  std::size_t epoch_count = 0;
  double b1t = 1.0, b2t = 1.0;

  for (std::size_t step = 0; step < total; ++step) {
    const std::size_t slot = step % per_epoch;
    if (slot == 0) order = permutation(N, shuffle_rng.split(step / per_epoch));
    for (std::size_t i = 0; i < B; ++i) batch[i] = order[slot * B + i];
    const Eigen::MatrixXd Yb = inputs(Eigen::all, batch);
    const Eigen::MatrixXd Tb = targets(Eigen::all, batch);
    const TapeGradient g = param_gradient(m, Yb, Tb, cfg.loss, cfg.loss_target);
    if (!std::isfinite(g.loss) || g.loss > kDivergence || !g.d_params.allFinite()) {
      throw TrainingDiverged(static_cast<long>(step), g.loss);
    }
    const double lr = cfg.lr_at(step);
    b1t *= kBeta1;
    b2t *= kBeta2;
    m1 = kBeta1 * m1 + (1.0 - kBeta1) * g.d_params;
    m2 = kBeta2 * m2 + (1.0 - kBeta2) * g.d_params.cwiseAbs2();
    const double c1 = 1.0 / (1.0 - b1t), c2 = 1.0 / (1.0 - b2t);
    m.params().array() -= lr * (m1.array() * c1) / ((m2.array() * c2).sqrt() + kAdamEps);
    project_weights_inplace(m);
    if (observer) observer(step + 1, m);

    epoch_sum += g.loss;
    ++epoch_count;
    if (slot + 1 == per_epoch || step + 1 == total) {
      res.history.push_back({step + 1, lr, epoch_sum / static_cast<double>(epoch_count)});
      epoch_sum = 0.0;
      epoch_count = 0;
    }
  }
  res.final_loss = batch_loss(m, inputs, targets, cfg.loss, cfg.loss_target);
  return res;
}

namespace {
IcnnConfig net_config(const TrainConfig& cfg, std::size_t dim, std::uint64_t salt) {
  return IcnnConfig{dim, cfg.hidden, cfg.layers, cfg.beta, cfg.mu, mix64(cfg.seed ^ salt)};
}
}  // namespace

TrainResult train_first_lpn(const Dataset& ds, const TrainConfig& cfg) {
  ds.validate();
  if (ds.samples.empty()) throw InvalidArgument("train_first_lpn: empty dataset");
  const Eigen::MatrixXd Y = sample_matrix(ds);
  Eigen::MatrixXd T;
  if (cfg.loss_target == LossTarget::Value) {
    T = psi_targets(ds);
  } else {
    T.resize(Y.rows(), Y.cols());
    for (std::size_t i = 0; i < ds.samples.size(); ++i)
      T.col(static_cast<Eigen::Index>(i)) = ds.samples[i].prox_point(TimeParam(ds.t));
  }
  return train_icnn(net_config(cfg, ds.dim, 1), Y, T, cfg);
}

ConjugateDataset build_conjugate_dataset(const IcnnModel& psi_model, const Dataset& ds, const std::string& provenance) {
  ConjugateDataset c;
  c.provenance = provenance;
  const Eigen::MatrixXd Y = sample_matrix(ds);
  const Eigen::MatrixXd X = input_gradient_batch(psi_model, Y);
  const Eigen::RowVectorXd psi = forward_batch(psi_model, Y);
  for (Eigen::Index i = 0; i < Y.cols(); ++i) {
    c.x.push_back(X.col(i));
    c.y.push_back(Y.col(i));
    c.G.push_back(X.col(i).dot(Y.col(i)) - psi[i]);
  }
  return c;
}

TrainResult train_second_lpn(const ConjugateDataset& cds, const TrainConfig& cfg) {
  if (cds.x.empty() || cds.x.size() != cds.G.size()) throw InvalidArgument("train_second_lpn: empty or ragged dataset");
  const auto dim = static_cast<std::size_t>(cds.x.front().size());
  Eigen::MatrixXd X(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(cds.x.size()));
  Eigen::RowVectorXd G(static_cast<Eigen::Index>(cds.G.size()));
  for (std::size_t i = 0; i < cds.x.size(); ++i) {
    X.col(static_cast<Eigen::Index>(i)) = cds.x[i];
    G[static_cast<Eigen::Index>(i)] = cds.G[i];
  }
  TrainConfig c = cfg;
  c.loss_target = LossTarget::Value;
  return train_icnn(net_config(c, dim, 2), X, G, c);
}

void write_conjugate_dataset(std::ostream& os, const ConjugateDataset& c) {
  if (c.x.size() != c.G.size() || c.y.size() != c.G.size()) throw InvalidArgument("conjugate dataset: ragged");
  const std::size_t n = c.x.empty() ? 0 : static_cast<std::size_t>(c.x.front().size());
  os << "provenance," << c.provenance << "\n";
  std::vector<std::string> header;
  for (std::size_t j = 1; j <= n; ++j) header.push_back("y_" + std::to_string(j));
  for (std::size_t j = 1; j <= n; ++j) header.push_back("x_" + std::to_string(j));
  header.push_back("G");
  csv::write_row(os, header);
  std::vector<double> row(2 * n + 1);
  for (std::size_t k = 0; k < c.G.size(); ++k) {
    for (std::size_t j = 0; j < n; ++j) {
      row[j] = c.y[k][static_cast<Eigen::Index>(j)];
      row[n + j] = c.x[k][static_cast<Eigen::Index>(j)];
    }
    row[2 * n] = c.G[k];
    csv::write_row(os, row);
  }
}

ConjugateDataset read_conjugate_dataset(std::istream& is) {
  ConjugateDataset c;
  std::string line;
  if (!std::getline(is, line) || line.rfind("provenance,", 0) != 0)
    throw InvalidArgument("conjugate dataset: missing provenance line");
  c.provenance = line.substr(11);
  if (!std::getline(is, line)) throw InvalidArgument("conjugate dataset: missing header");
  const std::size_t cols = csv::split(line).size();
  if (cols < 3 || cols % 2 == 0) throw InvalidArgument("conjugate dataset: bad header");
  const auto n = static_cast<Eigen::Index>((cols - 1) / 2);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != cols) throw InvalidArgument("conjugate dataset: bad row");
    Point y(n), x(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      y[j] = csv::parse_double(f[static_cast<std::size_t>(j)]);
      x[j] = csv::parse_double(f[static_cast<std::size_t>(n + j)]);
    }
    c.y.push_back(std::move(y));
    c.x.push_back(std::move(x));
    c.G.push_back(csv::parse_double(f[cols - 1]));
  }
  return c;
}

void save_conjugate_dataset(const std::filesystem::path& path, const ConjugateDataset& c) {
  std::ofstream os(path);
  if (!os) throw DependencyMissing("cannot write " + path.string());
  write_conjugate_dataset(os, c);
  if (!os) throw Error("write failed: " + path.string());
}

ConjugateDataset load_conjugate_dataset(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DependencyMissing("conjugate dataset not found: " + path.string());
  return read_conjugate_dataset(is);
}

std::string model_id(const IcnnModel& m) {
  const IcnnConfig& c = m.config();
  std::uint64_t h = mix64(c.dim ^ mix64(c.hidden ^ mix64(c.layers)));
  h = mix64(h ^ std::bit_cast<std::uint64_t>(c.beta));
  h = mix64(h ^ std::bit_cast<std::uint64_t>(c.mu));
  for (Eigen::Index i = 0; i < m.params().size(); ++i) h = mix64(h ^ std::bit_cast<std::uint64_t>(m.params()[i]));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_loss_history(std::ostream& os, const std::vector<LossRecord>& history) {
  os << "step,lr,loss\n";
  for (const auto& r : history) csv::write_row(os, {std::to_string(r.step), csv::format(r.lr), csv::format(r.loss)});
}

}  // namespace hjprox

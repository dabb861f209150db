#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hjprox/dataset.hpp"
#include "hjprox/icnn.hpp"
#include "hjprox/priors.hpp"

namespace hjprox {

struct TrainConfig {
  double lr0 = 1e-3;
  double decay_factor = 0.1;
  std::size_t decay_every = 100000;
  std::size_t total_steps = 500000;
  std::size_t batch_size = 1024;
  LossKind loss = LossKind::MSE;
  LossTarget loss_target = LossTarget::Value;
  std::uint64_t seed = 0;
  /// Shrinks total_steps and decay_every by the same factor.
  std::optional<double> desk_scale;
  std::size_t hidden = 256;
  std::size_t layers = 2;
  double beta = 5.0;
  double mu = 0.0;

  void validate() const;
  /// total_steps after desk scaling.
  std::size_t steps() const;
  /// decay_every after desk scaling, at least 1.
  std::size_t decay_interval() const;
  /// lr0 * decay_factor^floor(step / decay_interval()).
  double lr_at(std::size_t step) const;
};

struct LossRecord {
  std::size_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
};

struct TrainResult {
  IcnnModel model;
  /// Mean minibatch loss over each epoch (one record per pass over the data).
  std::vector<LossRecord> history;
  /// Loss of the final model over the whole training set.
  double final_loss = 0.0;
};

/// N points uniform in [-a, a]^dim with closed-form S and grad S (numeric
/// Lax-Oleinik for priors without one, dim <= 3). Points within 1e-6 of the
/// known kink set are redrawn from the same per-index stream.
Dataset synthesize_dataset(const PriorSpec& p, std::size_t dim, TimeParam t, std::size_t N, double a,
                           std::uint64_t seed);

/// psi(x, t) = |x|^2/2 - t S(x, t) for every sample (1 x N).
Eigen::RowVectorXd psi_targets(const Dataset& ds);
/// Sample points as columns (dim x N).
Eigen::MatrixXd sample_matrix(const Dataset& ds);

/// Adam on the given inputs and targets with weight projection after every
/// step. Throws TrainingDiverged when a minibatch loss exceeds 1e6 or is not
/// finite.
/// Called after every optimizer step (projection included) with the step count.
using StepObserver = std::function<void(std::size_t, const IcnnModel&)>;

TrainResult train_icnn(const IcnnConfig& net, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                       const TrainConfig& cfg, const StepObserver& observer = {});

/// First network: regresses psi values at the samples (or, with loss target
/// Gradient, matches its input gradient to the proximal points).
TrainResult train_first_lpn(const Dataset& ds, const TrainConfig& cfg);

struct ConjugateDataset {
  /// x_k = grad psi_theta(y_k)
  std::vector<Point> x;
  /// G_k = <x_k, y_k> - psi_theta(y_k)
  std::vector<double> G;
  std::vector<Point> y;
  std::string provenance;
};

ConjugateDataset build_conjugate_dataset(const IcnnModel& psi_model, const Dataset& ds,
                                         const std::string& provenance = "");

/// First line `provenance,<id>`, then `y_1..y_n,x_1..x_n,G` rows under a
/// header.
void write_conjugate_dataset(std::ostream& os, const ConjugateDataset& c);
ConjugateDataset read_conjugate_dataset(std::istream& is);
void save_conjugate_dataset(const std::filesystem::path& path, const ConjugateDataset& c);
ConjugateDataset load_conjugate_dataset(const std::filesystem::path& path);

/// 16 hex digits hashing the architecture and parameters of a model.
std::string model_id(const IcnnModel& m);

/// Second network: regresses G_k at x_k. Always a value (MSE or L1) loss.
TrainResult train_second_lpn(const ConjugateDataset& cds, const TrainConfig& cfg);

/// Header `step,lr,loss`, one row per record.
void write_loss_history(std::ostream& os, const std::vector<LossRecord>& history);

}  // namespace hjprox

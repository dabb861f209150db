#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hjprox/core.hpp"

namespace hjprox {

struct IcnnConfig {
  std::size_t dim = 1;
  std::size_t hidden = 256;
  /// Number of hidden layers; the hidden-to-hidden weights W_1..W_{layers-1}
  /// are the constrained ones.
  std::size_t layers = 2;
  double beta = 5.0;
  /// Coefficient of the optional mu |y|^2 / 2 output term.
  double mu = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Input-convex network
///   z_0 = sp(H_0 y + b_0),  z_k = sp(W_k z_{k-1} + H_k y + b_k),
///   out = w_out . z_{L-1} + h_out . y + b_out + (mu/2)|y|^2,
/// with W_k >= 0 and w_out >= 0. Parameters live in one flat vector in the
/// order H_0, b_0, (W_k, H_k, b_k) for k = 1..L-1, w_out, h_out, b_out;
/// matrices are column-major.
class IcnnModel {
 public:
  IcnnModel() = default;
  /// Random initialisation from cfg.seed: H and b uniform in +-1/sqrt(fan_in),
  /// W the absolute value of the same, output head zero.
  explicit IcnnModel(const IcnnConfig& cfg);
  IcnnModel(const IcnnConfig& cfg, Eigen::VectorXd params);

  const IcnnConfig& config() const { return cfg_; }
  std::size_t dim() const { return cfg_.dim; }
  const Eigen::VectorXd& params() const { return params_; }
  Eigen::VectorXd& params() { return params_; }
  static std::size_t param_count(const IcnnConfig& cfg);

  using CMap = Eigen::Map<const Eigen::MatrixXd>;
  using Map = Eigen::Map<Eigen::MatrixXd>;
  CMap H(std::size_t k) const;
  CMap b(std::size_t k) const;
  /// k in 1..layers-1
  CMap W(std::size_t k) const;
  CMap w_out() const;
  CMap h_out() const;
  double b_out() const;
  Map W(std::size_t k);
  Map w_out();

 private:
  struct Offsets {
    std::vector<std::size_t> H, b, W;
    std::size_t w_out = 0, h_out = 0, b_out = 0, total = 0;
  };
  static Offsets layout(const IcnnConfig& cfg);

  IcnnConfig cfg_;
  Offsets off_;
  Eigen::VectorXd params_;
};

bool weights_nonnegative(const IcnnModel& m);
/// Clamps every constrained weight to max(w, 0).
IcnnModel project_weights(IcnnModel m);
void project_weights_inplace(IcnnModel& m);

double forward(const IcnnModel& m, const Point& y);
/// One output per column of Y (dim x B).
Eigen::RowVectorXd forward_batch(const IcnnModel& m, const Eigen::MatrixXd& Y);
Point input_gradient(const IcnnModel& m, const Point& y);
Eigen::MatrixXd input_gradient_batch(const IcnnModel& m, const Eigen::MatrixXd& Y);

enum class LossKind { MSE, L1 };
/// What the loss compares: the network value, or its input gradient.
enum class LossTarget { Value, Gradient };

LossKind loss_kind_from_string(const std::string& s);
LossTarget loss_target_from_string(const std::string& s);

struct TapeGradient {
  double loss = 0.0;
  /// Loss gradient with respect to the batch inputs (dim x B).
  Eigen::MatrixXd d_input;
  /// Loss gradient with respect to params(), same order.
  Eigen::VectorXd d_params;
};

/// Mean batch loss and its gradients. targets is 1 x B for Value and
/// dim x B for Gradient. MSE averages squared error over all target entries,
/// L1 the absolute error.
TapeGradient param_gradient(const IcnnModel& m, const Eigen::MatrixXd& Y, const Eigen::MatrixXd& targets,
                            LossKind loss, LossTarget target = LossTarget::Value);
/// Mean loss only (no tape).
double batch_loss(const IcnnModel& m, const Eigen::MatrixXd& Y, const Eigen::MatrixXd& targets, LossKind loss,
                  LossTarget target = LossTarget::Value);

/// Binary checkpoint: magic "HJPXICNN", format version, the config, the
/// parameter count and the parameters as little-endian IEEE-754 doubles.
void save_checkpoint(const std::filesystem::path& path, const IcnnModel& m);
IcnnModel load_checkpoint(const std::filesystem::path& path);

}  // namespace hjprox

#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "cogload/common.hpp"

namespace cogload {

// Feed-forward network: rectified-linear hidden layers, softmax output over
// the three classes. weights[l] has shape dims[l+1] x dims[l].
struct MlpModel {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  int input_dim() const {
    return weights.empty() ? 0 : static_cast<int>(weights.front().cols());
  }
  int output_dim() const {
    return weights.empty() ? 0 : static_cast<int>(weights.back().rows());
  }
  std::vector<int> layer_dims() const;

  void validate() const;
};

// Glorot-uniform initialization, per layer in +-sqrt(6/(fan_in+fan_out)).
MlpModel init_mlp(const std::vector<int>& layer_dims, std::uint64_t seed);

struct TrainSample {
  Eigen::VectorXd x;
  Label label = Label::Easy;
};

struct TrainConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  int batch_size = 64;
  int max_epochs = 200;
  std::uint64_t seed = 0;
  int patience = 20;  // early stop on validation accuracy, when provided
};

// Mini-batch SGD with momentum on mean cross-entropy; fixed seeded shuffle
// schedule, so results are bit-reproducible. Returns the best-validation
// model when a validation set is supplied, otherwise the final model.
MlpModel train_mlp(const std::vector<TrainSample>& train,
                   const std::vector<int>& layer_dims,
                   const TrainConfig& config,
                   const std::vector<TrainSample>& validation = {});

// Softmax class posteriors; entries in (0,1) summing to 1.
Eigen::Vector3d predict_proba(const MlpModel& model,
                              const Eigen::Ref<const Eigen::VectorXd>& x);

// Argmax with ties broken by lowest class index.
Label predict_label(const MlpModel& model,
                    const Eigen::Ref<const Eigen::VectorXd>& x);
Label argmax_label(const Eigen::Vector3d& proba);

// Mean cross-entropy over a batch, plus analytic parameter gradients laid
// out like the model. Exposed for the finite-difference checks.
struct MlpGradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};
std::pair<double, MlpGradients> loss_and_gradients(
    const MlpModel& model, const std::vector<TrainSample>& batch);

double accuracy(const MlpModel& model, const std::vector<TrainSample>& samples);

// JSON: {format_version, layer_dims, weights, biases, label_map}.
void save_mlp(const MlpModel& model, const std::filesystem::path& path,
              const std::string& config_hash = "");
MlpModel load_mlp(const std::filesystem::path& path,
                  std::string* config_hash = nullptr);

}  // namespace cogload

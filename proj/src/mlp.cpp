#include "cogload/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>

#include "json_util.hpp"

namespace cogload {

std::vector<int> MlpModel::layer_dims() const {
  std::vector<int> dims;
  if (weights.empty()) return dims;
  dims.push_back(static_cast<int>(weights.front().cols()));
  for (const auto& w : weights) dims.push_back(static_cast<int>(w.rows()));
  return dims;
}

void MlpModel::validate() const {
  if (weights.empty() || weights.size() != biases.size())
    throw DataError("mlp: empty or inconsistent parameter lists");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (biases[l].size() != weights[l].rows())
      throw DataError("mlp: bias/weight shape mismatch at layer " +
                      std::to_string(l));
    if (l > 0 && weights[l].cols() != weights[l - 1].rows())
      throw DataError("mlp: layer shape mismatch at layer " +
                      std::to_string(l));
    if (!weights[l].allFinite() || !biases[l].allFinite())
      throw DataError("mlp: non-finite parameters at layer " +
                      std::to_string(l));
  }
  if (output_dim() != kNumClasses)
    throw DataError("mlp: output layer must have " +
                    std::to_string(kNumClasses) + " units");
}

MlpModel init_mlp(const std::vector<int>& layer_dims, std::uint64_t seed) {
  if (layer_dims.size() < 2)
    throw ConfigError("mlp needs at least input and output layers");
  for (int d : layer_dims)
    if (d < 1) throw ConfigError("mlp layer dims must be positive");
  if (layer_dims.back() != kNumClasses)
    throw ConfigError("mlp output layer must have " +
                      std::to_string(kNumClasses) + " units");

  MlpModel model;
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const int fan_in = layer_dims[l];
    const int fan_out = layer_dims[l + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> unif(-limit, limit);
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) w(r, c) = unif(rng);
    model.weights.push_back(std::move(w));
    model.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return model;
}

namespace {

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const Eigen::ArrayXd shifted = logits.array() - logits.maxCoeff();
  const Eigen::ArrayXd e = shifted.exp();
  return (e / e.sum()).matrix();
}

// Forward pass keeping per-layer activations for backprop.
// activations[0] = input, activations.back() = softmax output.
std::vector<Eigen::VectorXd> forward(const MlpModel& model,
                                     const Eigen::Ref<const Eigen::VectorXd>& x) {
  std::vector<Eigen::VectorXd> activations;
  activations.reserve(model.weights.size() + 1);
  activations.push_back(x);
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    Eigen::VectorXd z = model.weights[l] * activations.back() + model.biases[l];
    if (l + 1 < model.weights.size())
      z = z.cwiseMax(0.0);
    else
      z = softmax(z);
    activations.push_back(std::move(z));
  }
  return activations;
}

}  // namespace

Eigen::Vector3d predict_proba(const MlpModel& model,
                              const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != model.input_dim())
    throw DataError("mlp: input dim " + std::to_string(x.size()) +
                    " does not match model dim " +
                    std::to_string(model.input_dim()));
  return forward(model, x).back();
}

Label argmax_label(const Eigen::Vector3d& proba) {
  int best = 0;
  for (int i = 1; i < kNumClasses; ++i)
    if (proba[i] > proba[best]) best = i;
  return label_from_index(best);
}

Label predict_label(const MlpModel& model,
                    const Eigen::Ref<const Eigen::VectorXd>& x) {
  return argmax_label(predict_proba(model, x));
}

std::pair<double, MlpGradients> loss_and_gradients(
    const MlpModel& model, const std::vector<TrainSample>& batch) {
  if (batch.empty()) throw DataError("mlp: empty batch");
  const std::size_t n_layers = model.weights.size();
  MlpGradients grads;
  grads.weights.reserve(n_layers);
  grads.biases.reserve(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    grads.weights.emplace_back(
        Eigen::MatrixXd::Zero(model.weights[l].rows(), model.weights[l].cols()));
    grads.biases.emplace_back(Eigen::VectorXd::Zero(model.biases[l].size()));
  }

  double loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (const TrainSample& sample : batch) {
    const auto activations = forward(model, sample.x);
    const Eigen::VectorXd& proba = activations.back();
    const int y = static_cast<int>(sample.label);
    loss -= std::log(std::max(proba[y], 1e-300)) * inv_n;

    // Softmax + cross-entropy collapses to (p - onehot) at the output.
    Eigen::VectorXd delta = proba;
    delta[y] -= 1.0;
    for (std::size_t l = n_layers; l-- > 0;) {
      grads.weights[l].noalias() +=
          inv_n * delta * activations[l].transpose();
      grads.biases[l] += inv_n * delta;
      if (l > 0) {
        delta = model.weights[l].transpose() * delta;
        // ReLU gate: activations[l] > 0 iff the pre-activation was > 0.
        delta = delta.cwiseProduct(
            (activations[l].array() > 0.0).cast<double>().matrix());
      }
    }
  }
  return {loss, std::move(grads)};
}

double accuracy(const MlpModel& model, const std::vector<TrainSample>& samples) {
  if (samples.empty()) return 0.0;
  int correct = 0;
  for (const TrainSample& s : samples)
    if (predict_label(model, s.x) == s.label) ++correct;
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

MlpModel train_mlp(const std::vector<TrainSample>& train,
                   const std::vector<int>& layer_dims,
                   const TrainConfig& config,
                   const std::vector<TrainSample>& validation) {
  if (train.empty()) throw DataError("mlp: empty training set");
  if (!(config.learning_rate > 0))
    throw ConfigError("mlp: learning rate must be positive");
  if (config.batch_size < 1) throw ConfigError("mlp: batch size must be >= 1");
  if (config.max_epochs < 0) throw ConfigError("mlp: max epochs must be >= 0");
  for (const TrainSample& s : train)
    if (s.x.size() != train.front().x.size())
      throw DataError("mlp: inconsistent i-vector dimensions in training set");

  {
    std::set<Label> distinct;
    for (const TrainSample& s : train) distinct.insert(s.label);
    if (distinct.size() < 2)
      std::fprintf(stderr,
                   "train_mlp: warning: training set has a single class\n");
  }

  MlpModel model = init_mlp(layer_dims, config.seed);
  MlpGradients velocity;
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    velocity.weights.emplace_back(Eigen::MatrixXd::Zero(
        model.weights[l].rows(), model.weights[l].cols()));
    velocity.biases.emplace_back(Eigen::VectorXd::Zero(model.biases[l].size()));
  }

  std::mt19937_64 rng(config.seed ^ 0x5DEECE66DULL);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  MlpModel best = model;
  double best_val = validation.empty() ? -1.0 : accuracy(model, validation);
  int epochs_since_best = 0;

  std::vector<TrainSample> batch;
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size();
         start += config.batch_size) {
      const std::size_t len =
          std::min<std::size_t>(config.batch_size, order.size() - start);
      batch.clear();
      for (std::size_t i = 0; i < len; ++i)
        batch.push_back(train[order[start + i]]);

      const auto [loss, grads] = loss_and_gradients(model, batch);
      if (!std::isfinite(loss))
        throw NumericalError("train_mlp: non-finite loss in epoch " +
                             std::to_string(epoch) + " at batch " +
                             std::to_string(start / config.batch_size));
      for (std::size_t l = 0; l < model.weights.size(); ++l) {
        velocity.weights[l] = config.momentum * velocity.weights[l] -
                              config.learning_rate * grads.weights[l];
        velocity.biases[l] = config.momentum * velocity.biases[l] -
                             config.learning_rate * grads.biases[l];
        model.weights[l] += velocity.weights[l];
        model.biases[l] += velocity.biases[l];
      }
    }

    if (!validation.empty()) {
      const double val = accuracy(model, validation);
      if (val > best_val) {
        best_val = val;
        best = model;
        epochs_since_best = 0;
      } else if (++epochs_since_best > config.patience) {
        break;
      }
    }
  }

  return validation.empty() ? model : best;
}

// --- serialization ---------------------------------------------------------------

void save_mlp(const MlpModel& model, const std::filesystem::path& path,
              const std::string& config_hash) {
  model.validate();
  nlohmann::json doc;
  doc["format_version"] = 1;
  doc["kind"] = "mlp";
  if (!config_hash.empty()) doc["config_hash"] = config_hash;
  doc["layer_dims"] = model.layer_dims();
  nlohmann::json weights = nlohmann::json::array();
  nlohmann::json biases = nlohmann::json::array();
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    weights.push_back(detail::matrix_to_json(model.weights[l]));
    biases.push_back(detail::vector_to_json(model.biases[l]));
  }
  doc["weights"] = std::move(weights);
  doc["biases"] = std::move(biases);
  doc["label_map"] = {{"0", label_name(Label::Easy)},
                      {"1", label_name(Label::Medium)},
                      {"2", label_name(Label::Difficult)}};
  detail::write_json_file(doc, path);
}

MlpModel load_mlp(const std::filesystem::path& path, std::string* config_hash) {
  const nlohmann::json doc = detail::load_json_file(path, "mlp model");
  if (doc.value("format_version", 0) != 1 || doc.value("kind", "") != "mlp")
    throw DataError(path.string() + ": not an mlp model file");
  MlpModel model;
  for (const auto& w : doc.at("weights"))
    model.weights.push_back(detail::matrix_from_json(w));
  for (const auto& b : doc.at("biases"))
    model.biases.push_back(detail::vector_from_json(b));
  model.validate();
  const auto dims = doc.at("layer_dims").get<std::vector<int>>();
  if (dims != model.layer_dims())
    throw DataError(path.string() + ": layer_dims disagree with payload");
  if (config_hash) *config_hash = doc.value("config_hash", "");
  return model;
}

}  // namespace cogload

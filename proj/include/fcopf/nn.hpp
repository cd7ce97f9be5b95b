#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fcopf/common.hpp"
#include "fcopf/dataset.hpp"
#include "fcopf/linalg.hpp"

namespace fcopf {

/// Dense layer in row-vector convention: z = x W + b, W is in x out.
struct DenseLayer {
  Matrix W;
  std::vector<double> b;

  std::size_t inputs() const { return W.rows(); }
  std::size_t outputs() const { return W.cols(); }
};

/// Per-coordinate affine map between raw and normalized values:
/// normalized = (raw - shift) / scale.
struct Affine {
  std::vector<double> shift;
  std::vector<double> scale;

  static Affine identity(std::size_t n);
  bool is_identity() const;
};

/// ReLU MLP. Hidden layers use ReLU, the last layer is affine.
struct MlpModel {
  std::vector<DenseLayer> layers;
  Affine input;   // raw features -> network inputs
  Affine output;  // raw labels -> network outputs
  std::string case_fingerprint;
  std::vector<std::string> feature_names;
  std::vector<std::string> contingencies;
  std::vector<double> feature_min;  // training-data range, raw units
  std::vector<double> feature_max;

  std::vector<std::size_t> dims() const;
  std::size_t input_dim() const { return layers.front().inputs(); }
  std::size_t output_dim() const { return layers.back().outputs(); }
  std::size_t hidden_neurons() const;

  void validate() const;            // shapes chain, scales positive
  void validate_predictor() const;  // plus exactly two outputs
  std::string fingerprint() const;
};

MlpModel make_model(const std::vector<std::size_t>& dims, std::uint64_t seed);

// Raw features in, raw labels out.
std::vector<double> forward(const MlpModel& model, std::span<const double> x);

struct Prediction {
  double nadir = 0.0;
  double rocof = 0.0;
};
Prediction predict(const MlpModel& model, std::span<const double> x);

// One row per sample. The parallel path splits rows across threads.
Matrix forward_batch(const MlpModel& model, const Matrix& x, Execution exec = Execution::parallel);

// Network without the affines; used on normalized data.
std::vector<double> forward_core(const MlpModel& model, std::span<const double> x);

// (1/n) sum over samples and output components of squared error.
double mse(const Matrix& predictions, const Matrix& labels);

struct Gradients {
  std::vector<DenseLayer> layers;
  double loss = 0.0;
};

/// Exact gradient of mse(forward_core(x), y) over the batch with respect to
/// every weight and bias. ReLU'(0) is taken as 0.
Gradients gradient(const MlpModel& model, const Matrix& x, const Matrix& y);

enum class Optimizer { adam, sgd_momentum };
const char* to_string(Optimizer opt);
Optimizer parse_optimizer(std::string_view text);

struct TrainConfig {
  std::vector<std::size_t> hidden{32, 32};
  int epochs = 500;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  double lr_decay = 1.0;  // multiplied into the rate after each epoch
  Optimizer optimizer = Optimizer::adam;
  double momentum = 0.9;
  int patience = 50;
  double validation_fraction = 0.1;  // carved from the rows passed to train()
  std::uint64_t seed = 1;

  void validate() const;
};

struct TrainHistory {
  std::vector<double> train_mse;       // normalized scale
  std::vector<double> validation_mse;
  int best_epoch = -1;
  bool stopped_early = false;
};

struct TrainResult {
  MlpModel model;
  TrainHistory history;
};

/// Fits a predictor on `rows`, holding out `validation_fraction` for early
/// stopping. Returns the parameters with the best validation loss.
TrainResult train(const std::vector<DatasetRow>& rows, const DatasetManifest& manifest, const TrainConfig& config);

struct Evaluation {
  double mae[2] = {0, 0};
  double max_error[2] = {0, 0};
  double percent[2] = {0, 0};  // mean |pred - label| / |label| * 100
  std::size_t rows = 0;
};

Evaluation evaluate(const MlpModel& model, const std::vector<DatasetRow>& rows);

/// Same function, with the input and output affines absorbed into the first
/// and last layers; the result has identity affines.
MlpModel fold_normalization(const MlpModel& model);

std::string model_to_json(const MlpModel& model);
MlpModel model_from_json(std::string_view text);
void save_model(const std::string& path, const MlpModel& model);
MlpModel load_model(const std::string& path);

}  // namespace fcopf

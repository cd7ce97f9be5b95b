#include "fcopf/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

namespace fcopf {

using nlohmann::json;

Affine Affine::identity(std::size_t n) { return {std::vector<double>(n, 0.0), std::vector<double>(n, 1.0)}; }

bool Affine::is_identity() const {
  for (std::size_t i = 0; i < shift.size(); ++i)
    if (shift[i] != 0.0 || scale[i] != 1.0) return false;
  return true;
}

std::vector<std::size_t> MlpModel::dims() const {
  std::vector<std::size_t> d;
  if (layers.empty()) return d;
  d.push_back(layers.front().inputs());
  for (const auto& l : layers) d.push_back(l.outputs());
  return d;
}

std::size_t MlpModel::hidden_neurons() const {
  std::size_t n = 0;
  for (std::size_t m = 0; m + 1 < layers.size(); ++m) n += layers[m].outputs();
  return n;
}

void MlpModel::validate() const {
  if (layers.empty()) throw Error(ErrorKind::invariant, "model", "no layers");
  for (std::size_t m = 0; m < layers.size(); ++m) {
    const auto& l = layers[m];
    const std::string where = "model.layers[" + std::to_string(m) + "]";
    if (l.inputs() == 0 || l.outputs() == 0) throw Error(ErrorKind::invariant, where, "empty layer");
    if (l.b.size() != l.outputs()) throw Error(ErrorKind::invariant, where, "bias length does not match W columns");
    if (m > 0 && l.inputs() != layers[m - 1].outputs())
      throw Error(ErrorKind::invariant, where, "W rows do not match previous layer width");
    for (double v : l.W.data())
      if (!std::isfinite(v)) throw Error(ErrorKind::invariant, where, "non-finite weight");
    for (double v : l.b)
      if (!std::isfinite(v)) throw Error(ErrorKind::invariant, where, "non-finite bias");
  }
  auto check_affine = [](const Affine& a, std::size_t n, const char* where) {
    if (a.shift.size() != n || a.scale.size() != n)
      throw Error(ErrorKind::invariant, where, "normalization length mismatch");
    for (double s : a.scale)
      if (!(s > 0) || !std::isfinite(s)) throw Error(ErrorKind::invariant, where, "scale must be positive");
  };
  check_affine(input, input_dim(), "model.input_normalization");
  check_affine(output, output_dim(), "model.output_normalization");
}

void MlpModel::validate_predictor() const {
  validate();
  if (output_dim() != 2)
    throw Error(ErrorKind::invariant, "model", "predictor must have exactly two outputs (nadir, rocof)");
}

std::string MlpModel::fingerprint() const { return fingerprint_of(model_to_json(*this)); }

MlpModel make_model(const std::vector<std::size_t>& dims, std::uint64_t seed) {
  if (dims.size() < 2) throw Error(ErrorKind::invariant, "make_model", "need at least input and output dims");
  Rng rng(seed);
  MlpModel model;
  for (std::size_t m = 0; m + 1 < dims.size(); ++m) {
    DenseLayer l{Matrix(dims[m], dims[m + 1]), std::vector<double>(dims[m + 1], 0.0)};
    const double r = std::sqrt(6.0 / static_cast<double>(dims[m]));
    for (double& w : l.W.data()) w = rng.uniform(-r, r);
    model.layers.push_back(std::move(l));
  }
  model.input = Affine::identity(dims.front());
  model.output = Affine::identity(dims.back());
  model.validate();
  return model;
}

namespace {

// z = x W + b, then ReLU unless last.
void apply_layer(const DenseLayer& l, const double* x, double* z, bool relu) {
  const std::size_t n_in = l.inputs(), n_out = l.outputs();
  std::copy(l.b.begin(), l.b.end(), z);
  for (std::size_t i = 0; i < n_in; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const double* w = &l.W.data()[i * n_out];
    for (std::size_t j = 0; j < n_out; ++j) z[j] += xi * w[j];
  }
  if (relu)
    for (std::size_t j = 0; j < n_out; ++j) z[j] = z[j] > 0.0 ? z[j] : 0.0;
}

std::size_t widest(const MlpModel& m) {
  std::size_t w = m.input_dim();
  for (const auto& l : m.layers) w = std::max(w, l.outputs());
  return w;
}

void core_into(const MlpModel& model, std::span<const double> x, std::vector<double>& a, std::vector<double>& b) {
  std::copy(x.begin(), x.end(), a.begin());
  for (std::size_t m = 0; m < model.layers.size(); ++m) {
    apply_layer(model.layers[m], a.data(), b.data(), m + 1 < model.layers.size());
    std::swap(a, b);
  }
}

void check_arity(const MlpModel& model, std::size_t n) {
  if (n != model.input_dim())
    throw Error(ErrorKind::mismatch, "forward",
                "input has " + std::to_string(n) + " features, model expects " + std::to_string(model.input_dim()));
}

void forward_row(const MlpModel& model, std::span<const double> x, std::span<double> out, std::vector<double>& a,
                 std::vector<double>& b) {
  for (std::size_t i = 0; i < x.size(); ++i) b[i] = (x[i] - model.input.shift[i]) / model.input.scale[i];
  core_into(model, std::span<const double>(b.data(), x.size()), a, b);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = a[k] * model.output.scale[k] + model.output.shift[k];
}

}  // namespace

std::vector<double> forward_core(const MlpModel& model, std::span<const double> x) {
  check_arity(model, x.size());
  std::vector<double> a(widest(model)), b(widest(model));
  core_into(model, x, a, b);
  a.resize(model.output_dim());
  return a;
}

std::vector<double> forward(const MlpModel& model, std::span<const double> x) {
  check_arity(model, x.size());
  std::vector<double> a(widest(model)), b(widest(model)), out(model.output_dim());
  forward_row(model, x, out, a, b);
  return out;
}

Prediction predict(const MlpModel& model, std::span<const double> x) {
  const auto y = forward(model, x);
  if (y.size() != 2) throw Error(ErrorKind::invariant, "predict", "model does not have two outputs");
  return {y[0], y[1]};
}

Matrix forward_batch(const MlpModel& model, const Matrix& x, Execution exec) {
  check_arity(model, x.cols());
  Matrix out(x.rows(), model.output_dim());
  const auto n = static_cast<std::ptrdiff_t>(x.rows());
  const std::size_t w = widest(model);
  if (exec == Execution::serial) {
    std::vector<double> a(w), b(w);
    for (std::ptrdiff_t r = 0; r < n; ++r) forward_row(model, x.row(r), out.row(r), a, b);
    return out;
  }
#pragma omp parallel
  {
    std::vector<double> a(w), b(w);
#pragma omp for schedule(static)
    for (std::ptrdiff_t r = 0; r < n; ++r) forward_row(model, x.row(r), out.row(r), a, b);
  }
  return out;
}

double mse(const Matrix& predictions, const Matrix& labels) {
  if (predictions.rows() != labels.rows() || predictions.cols() != labels.cols())
    throw Error(ErrorKind::mismatch, "mse", "prediction and label shapes differ");
  if (predictions.rows() == 0) throw Error(ErrorKind::invariant, "mse", "empty input");
  double s = 0.0;
  const auto& p = predictions.data();
  const auto& l = labels.data();
  for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] - l[i]) * (p[i] - l[i]);
  return s / static_cast<double>(predictions.rows());
}

Gradients gradient(const MlpModel& model, const Matrix& x, const Matrix& y) {
  const std::size_t n = x.rows(), L = model.layers.size();
  if (n == 0) throw Error(ErrorKind::invariant, "gradient", "empty batch");
  check_arity(model, x.cols());
  if (y.rows() != n || y.cols() != model.output_dim())
    throw Error(ErrorKind::mismatch, "gradient", "label shape does not match batch and model");

  Gradients g;
  for (const auto& l : model.layers) g.layers.push_back({Matrix(l.inputs(), l.outputs()), std::vector<double>(l.outputs())});

  // acts[0] = input, acts[m + 1] = output of layer m (post-ReLU for hidden).
  std::vector<std::vector<double>> acts(L + 1);
  acts[0].resize(model.input_dim());
  for (std::size_t m = 0; m < L; ++m) acts[m + 1].resize(model.layers[m].outputs());
  std::vector<double> delta, prev;
  const double inv_n = 1.0 / static_cast<double>(n);

  for (std::size_t r = 0; r < n; ++r) {
    std::copy(x.row(r).begin(), x.row(r).end(), acts[0].begin());
    for (std::size_t m = 0; m < L; ++m) apply_layer(model.layers[m], acts[m].data(), acts[m + 1].data(), m + 1 < L);

    delta.assign(model.output_dim(), 0.0);
    for (std::size_t k = 0; k < delta.size(); ++k) {
      const double e = acts[L][k] - y(r, k);
      g.loss += e * e * inv_n;
      delta[k] = 2.0 * e * inv_n;
    }
    for (std::size_t m = L; m-- > 0;) {
      const auto& layer = model.layers[m];
      auto& gl = g.layers[m];
      const std::size_t n_in = layer.inputs(), n_out = layer.outputs();
      for (std::size_t j = 0; j < n_out; ++j) gl.b[j] += delta[j];
      for (std::size_t i = 0; i < n_in; ++i) {
        const double ai = acts[m][i];
        if (ai == 0.0) continue;
        double* gw = &gl.W.data()[i * n_out];
        for (std::size_t j = 0; j < n_out; ++j) gw[j] += ai * delta[j];
      }
      if (m == 0) break;
      prev.assign(n_in, 0.0);
      for (std::size_t i = 0; i < n_in; ++i) {
        if (acts[m][i] <= 0.0) continue;  // ReLU'(z) = 0 for z <= 0
        const double* w = &layer.W.data()[i * n_out];
        double s = 0.0;
        for (std::size_t j = 0; j < n_out; ++j) s += w[j] * delta[j];
        prev[i] = s;
      }
      std::swap(delta, prev);
    }
  }
  return g;
}

const char* to_string(Optimizer opt) { return opt == Optimizer::adam ? "adam" : "sgd_momentum"; }

Optimizer parse_optimizer(std::string_view text) {
  if (text == "adam") return Optimizer::adam;
  if (text == "sgd_momentum") return Optimizer::sgd_momentum;
  throw Error(ErrorKind::schema, "optimizer", "unknown optimizer '" + std::string(text) + "'");
}

void TrainConfig::validate() const {
  if (hidden.empty()) throw Error(ErrorKind::invariant, "train.hidden", "need at least one hidden layer");
  for (auto h : hidden)
    if (h == 0) throw Error(ErrorKind::invariant, "train.hidden", "layer widths must be positive");
  if (epochs < 1) throw Error(ErrorKind::invariant, "train.epochs", "must be positive");
  if (batch_size < 1) throw Error(ErrorKind::invariant, "train.batch_size", "must be positive");
  if (!(learning_rate > 0)) throw Error(ErrorKind::invariant, "train.learning_rate", "must be positive");
  if (!(lr_decay > 0 && lr_decay <= 1)) throw Error(ErrorKind::invariant, "train.lr_decay", "must lie in (0, 1]");
  if (!(momentum >= 0 && momentum < 1)) throw Error(ErrorKind::invariant, "train.momentum", "must lie in [0, 1)");
  if (patience < 1) throw Error(ErrorKind::invariant, "train.patience", "must be positive");
  if (!(validation_fraction >= 0 && validation_fraction < 1))
    throw Error(ErrorKind::invariant, "train.validation_fraction", "must lie in [0, 1)");
}

namespace {

Affine fit_affine(const Matrix& data) {
  const std::size_t n = data.rows(), d = data.cols();
  Affine a{std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)};
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += data(r, j);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) var += (data(r, j) - mean) * (data(r, j) - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    a.shift[j] = mean;
    a.scale[j] = sd > 1e-12 * std::max(1.0, std::abs(mean)) ? sd : 1.0;
  }
  return a;
}

Matrix normalized(const Matrix& raw, const Affine& a) {
  Matrix out(raw.rows(), raw.cols());
  for (std::size_t r = 0; r < raw.rows(); ++r)
    for (std::size_t j = 0; j < raw.cols(); ++j) out(r, j) = (raw(r, j) - a.shift[j]) / a.scale[j];
  return out;
}

void to_matrices(const std::vector<DatasetRow>& rows, const std::vector<std::size_t>& idx, Matrix& x, Matrix& y) {
  const std::size_t d = rows[idx.front()].features.size();
  x = Matrix(idx.size(), d);
  y = Matrix(idx.size(), 2);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto& row = rows[idx[r]];
    if (row.features.size() != d) throw Error(ErrorKind::mismatch, "train", "rows have different arity");
    std::copy(row.features.begin(), row.features.end(), x.row(r).begin());
    y(r, 0) = row.nadir;
    y(r, 1) = row.rocof;
  }
}

double core_mse(const MlpModel& model, const Matrix& x, const Matrix& y) {
  MlpModel core = model;
  core.input = Affine::identity(model.input_dim());
  core.output = Affine::identity(model.output_dim());
  return mse(forward_batch(core, x, Execution::serial), y);
}

Matrix gather(const Matrix& m, std::span<const std::size_t> idx) {
  Matrix out(idx.size(), m.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) std::copy(m.row(idx[r]).begin(), m.row(idx[r]).end(), out.row(r).begin());
  return out;
}

struct OptimizerState {
  std::vector<std::vector<double>> m, v;  // per parameter block: W then b for each layer
  long step = 0;
};

void visit_blocks(MlpModel& model, Gradients& g, auto&& fn) {
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    fn(2 * l, model.layers[l].W.data(), g.layers[l].W.data());
    fn(2 * l + 1, model.layers[l].b, g.layers[l].b);
  }
}

}  // namespace

TrainResult train(const std::vector<DatasetRow>& rows, const DatasetManifest& manifest, const TrainConfig& config) {
  config.validate();
  if (rows.empty()) throw Error(ErrorKind::invariant, "train", "empty dataset");
  const std::size_t d = manifest.layout.arity();
  if (rows.front().features.size() != d)
    throw Error(ErrorKind::mismatch, "train",
                "rows have " + std::to_string(rows.front().features.size()) + " features, manifest declares " +
                    std::to_string(d));

  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(config.seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  std::size_t n_val = static_cast<std::size_t>(std::llround(config.validation_fraction * rows.size()));
  if (n_val >= rows.size()) n_val = rows.size() - 1;
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::vector<std::size_t> val_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  if (val_idx.empty()) val_idx = train_idx;
  if (config.batch_size > train_idx.size())
    throw Error(ErrorKind::invariant, "train.batch_size",
                "batch size " + std::to_string(config.batch_size) + " exceeds the " +
                    std::to_string(train_idx.size()) + " training rows");

  Matrix x_raw, y_raw, xv_raw, yv_raw;
  to_matrices(rows, train_idx, x_raw, y_raw);
  to_matrices(rows, val_idx, xv_raw, yv_raw);

  std::vector<std::size_t> dims{d};
  dims.insert(dims.end(), config.hidden.begin(), config.hidden.end());
  dims.push_back(2);
  MlpModel model = make_model(dims, splitmix64(config.seed));
  model.input = fit_affine(x_raw);
  model.output = fit_affine(y_raw);
  model.case_fingerprint = manifest.case_fingerprint;
  model.feature_names = manifest.layout.names;
  model.contingencies = manifest.layout.contingencies;
  model.feature_min.assign(d, 0.0);
  model.feature_max.assign(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    double lo = x_raw(0, j), hi = x_raw(0, j);
    for (std::size_t r = 1; r < x_raw.rows(); ++r) {
      lo = std::min(lo, x_raw(r, j));
      hi = std::max(hi, x_raw(r, j));
    }
    model.feature_min[j] = lo;
    model.feature_max[j] = hi;
  }

  const Matrix x = normalized(x_raw, model.input), y = normalized(y_raw, model.output);
  const Matrix xv = normalized(xv_raw, model.input), yv = normalized(yv_raw, model.output);

  OptimizerState state;
  for (const auto& l : model.layers) {
    state.m.emplace_back(l.W.data().size(), 0.0);
    state.m.emplace_back(l.b.size(), 0.0);
  }
  state.v = state.m;

  TrainResult result;
  MlpModel best = model;
  double best_val = core_mse(model, xv, yv);
  double lr = config.learning_rate;
  std::vector<std::size_t> perm(x.rows());
  std::iota(perm.begin(), perm.end(), 0);
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    for (std::size_t start = 0; start < perm.size(); start += config.batch_size) {
      const std::size_t stop = std::min(perm.size(), start + config.batch_size);
      const std::span<const std::size_t> idx(perm.data() + start, stop - start);
      Gradients g = gradient(model, gather(x, idx), gather(y, idx));
      ++state.step;
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
      visit_blocks(model, g, [&](std::size_t k, std::vector<double>& p, const std::vector<double>& gp) {
        auto& m = state.m[k];
        auto& v = state.v[k];
        for (std::size_t i = 0; i < p.size(); ++i) {
          if (config.optimizer == Optimizer::adam) {
            m[i] = beta1 * m[i] + (1 - beta1) * gp[i];
            v[i] = beta2 * v[i] + (1 - beta2) * gp[i] * gp[i];
            p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
          } else {
            m[i] = config.momentum * m[i] + gp[i];
            p[i] -= lr * m[i];
          }
        }
      });
    }
    lr *= config.lr_decay;

    const double tr = core_mse(model, x, y), va = core_mse(model, xv, yv);
    if (!std::isfinite(tr) || !std::isfinite(va))
      throw Error(ErrorKind::numerical, "train",
                  "loss diverged at epoch " + std::to_string(epoch + 1) + " (train " + format_double(tr) +
                      ", validation " + format_double(va) + "); lower the learning rate");
    result.history.train_mse.push_back(tr);
    result.history.validation_mse.push_back(va);
    if (va < best_val) {
      best_val = va;
      best = model;
      result.history.best_epoch = epoch;
    } else if (epoch - result.history.best_epoch >= config.patience) {
      result.history.stopped_early = true;
      break;
    }
  }
  result.model = std::move(best);
  return result;
}

Evaluation evaluate(const MlpModel& model, const std::vector<DatasetRow>& rows) {
  if (rows.empty()) throw Error(ErrorKind::invariant, "evaluate", "empty input");
  Evaluation e;
  e.rows = rows.size();
  std::size_t pct_count[2] = {0, 0};
  for (const auto& row : rows) {
    const auto p = forward(model, row.features);
    const double label[2] = {row.nadir, row.rocof};
    for (int k = 0; k < 2; ++k) {
      const double err = std::abs(p[k] - label[k]);
      e.mae[k] += err;
      e.max_error[k] = std::max(e.max_error[k], err);
      if (std::abs(label[k]) > 1e-12) {
        e.percent[k] += err / std::abs(label[k]) * 100.0;
        ++pct_count[k];
      }
    }
  }
  for (int k = 0; k < 2; ++k) {
    e.mae[k] /= static_cast<double>(rows.size());
    if (pct_count[k]) e.percent[k] /= static_cast<double>(pct_count[k]);
  }
  return e;
}

MlpModel fold_normalization(const MlpModel& model) {
  model.validate();
  MlpModel out = model;
  auto& first = out.layers.front();
  for (std::size_t i = 0; i < first.inputs(); ++i) {
    const double s = model.input.scale[i], mu = model.input.shift[i];
    for (std::size_t j = 0; j < first.outputs(); ++j) {
      const double w = model.layers.front().W(i, j);
      first.W(i, j) = w / s;
      first.b[j] -= mu / s * w;
    }
  }
  auto& last = out.layers.back();
  for (std::size_t j = 0; j < last.outputs(); ++j) {
    const double s = model.output.scale[j], mu = model.output.shift[j];
    for (std::size_t i = 0; i < last.inputs(); ++i) last.W(i, j) *= s;
    last.b[j] = last.b[j] * s + mu;
  }
  out.input = Affine::identity(model.input_dim());
  out.output = Affine::identity(model.output_dim());
  return out;
}

std::string model_to_json(const MlpModel& model) {
  json j;
  j["format"] = "fcopf-mlp";
  j["version"] = 1;
  j["dims"] = model.dims();
  json layers = json::array();
  for (const auto& l : model.layers) {
    json w = json::array();
    for (std::size_t r = 0; r < l.inputs(); ++r) w.push_back(std::vector<double>(l.W.row(r).begin(), l.W.row(r).end()));
    layers.push_back({{"W", w}, {"b", l.b}});
  }
  j["layers"] = layers;
  j["input_normalization"] = {{"shift", model.input.shift}, {"scale", model.input.scale}};
  j["output_normalization"] = {{"shift", model.output.shift}, {"scale", model.output.scale}};
  j["case_fingerprint"] = model.case_fingerprint;
  j["feature_names"] = model.feature_names;
  j["contingencies"] = model.contingencies;
  j["feature_min"] = model.feature_min;
  j["feature_max"] = model.feature_max;
  return j.dump(1);
}

MlpModel model_from_json(std::string_view text) {
  MlpModel model;
  try {
    const json j = json::parse(text);
    if (j.at("format") != "fcopf-mlp") throw Error(ErrorKind::schema, "model.format", "not a model file");
    const auto dims = j.at("dims").get<std::vector<std::size_t>>();
    const auto& layers = j.at("layers");
    if (dims.size() != layers.size() + 1) throw Error(ErrorKind::schema, "model.dims", "does not match layer count");
    for (std::size_t m = 0; m < layers.size(); ++m) {
      const auto w = layers[m].at("W").get<std::vector<std::vector<double>>>();
      DenseLayer l{Matrix(dims[m], dims[m + 1]), layers[m].at("b").get<std::vector<double>>()};
      if (w.size() != dims[m])
        throw Error(ErrorKind::schema, "model.layers[" + std::to_string(m) + "].W", "row count mismatch");
      for (std::size_t r = 0; r < w.size(); ++r) {
        if (w[r].size() != dims[m + 1])
          throw Error(ErrorKind::schema, "model.layers[" + std::to_string(m) + "].W", "column count mismatch");
        std::copy(w[r].begin(), w[r].end(), l.W.row(r).begin());
      }
      model.layers.push_back(std::move(l));
    }
    model.input.shift = j.at("input_normalization").at("shift").get<std::vector<double>>();
    model.input.scale = j.at("input_normalization").at("scale").get<std::vector<double>>();
    model.output.shift = j.at("output_normalization").at("shift").get<std::vector<double>>();
    model.output.scale = j.at("output_normalization").at("scale").get<std::vector<double>>();
    model.case_fingerprint = j.value("case_fingerprint", "");
    model.feature_names = j.value("feature_names", std::vector<std::string>{});
    model.contingencies = j.value("contingencies", std::vector<std::string>{});
    model.feature_min = j.value("feature_min", std::vector<double>{});
    model.feature_max = j.value("feature_max", std::vector<double>{});
  } catch (const json::exception& e) {
    throw Error(ErrorKind::schema, "model", e.what());
  }
  model.validate();
  return model;
}

void save_model(const std::string& path, const MlpModel& model) { write_file(path, model_to_json(model) + "\n"); }

MlpModel load_model(const std::string& path) {
  try {
    return model_from_json(read_file(path));
  } catch (const Error& e) {
    throw Error(e.kind(), path, e.what());
  }
}

}  // namespace fcopf

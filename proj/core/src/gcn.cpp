#include "prov/gcn.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "prov/errors.hpp"

namespace prov {

using nlohmann::json;

void GcnConfig::validate() const {
  for (std::size_t d : layer_dims) {
    if (d == 0) raise(Errc::bad_value, "layer dimensions must be positive");
  }
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
    raise(Errc::bad_value, "dropout_rate must be in [0, 1)");
  }
  if (learning_rate <= 0.0) {
    raise(Errc::bad_value, "learning_rate must be positive");
  }
  if (bn_eps <= 0.0) raise(Errc::bad_value, "bn_eps must be positive");
}

std::vector<Matrix*> GcnModel::trainable() {
  return {&w1, &bn1.gamma, &bn1.beta, &w2, &bn2.gamma, &bn2.beta, &w3};
}

std::vector<const Matrix*> GcnModel::trainable() const {
  return {&w1, &bn1.gamma, &bn1.beta, &w2, &bn2.gamma, &bn2.beta, &w3};
}

std::size_t GcnModel::trainable_size() const {
  std::size_t total = 0;
  for (const Matrix* p : trainable()) total += p->size();
  return total;
}

AdamState AdamState::like(const GcnModel& model) {
  AdamState state;
  for (const Matrix* p : model.trainable()) {
    state.m.emplace_back(p->rows(), p->cols());
    state.v.emplace_back(p->rows(), p->cols());
  }
  return state;
}

namespace {

Matrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix w(fan_in, fan_out);
  for (std::size_t i = 0; i < w.size(); ++i) {
    w.data()[i] = rng.uniform(-limit, limit);
  }
  return w;
}

BatchNorm make_bn(std::size_t channels) {
  BatchNorm bn;
  bn.gamma = Matrix(1, channels, 1.0);
  bn.beta = Matrix(1, channels, 0.0);
  bn.running_mean = Matrix(1, channels, 0.0);
  bn.running_var = Matrix(1, channels, 1.0);
  return bn;
}

// Train-mode batch norm: normalizes with batch statistics (biased
// variance) and records what backward needs.
Matrix bn_forward_train(const Matrix& z, const BatchNorm& bn, double eps,
                        BnCache& cache) {
  const std::size_t n = z.rows(), c = z.cols();
  cache.mean.assign(c, 0.0);
  cache.var.assign(c, 0.0);
  cache.inv_std.assign(c, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < c; ++j) cache.mean[j] += z(i, j);
  }
  for (std::size_t j = 0; j < c; ++j) cache.mean[j] /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const double d = z(i, j) - cache.mean[j];
      cache.var[j] += d * d;
    }
  }
  for (std::size_t j = 0; j < c; ++j) {
    cache.var[j] /= static_cast<double>(n);
    cache.inv_std[j] = 1.0 / std::sqrt(cache.var[j] + eps);
  }
  cache.xhat = Matrix(n, c);
  Matrix out(n, c);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const double xh = (z(i, j) - cache.mean[j]) * cache.inv_std[j];
      cache.xhat(i, j) = xh;
      out(i, j) = bn.gamma(0, j) * xh + bn.beta(0, j);
    }
  }
  return out;
}

Matrix bn_forward_eval(const Matrix& z, const BatchNorm& bn, double eps) {
  const std::size_t n = z.rows(), c = z.cols();
  Matrix out(n, c);
  for (std::size_t j = 0; j < c; ++j) {
    const double inv_std = 1.0 / std::sqrt(bn.running_var(0, j) + eps);
    const double mean = bn.running_mean(0, j);
    const double g = bn.gamma(0, j), b = bn.beta(0, j);
    for (std::size_t i = 0; i < n; ++i) {
      out(i, j) = g * (z(i, j) - mean) * inv_std + b;
    }
  }
  return out;
}

// dL/dz for y = gamma * xhat + beta with batch statistics; also fills
// dgamma/dbeta.
Matrix bn_backward(const Matrix& dy, const BatchNorm& bn, const BnCache& cache,
                   Matrix& dgamma, Matrix& dbeta) {
  const std::size_t n = dy.rows(), c = dy.cols();
  dgamma = Matrix(1, c);
  dbeta = Matrix(1, c);
  std::vector<double> sum_dxhat(c, 0.0), sum_dxhat_xhat(c, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const double dxh = dy(i, j) * bn.gamma(0, j);
      dgamma(0, j) += dy(i, j) * cache.xhat(i, j);
      dbeta(0, j) += dy(i, j);
      sum_dxhat[j] += dxh;
      sum_dxhat_xhat[j] += dxh * cache.xhat(i, j);
    }
  }
  Matrix dz(n, c);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const double dxh = dy(i, j) * bn.gamma(0, j);
      dz(i, j) = cache.inv_std[j] * inv_n *
                 (static_cast<double>(n) * dxh - sum_dxhat[j] -
                  cache.xhat(i, j) * sum_dxhat_xhat[j]);
    }
  }
  return dz;
}

void relu_inplace(Matrix& m) {
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m.data()[i] < 0.0) m.data()[i] = 0.0;
  }
}

// Inverted dropout: keep mask scaled by 1/keep at train time.
Matrix dropout_train(const Matrix& m, double rate, Rng& rng, Matrix& keep_out) {
  keep_out = Matrix(m.rows(), m.cols());
  Matrix out(m.rows(), m.cols());
  const double keep = 1.0 - rate;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const bool kept = rng.next_unit() >= rate;
    keep_out.data()[i] = kept ? 1.0 : 0.0;
    out.data()[i] = kept ? m.data()[i] / keep : 0.0;
  }
  return out;
}

}  // namespace

GcnModel init_model(const GcnConfig& config) {
  config.validate();
  GcnModel model;
  model.config = config;
  Rng rng(derive_seed(config.seed, "init"));
  const auto& d = config.layer_dims;
  model.w1 = glorot_uniform(d[0], d[1], rng);
  model.w2 = glorot_uniform(d[1], d[2], rng);
  model.w3 = glorot_uniform(d[2], d[3], rng);
  model.bn1 = make_bn(d[1]);
  model.bn2 = make_bn(d[2]);
  return model;
}

std::pair<Matrix, ForwardCache> forward(const GcnModel& model, const NormAdj& adj,
                                        const Matrix& x, RunMode mode,
                                        Rng* dropout_rng) {
  const auto& dims = model.config.layer_dims;
  if (x.cols() != dims[0]) {
    raise(Errc::shape_mismatch, "forward: input has " + std::to_string(x.cols()) +
                                    " columns, model expects " +
                                    std::to_string(dims[0]));
  }
  if (adj.n != x.rows()) {
    raise(Errc::shape_mismatch, "forward: operator size does not match input rows");
  }
  const double rate = model.config.dropout_rate;
  const bool train = (mode == RunMode::train);
  if (train && rate > 0.0 && dropout_rng == nullptr) {
    raise(Errc::bad_value, "forward: train mode with dropout needs an rng");
  }

  ForwardCache cache;
  cache.mode = mode;
  cache.adj = &adj;

  cache.p0 = spmm(adj, x);
  cache.z1 = matmul(cache.p0, model.w1);
  cache.b1 = train ? bn_forward_train(cache.z1, model.bn1, model.config.bn_eps, cache.bn1)
                   : bn_forward_eval(cache.z1, model.bn1, model.config.bn_eps);
  Matrix h1 = cache.b1;
  relu_inplace(h1);
  cache.d1 = (train && rate > 0.0) ? dropout_train(h1, rate, *dropout_rng, cache.keep1)
                                   : std::move(h1);

  cache.p1 = spmm(adj, cache.d1);
  cache.z2 = matmul(cache.p1, model.w2);
  cache.b2 = train ? bn_forward_train(cache.z2, model.bn2, model.config.bn_eps, cache.bn2)
                   : bn_forward_eval(cache.z2, model.bn2, model.config.bn_eps);
  Matrix h2 = cache.b2;
  relu_inplace(h2);
  cache.d2 = (train && rate > 0.0) ? dropout_train(h2, rate, *dropout_rng, cache.keep2)
                                   : std::move(h2);

  cache.p2 = spmm(adj, cache.d2);
  Matrix out = matmul(cache.p2, model.w3);
  return {std::move(out), std::move(cache)};
}

double mse_loss(const Matrix& pred, const Matrix& target,
                const std::vector<std::uint8_t>& mask) {
  if (!pred.same_shape(target)) {
    raise(Errc::shape_mismatch, "mse_loss: prediction and target shapes differ");
  }
  if (mask.size() != pred.rows()) {
    raise(Errc::length_mismatch, "mse_loss: mask length does not match rows");
  }
  std::size_t n = 0;
  double total = 0.0;
  for (std::size_t v = 0; v < pred.rows(); ++v) {
    if (!mask[v]) continue;
    ++n;
    double row = 0.0;
    for (std::size_t j = 0; j < pred.cols(); ++j) {
      const double r = pred(v, j) - target(v, j);
      row += r * r;
    }
    total += row;
  }
  if (n == 0) raise(Errc::empty_mask, "mse_loss: mask selects no nodes");
  return total / static_cast<double>(n);
}

Gradients backward(const GcnModel& model, const ForwardCache& cache,
                   const Matrix& target, const std::vector<std::uint8_t>& mask) {
  if (cache.mode != RunMode::train || cache.adj == nullptr) {
    raise(Errc::stale_cache, "backward: cache was not produced by a train forward");
  }
  const auto& dims = model.config.layer_dims;
  if (cache.p0.cols() != dims[0] || cache.z1.cols() != dims[1] ||
      cache.z2.cols() != dims[2]) {
    raise(Errc::stale_cache, "backward: cache shapes do not match the model");
  }
  if (mask.size() != cache.p0.rows()) {
    raise(Errc::length_mismatch, "backward: mask length does not match rows");
  }
  const NormAdj& adj = *cache.adj;
  const std::size_t n_rows = cache.p0.rows();
  const double rate = model.config.dropout_rate;
  const double keep = 1.0 - rate;

  std::size_t n_masked = 0;
  for (std::uint8_t m : mask) n_masked += m;
  if (n_masked == 0) raise(Errc::empty_mask, "backward: mask selects no nodes");

  // Recompute the prediction head: out = p2 * w3.
  Matrix out = matmul(cache.p2, model.w3);
  if (!out.same_shape(target)) {
    raise(Errc::shape_mismatch, "backward: target shape does not match output");
  }

  // dL/dout = 2/n * (out - target) on masked rows.
  Matrix dout(n_rows, out.cols());
  const double scale = 2.0 / static_cast<double>(n_masked);
  for (std::size_t v = 0; v < n_rows; ++v) {
    if (!mask[v]) continue;
    for (std::size_t j = 0; j < out.cols(); ++j) {
      dout(v, j) = scale * (out(v, j) - target(v, j));
    }
  }

  Matrix dw3 = matmul_tn(cache.p2, dout);
  Matrix dp2 = matmul_nt(dout, model.w3);
  Matrix dd2 = spmm(adj, dp2);  // adj is symmetric

  // Dropout and ReLU backward for layer 2.
  Matrix db2(n_rows, dims[2]);
  for (std::size_t i = 0; i < db2.size(); ++i) {
    double g = dd2.data()[i];
    if (rate > 0.0) g *= cache.keep2.data()[i] / keep;
    db2.data()[i] = (cache.b2.data()[i] > 0.0) ? g : 0.0;
  }
  Matrix dgamma2, dbeta2;
  Matrix dz2 = bn_backward(db2, model.bn2, cache.bn2, dgamma2, dbeta2);

  Matrix dw2 = matmul_tn(cache.p1, dz2);
  Matrix dp1 = matmul_nt(dz2, model.w2);
  Matrix dd1 = spmm(adj, dp1);

  Matrix db1(n_rows, dims[1]);
  for (std::size_t i = 0; i < db1.size(); ++i) {
    double g = dd1.data()[i];
    if (rate > 0.0) g *= cache.keep1.data()[i] / keep;
    db1.data()[i] = (cache.b1.data()[i] > 0.0) ? g : 0.0;
  }
  Matrix dgamma1, dbeta1;
  Matrix dz1 = bn_backward(db1, model.bn1, cache.bn1, dgamma1, dbeta1);

  Matrix dw1 = matmul_tn(cache.p0, dz1);

  Gradients grads;
  grads.tensors.push_back(std::move(dw1));
  grads.tensors.push_back(std::move(dgamma1));
  grads.tensors.push_back(std::move(dbeta1));
  grads.tensors.push_back(std::move(dw2));
  grads.tensors.push_back(std::move(dgamma2));
  grads.tensors.push_back(std::move(dbeta2));
  grads.tensors.push_back(std::move(dw3));
  return grads;
}

void adam_step(GcnModel& model, const Gradients& grads, AdamState& state,
               double learning_rate) {
  auto params = model.trainable();
  if (grads.tensors.size() != params.size() || state.m.size() != params.size()) {
    raise(Errc::length_mismatch, "adam_step: tensor counts differ");
  }
  const double b1 = model.config.adam_beta1;
  const double b2 = model.config.adam_beta2;
  const double eps = model.config.adam_eps;
  state.t += 1;
  const double bias1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double bias2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Matrix& p = *params[k];
    const Matrix& g = grads.tensors[k];
    if (!p.same_shape(g)) {
      raise(Errc::shape_mismatch, "adam_step: gradient shape mismatch");
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      double& m = state.m[k].data()[i];
      double& v = state.v[k].data()[i];
      const double gi = g.data()[i];
      m = b1 * m + (1.0 - b1) * gi;
      v = b2 * v + (1.0 - b2) * gi * gi;
      const double mhat = m / bias1;
      const double vhat = v / bias2;
      p.data()[i] -= learning_rate * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

void update_running_stats(GcnModel& model, const ForwardCache& cache) {
  if (cache.mode != RunMode::train) {
    raise(Errc::stale_cache, "update_running_stats: needs a train-mode cache");
  }
  const double m = model.config.bn_momentum;
  auto apply = [m](BatchNorm& bn, const BnCache& c) {
    for (std::size_t j = 0; j < bn.running_mean.cols(); ++j) {
      bn.running_mean(0, j) = (1.0 - m) * bn.running_mean(0, j) + m * c.mean[j];
      bn.running_var(0, j) = (1.0 - m) * bn.running_var(0, j) + m * c.var[j];
    }
  };
  apply(model.bn1, cache.bn1);
  apply(model.bn2, cache.bn2);
}

TrainResult train(GcnModel& model, const NormAdj& adj, const Matrix& x,
                  const Matrix& target, const SplitMasks& masks,
                  const GcnConfig& config) {
  TrainResult result;
  if (config.epochs == 0) return result;
  AdamState state = AdamState::like(model);
  Rng dropout_rng(derive_seed(config.seed, "dropout"));
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    auto [pred, cache] = forward(model, adj, x, RunMode::train, &dropout_rng);
    result.loss_history.push_back(mse_loss(pred, target, masks.train));
    Gradients grads = backward(model, cache, target, masks.train);
    update_running_stats(model, cache);
    adam_step(model, grads, state, config.learning_rate);
  }
  return result;
}

FlatParams flatten(const GcnModel& model) {
  FlatParams flat;
  auto params = model.trainable();
  flat.values.reserve(model.trainable_size());
  for (std::size_t k = 0; k < params.size(); ++k) {
    flat.names.emplace_back(kParamNames[k]);
    flat.shapes.push_back({params[k]->rows(), params[k]->cols()});
    flat.values.insert(flat.values.end(), params[k]->data(),
                       params[k]->data() + params[k]->size());
  }
  return flat;
}

void unflatten(const FlatParams& flat, GcnModel& model) {
  auto params = model.trainable();
  if (flat.names.size() != params.size() || flat.shapes.size() != params.size()) {
    raise(Errc::length_mismatch, "unflatten: tensor count mismatch");
  }
  std::size_t offset = 0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& shape = flat.shapes[k];
    if (shape[0] != params[k]->rows() || shape[1] != params[k]->cols()) {
      raise(Errc::length_mismatch, "unflatten: shape mismatch at " + flat.names[k]);
    }
    if (offset + params[k]->size() > flat.values.size()) {
      raise(Errc::length_mismatch, "unflatten: value vector too short");
    }
    std::copy(flat.values.begin() + static_cast<std::ptrdiff_t>(offset),
              flat.values.begin() + static_cast<std::ptrdiff_t>(offset + params[k]->size()),
              params[k]->data());
    offset += params[k]->size();
  }
  if (offset != flat.values.size()) {
    raise(Errc::length_mismatch, "unflatten: value vector too long");
  }
}

namespace {

json matrix_to_json(const Matrix& m) {
  json entry;
  entry["shape"] = {m.rows(), m.cols()};
  entry["data"] = std::vector<double>(m.data(), m.data() + m.size());
  return entry;
}

Matrix matrix_from_json(const json& entry) {
  const auto shape = entry.at("shape").get<std::array<std::size_t, 2>>();
  const auto data = entry.at("data").get<std::vector<double>>();
  if (data.size() != shape[0] * shape[1]) {
    raise(Errc::bad_value, "checkpoint tensor size does not match its shape");
  }
  Matrix m(shape[0], shape[1]);
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

json config_to_json(const GcnConfig& c) {
  return json{{"layer_dims", c.layer_dims},
              {"dropout_rate", c.dropout_rate},
              {"bn_eps", c.bn_eps},
              {"bn_momentum", c.bn_momentum},
              {"learning_rate", c.learning_rate},
              {"adam_beta1", c.adam_beta1},
              {"adam_beta2", c.adam_beta2},
              {"adam_eps", c.adam_eps},
              {"epochs", c.epochs},
              {"seed", c.seed}};
}

GcnConfig config_from_json(const json& j) {
  GcnConfig c;
  c.layer_dims = j.at("layer_dims").get<std::array<std::size_t, 4>>();
  c.dropout_rate = j.value("dropout_rate", c.dropout_rate);
  c.bn_eps = j.value("bn_eps", c.bn_eps);
  c.bn_momentum = j.value("bn_momentum", c.bn_momentum);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
  c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
  c.adam_eps = j.value("adam_eps", c.adam_eps);
  c.epochs = j.value("epochs", c.epochs);
  c.seed = j.value("seed", c.seed);
  return c;
}

}  // namespace

std::string checkpoint_to_json(const GcnModel& model) {
  json doc;
  doc["version"] = 1;
  doc["config"] = config_to_json(model.config);
  json params;
  auto tensors = model.trainable();
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    params[kParamNames[k]] = matrix_to_json(*tensors[k]);
  }
  doc["params"] = std::move(params);
  doc["bn_running"] = {{"bn1.mean", matrix_to_json(model.bn1.running_mean)},
                       {"bn1.var", matrix_to_json(model.bn1.running_var)},
                       {"bn2.mean", matrix_to_json(model.bn2.running_mean)},
                       {"bn2.var", matrix_to_json(model.bn2.running_var)}};
  return doc.dump();
}

GcnModel checkpoint_from_json(const std::string& text) {
  json doc = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) {
    raise(Errc::malformed_json, "checkpoint is not a JSON object");
  }
  if (doc.value("version", 0) != 1) {
    raise(Errc::bad_value, "unsupported checkpoint version");
  }
  GcnModel model;
  model.config = config_from_json(doc.at("config"));
  const auto& params = doc.at("params");
  model.w1 = matrix_from_json(params.at("w1"));
  model.w2 = matrix_from_json(params.at("w2"));
  model.w3 = matrix_from_json(params.at("w3"));
  model.bn1.gamma = matrix_from_json(params.at("bn1.gamma"));
  model.bn1.beta = matrix_from_json(params.at("bn1.beta"));
  model.bn2.gamma = matrix_from_json(params.at("bn2.gamma"));
  model.bn2.beta = matrix_from_json(params.at("bn2.beta"));
  const auto& running = doc.at("bn_running");
  model.bn1.running_mean = matrix_from_json(running.at("bn1.mean"));
  model.bn1.running_var = matrix_from_json(running.at("bn1.var"));
  model.bn2.running_mean = matrix_from_json(running.at("bn2.mean"));
  model.bn2.running_var = matrix_from_json(running.at("bn2.var"));
  return model;
}

void save_checkpoint(const GcnModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) raise(Errc::io_failure, "cannot open " + path + " for writing");
  out << checkpoint_to_json(model) << '\n';
}

GcnModel load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::io_failure, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_json(ss.str());
}

}  // namespace prov

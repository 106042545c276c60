#include "qst/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "qst/rng.hpp"

namespace qst {

using nlohmann::json;

void LayerSpec::validate() const {
  if (sizes.size() < 2) throw ValidationError("layer spec needs >= 2 sizes");
  for (int s : sizes)
    if (s < 1) throw ValidationError("layer sizes must be positive");
}

LayerSpec ModelParams::layer_spec() const {
  LayerSpec spec;
  if (weights.empty()) return spec;
  spec.sizes.push_back(static_cast<int>(weights[0].cols()));
  for (const auto& w : weights) spec.sizes.push_back(static_cast<int>(w.rows()));
  return spec;
}

AdamState AdamState::init(const ModelParams& params, double lr) {
  AdamState state;
  state.lr = lr;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    state.m_w.push_back(Eigen::MatrixXd::Zero(params.weights[l].rows(),
                                              params.weights[l].cols()));
    state.v_w.push_back(state.m_w.back());
    state.m_b.push_back(Eigen::VectorXd::Zero(params.biases[l].size()));
    state.v_b.push_back(state.m_b.back());
  }
  return state;
}

ModelParams init_params(const LayerSpec& spec, std::uint64_t seed) {
  spec.validate();
  ModelParams params;
  SplitMix64 rng(seed);
  for (int l = 0; l < spec.n_layers(); ++l) {
    const int fan_in = spec.sizes[static_cast<std::size_t>(l)];
    const int fan_out = spec.sizes[static_cast<std::size_t>(l) + 1];
    const double limit = std::sqrt(6.0 / fan_in); // uniform with var 2/fan_in
    Eigen::MatrixXd w(fan_out, fan_in);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        w(i, j) = rng.next_uniform(-limit, limit);
    params.weights.push_back(std::move(w));
    params.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return params;
}

Eigen::MatrixXd forward(const ModelParams& params, const Eigen::MatrixXd& x,
                        ForwardCache* cache) {
  if (params.weights.empty()) throw DimensionError("empty model");
  if (x.cols() != params.weights[0].cols())
    throw DimensionError("input width does not match first layer");
  const std::size_t n_layers = params.weights.size();
  Eigen::MatrixXd a = x;
  for (std::size_t l = 0; l < n_layers; ++l) {
    Eigen::MatrixXd z = a * params.weights[l].transpose();
    z.rowwise() += params.biases[l].transpose();
    if (cache) cache->pre.push_back(z);
    a = (l + 1 < n_layers) ? z.cwiseMax(0.0) : std::move(z);
  }
  return a;
}

Eigen::VectorXd forward(const ModelParams& params, const Eigen::VectorXd& x) {
  return forward(params, Eigen::MatrixXd(x.transpose()), nullptr).row(0);
}

std::pair<double, Eigen::VectorXd> loss_cosine(const Eigen::VectorXd& y_pred,
                                               const Eigen::VectorXd& y_true) {
  if (y_pred.size() != y_true.size())
    throw DimensionError("cosine loss inputs differ in length");
  const double np = y_pred.norm();
  const double nt = y_true.norm();
  if (np == 0.0 || nt == 0.0)
    throw ZeroNormError("cosine loss undefined for zero vector");
  const double cos = y_pred.dot(y_true) / (np * nt);
  Eigen::VectorXd grad = -(y_true / (np * nt) - cos * y_pred / (np * np));
  return {-cos, std::move(grad)};
}

std::pair<double, Eigen::MatrixXd> loss_cosine_batch(const Eigen::MatrixXd& y_pred,
                                                     const Eigen::MatrixXd& y_true) {
  if (y_pred.rows() != y_true.rows() || y_pred.cols() != y_true.cols())
    throw DimensionError("cosine loss batches differ in shape");
  const double inv_n = 1.0 / static_cast<double>(y_pred.rows());
  double total = 0.0;
  Eigen::MatrixXd grad(y_pred.rows(), y_pred.cols());
  for (Eigen::Index r = 0; r < y_pred.rows(); ++r) {
    auto [loss, g] = loss_cosine(y_pred.row(r).transpose(), y_true.row(r).transpose());
    total += loss;
    grad.row(r) = g.transpose() * inv_n;
  }
  return {total * inv_n, std::move(grad)};
}

Gradients backward(const ModelParams& params, const ForwardCache& cache,
                   const Eigen::MatrixXd& x, const Eigen::MatrixXd& grad_output) {
  const std::size_t n_layers = params.weights.size();
  if (cache.pre.size() != n_layers)
    throw DimensionError("cache does not match model depth");
  Gradients grads;
  grads.weights.resize(n_layers);
  grads.biases.resize(n_layers);

  Eigen::MatrixXd g = grad_output;
  for (std::size_t l = n_layers; l-- > 0;) {
    const Eigen::MatrixXd a_in =
        l == 0 ? x : Eigen::MatrixXd(cache.pre[l - 1].cwiseMax(0.0));
    grads.weights[l] = g.transpose() * a_in;
    grads.biases[l] = g.colwise().sum().transpose();
    if (l > 0)
      g = (g * params.weights[l]).array() *
          (cache.pre[l - 1].array() > 0.0).cast<double>();
  }
  return grads;
}

void adam_step(ModelParams& params, const Gradients& grads, AdamState& state) {
  if (grads.weights.size() != params.weights.size())
    throw DimensionError("gradient shape does not match parameters");
  for (std::size_t l = 0; l < grads.weights.size(); ++l)
    if (!grads.weights[l].allFinite() || !grads.biases[l].allFinite())
      throw NumericalError("non-finite gradient in layer " + std::to_string(l));

  state.step += 1;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  auto update = [&](auto& theta, const auto& g, auto& m, auto& v) {
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.array().square().matrix();
    theta.array() -=
        state.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + state.epsilon);
  };
  for (std::size_t l = 0; l < grads.weights.size(); ++l) {
    update(params.weights[l], grads.weights[l], state.m_w[l], state.v_w[l]);
    update(params.biases[l], grads.biases[l], state.m_b[l], state.v_b[l]);
  }
}

TrainResult train(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                  const TrainConfig& config) {
  config.layer_spec.validate();
  if (inputs.rows() == 0) throw ValidationError("empty training set");
  if (inputs.rows() != targets.rows())
    throw DimensionError("inputs and targets row counts differ");
  if (inputs.cols() != config.layer_spec.input_dim() ||
      targets.cols() != config.layer_spec.output_dim())
    throw DimensionError("dataset dimensions do not match layer spec");
  if (config.epochs < 1 || config.batch_size < 1)
    throw ValidationError("epochs and batch_size must be >= 1");

  const Eigen::Index n = inputs.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  SplitMix64 shuffle_rng(mix_seed(config.seed, 0x5bff1eULL));
  auto shuffle = [&](std::vector<Eigen::Index>& v) {
    for (std::size_t i = v.size(); i > 1; --i)
      std::swap(v[i - 1], v[shuffle_rng.next_u64() % i]);
  };
  shuffle(order);

  const Eigen::Index n_val = static_cast<Eigen::Index>(
      config.validation_fraction * static_cast<double>(n));
  const Eigen::Index n_train = n - n_val;
  if (n_train < 1) throw ValidationError("validation fraction leaves no training rows");
  std::vector<Eigen::Index> train_idx(order.begin(), order.begin() + n_train);
  Eigen::MatrixXd val_x(n_val, inputs.cols()), val_y(n_val, targets.cols());
  for (Eigen::Index i = 0; i < n_val; ++i) {
    val_x.row(i) = inputs.row(order[static_cast<std::size_t>(n_train + i)]);
    val_y.row(i) = targets.row(order[static_cast<std::size_t>(n_train + i)]);
  }

  TrainResult result;
  result.params = init_params(config.layer_spec, mix_seed(config.seed, 0x1717ULL));
  AdamState adam = AdamState::init(result.params, config.lr);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.shuffle_each_epoch && epoch > 0) shuffle(train_idx);
    double epoch_loss = 0.0;
    for (Eigen::Index start = 0; start < n_train; start += config.batch_size) {
      const Eigen::Index bs = std::min<Eigen::Index>(config.batch_size, n_train - start);
      Eigen::MatrixXd bx(bs, inputs.cols()), by(bs, targets.cols());
      for (Eigen::Index i = 0; i < bs; ++i) {
        bx.row(i) = inputs.row(train_idx[static_cast<std::size_t>(start + i)]);
        by.row(i) = targets.row(train_idx[static_cast<std::size_t>(start + i)]);
      }
      ForwardCache cache;
      const Eigen::MatrixXd y = forward(result.params, bx, &cache);
      auto [loss, grad] = loss_cosine_batch(y, by);
      if (!std::isfinite(loss))
        throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) +
                             ", batch offset " + std::to_string(start));
      adam_step(result.params, backward(result.params, cache, bx, grad), adam);
      epoch_loss += loss * static_cast<double>(bs);
    }
    const double train_loss = epoch_loss / static_cast<double>(n_train);
    double val_loss = train_loss;
    if (n_val > 0)
      val_loss = loss_cosine_batch(forward(result.params, val_x, nullptr), val_y).first;
    result.history.push_back(EpochStats{train_loss, val_loss});
  }
  return result;
}

namespace {

constexpr char kMagic[8] = {'Q', 'S', 'T', 'N', 'N', '\x00', '\x01', '\x00'};

void append_f64(std::string& out, const double* data, std::size_t count) {
  // Little-endian host assumed; raw float64 payload.
  out.append(reinterpret_cast<const char*>(data), count * sizeof(double));
}

} // namespace

void save_checkpoint(const ModelParams& params, const std::string& path,
                     const std::string& meta_json) {
  const LayerSpec spec = params.layer_spec();
  spec.validate();
  json header{{"version", 1}, {"sizes", spec.sizes}};
  try {
    header["meta"] = json::parse(meta_json);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("checkpoint meta is not valid JSON: ") + e.what());
  }
  const std::string header_str = header.dump();

  std::string blob(kMagic, sizeof(kMagic));
  const std::uint32_t hlen = static_cast<std::uint32_t>(header_str.size());
  blob.append(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  blob += header_str;
  std::vector<double> row;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    const Eigen::MatrixXd& w = params.weights[l];
    row.assign(static_cast<std::size_t>(w.size()), 0.0);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        row[static_cast<std::size_t>(i * w.cols() + j)] = w(i, j);
    append_f64(blob, row.data(), row.size());
    append_f64(blob, params.biases[l].data(),
               static_cast<std::size_t>(params.biases[l].size()));
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw Error("write failed for " + path);
}

std::pair<ModelParams, std::string> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string blob = buf.str();

  if (blob.size() < sizeof(kMagic) + sizeof(std::uint32_t))
    throw TruncatedError("checkpoint shorter than fixed prefix");
  if (std::memcmp(blob.data(), kMagic, sizeof(kMagic)) != 0)
    throw MagicError("bad checkpoint magic");
  std::uint32_t hlen;
  std::memcpy(&hlen, blob.data() + sizeof(kMagic), sizeof(hlen));
  std::size_t offset = sizeof(kMagic) + sizeof(hlen);
  if (blob.size() < offset + hlen)
    throw TruncatedError("checkpoint header truncated");

  json header;
  try {
    header = json::parse(blob.substr(offset, hlen));
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed checkpoint header: ") + e.what());
  }
  if (header.at("version").get<int>() != 1)
    throw VersionError("unsupported checkpoint version");
  LayerSpec spec;
  spec.sizes = header.at("sizes").get<std::vector<int>>();
  spec.validate();
  offset += hlen;

  std::size_t expected = 0;
  for (int l = 0; l < spec.n_layers(); ++l)
    expected += static_cast<std::size_t>(spec.sizes[static_cast<std::size_t>(l)] + 1) *
                static_cast<std::size_t>(spec.sizes[static_cast<std::size_t>(l) + 1]);
  const std::size_t payload = blob.size() - offset;
  if (payload < expected * sizeof(double))
    throw TruncatedError("checkpoint payload truncated");
  if (payload > expected * sizeof(double))
    throw ShapeError("checkpoint payload longer than header shapes imply");

  ModelParams params;
  const char* p = blob.data() + offset;
  for (int l = 0; l < spec.n_layers(); ++l) {
    const int in_dim = spec.sizes[static_cast<std::size_t>(l)];
    const int out_dim = spec.sizes[static_cast<std::size_t>(l) + 1];
    Eigen::MatrixXd w(out_dim, in_dim);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        std::memcpy(&w(i, j), p, sizeof(double));
        p += sizeof(double);
      }
    Eigen::VectorXd b(out_dim);
    std::memcpy(b.data(), p, static_cast<std::size_t>(out_dim) * sizeof(double));
    p += static_cast<std::size_t>(out_dim) * sizeof(double);
    params.weights.push_back(std::move(w));
    params.biases.push_back(std::move(b));
  }
  return {std::move(params), header.at("meta").dump()};
}

} // namespace qst

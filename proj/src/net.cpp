#include "optimfkd/net.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "optimfkd/errors.hpp"
#include "net_json.hpp"

namespace optimfkd {

using nlohmann::json;

std::vector<int> NetParams::layer_sizes() const {
  std::vector<int> sizes;
  sizes.push_back(input_size());
  for (const Eigen::MatrixXd& w : weights) sizes.push_back(static_cast<int>(w.rows()));
  return sizes;
}

GradBundle GradBundle::zeros_like(const NetParams& p) {
  GradBundle g;
  for (int l = 0; l < p.num_layers(); ++l) {
    g.d_weights.push_back(Eigen::MatrixXd::Zero(p.weights[l].rows(), p.weights[l].cols()));
    g.d_biases.push_back(Eigen::VectorXd::Zero(p.biases[l].size()));
  }
  return g;
}

void GradBundle::add_params(const GradBundle& other) {
  for (std::size_t l = 0; l < d_weights.size(); ++l) {
    d_weights[l] += other.d_weights[l];
    d_biases[l] += other.d_biases[l];
  }
}

void GradBundle::scale_params(double s) {
  for (std::size_t l = 0; l < d_weights.size(); ++l) {
    d_weights[l] *= s;
    d_biases[l] *= s;
  }
}

AdamState AdamState::zeros_like(const NetParams& p, double lr_) {
  AdamState st;
  st.lr = lr_;
  for (int l = 0; l < p.num_layers(); ++l) {
    st.m_w.push_back(Eigen::MatrixXd::Zero(p.weights[l].rows(), p.weights[l].cols()));
    st.v_w.push_back(Eigen::MatrixXd::Zero(p.weights[l].rows(), p.weights[l].cols()));
    st.m_b.push_back(Eigen::VectorXd::Zero(p.biases[l].size()));
    st.v_b.push_back(Eigen::VectorXd::Zero(p.biases[l].size()));
  }
  return st;
}

NetParams net_init(std::uint64_t seed, const std::vector<int>& layer_sizes) {
  if (layer_sizes.size() < 2)
    throw std::invalid_argument("net_init: need at least input and output sizes");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  NetParams p;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const int in = layer_sizes[l];
    const int out = layer_sizes[l + 1];
    if (in < 1 || out < 1) throw std::invalid_argument("net_init: bad layer size");
    const double std_dev = std::sqrt(2.0 / in);
    Eigen::MatrixXd w(out, in);
    for (int r = 0; r < out; ++r)          // fixed row-major draw order
      for (int c = 0; c < in; ++c) w(r, c) = std_dev * gauss(rng);
    p.weights.push_back(std::move(w));
    p.biases.push_back(Eigen::VectorXd::Zero(out));
  }
  return p;
}

Eigen::MatrixXd net_forward(const NetParams& params, const Eigen::MatrixXd& x,
                            ForwardCache* cache) {
  if (x.rows() != params.input_size())
    throw std::invalid_argument("net_forward: input size mismatch");
  if (cache != nullptr) {
    cache->input = x;
    cache->pre.clear();
  }
  Eigen::MatrixXd a = x;
  const int L = params.num_layers();
  for (int l = 0; l < L; ++l) {
    Eigen::MatrixXd z = (params.weights[l] * a).colwise() + params.biases[l];
    if (cache != nullptr) cache->pre.push_back(z);
    a = (l + 1 < L) ? z.cwiseMax(0.0) : std::move(z);
  }
  return a;
}

GradBundle net_backward(const NetParams& params, const ForwardCache& cache,
                        const Eigen::MatrixXd& out_grad) {
  const int L = params.num_layers();
  if (static_cast<int>(cache.pre.size()) != L ||
      out_grad.rows() != params.output_size() ||
      out_grad.cols() != cache.input.cols())
    throw std::invalid_argument("net_backward: cache/out_grad shape mismatch");
  GradBundle g;
  g.d_weights.resize(L);
  g.d_biases.resize(L);
  Eigen::MatrixXd delta = out_grad;
  for (int l = L - 1; l >= 0; --l) {
    const Eigen::MatrixXd a_prev =
        (l == 0) ? cache.input : cache.pre[l - 1].cwiseMax(0.0);
    g.d_weights[l] = delta * a_prev.transpose();
    g.d_biases[l] = delta.rowwise().sum();
    delta = params.weights[l].transpose() * delta;
    if (l > 0)
      delta = (cache.pre[l - 1].array() > 0.0).cast<double>().matrix().cwiseProduct(delta);
  }
  g.d_input = std::move(delta);
  return g;
}

Eigen::MatrixXd net_input_jacobian(const NetParams& params,
                                   const ForwardCache& cache) {
  if (cache.input.cols() != 1)
    throw std::invalid_argument("net_input_jacobian: single-sample cache required");
  const int L = params.num_layers();
  Eigen::MatrixXd j = params.weights[0];
  for (int l = 1; l < L; ++l) {
    const Eigen::ArrayXd mask = (cache.pre[l - 1].col(0).array() > 0.0).cast<double>();
    j = params.weights[l] * (j.array().colwise() * mask).matrix();
  }
  return j;
}

void adam_step(NetParams& params, const GradBundle& grads, AdamState& state) {
  state.step += 1;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (int l = 0; l < params.num_layers(); ++l) {
    state.m_w[l] = state.beta1 * state.m_w[l] + (1.0 - state.beta1) * grads.d_weights[l];
    state.v_w[l] = state.beta2 * state.v_w[l].array().matrix() +
                   (1.0 - state.beta2) * grads.d_weights[l].cwiseProduct(grads.d_weights[l]);
    params.weights[l].array() -=
        state.lr * (state.m_w[l].array() / c1) /
        ((state.v_w[l].array() / c2).sqrt() + state.eps_num);
    state.m_b[l] = state.beta1 * state.m_b[l] + (1.0 - state.beta1) * grads.d_biases[l];
    state.v_b[l] = state.beta2 * state.v_b[l].array().matrix() +
                   (1.0 - state.beta2) * grads.d_biases[l].cwiseProduct(grads.d_biases[l]);
    params.biases[l].array() -=
        state.lr * (state.m_b[l].array() / c1) /
        ((state.v_b[l].array() / c2).sqrt() + state.eps_num);
  }
}

json net_to_json(const NetParams& params, std::uint64_t seed) {
  json j;
  j["version"] = 1;
  j["seed"] = seed;
  j["layer_sizes"] = params.layer_sizes();
  j["layers"] = json::array();
  for (int l = 0; l < params.num_layers(); ++l) {
    json layer;
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(params.weights[l].size()));
    for (int r = 0; r < params.weights[l].rows(); ++r)
      for (int c = 0; c < params.weights[l].cols(); ++c) w.push_back(params.weights[l](r, c));
    layer["w"] = w;
    layer["b"] = std::vector<double>(params.biases[l].data(),
                                     params.biases[l].data() + params.biases[l].size());
    j["layers"].push_back(layer);
  }
  return j;
}

NetParams net_from_json(const json& j) {
  const std::vector<int> sizes = j.at("layer_sizes").get<std::vector<int>>();
  NetParams p;
  const json& layers = j.at("layers");
  if (layers.size() + 1 != sizes.size()) throw IoError("weight file: layer count mismatch");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const int in = sizes[l];
    const int out = sizes[l + 1];
    const std::vector<double> w = layers[l].at("w").get<std::vector<double>>();
    const std::vector<double> b = layers[l].at("b").get<std::vector<double>>();
    if (static_cast<int>(w.size()) != in * out || static_cast<int>(b.size()) != out)
      throw IoError("weight file: layer shape mismatch");
    Eigen::MatrixXd wm(out, in);
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) wm(r, c) = w[static_cast<std::size_t>(r) * in + c];
    p.weights.push_back(std::move(wm));
    p.biases.push_back(Eigen::Map<const Eigen::VectorXd>(b.data(), out));
  }
  return p;
}

void save_net_json(const std::string& path, const NetParams& params,
                   std::uint64_t seed) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for write: " + path);
  f << net_to_json(params, seed).dump(2) << "\n";
}

NetParams load_net_json(const std::string& path, std::uint64_t* seed) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open for read: " + path);
  json j;
  f >> j;
  if (seed != nullptr) *seed = j.at("seed").get<std::uint64_t>();
  return net_from_json(j);
}

}  // namespace optimfkd

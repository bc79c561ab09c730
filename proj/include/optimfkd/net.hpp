#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace optimfkd {

/// Dense feed-forward network: rectified-linear hidden layers, identity
/// output, double precision throughout. Parameters are immutable during
/// inference; forward/backward may run concurrently on shared params.
struct NetParams {
  std::vector<Eigen::MatrixXd> weights;  // per layer, out x in
  std::vector<Eigen::VectorXd> biases;   // per layer, out

  int num_layers() const { return static_cast<int>(weights.size()); }
  int input_size() const { return static_cast<int>(weights.front().cols()); }
  int output_size() const { return static_cast<int>(weights.back().rows()); }
  std::vector<int> layer_sizes() const;
};

/// Gradients shaped exactly like NetParams, plus the gradient with respect
/// to the input (one column per batch sample).
struct GradBundle {
  std::vector<Eigen::MatrixXd> d_weights;
  std::vector<Eigen::VectorXd> d_biases;
  Eigen::MatrixXd d_input;

  static GradBundle zeros_like(const NetParams& p);
  void add_params(const GradBundle& other);   // accumulate weight/bias grads
  void scale_params(double s);
};

/// Pre-activations per layer, retained for the backward pass. Columns are
/// batch samples.
struct ForwardCache {
  Eigen::MatrixXd input;
  std::vector<Eigen::MatrixXd> pre;
};

struct AdamState {
  std::vector<Eigen::MatrixXd> m_w, v_w;
  std::vector<Eigen::VectorXd> m_b, v_b;
  long step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_num = 1e-8;

  static AdamState zeros_like(const NetParams& p, double lr = 1e-3);
};

/// He-initialized weights (zero-mean Gaussian, std sqrt(2/fan_in)), zero
/// biases; deterministic in seed.
NetParams net_init(std::uint64_t seed, const std::vector<int>& layer_sizes);

/// Batched forward pass; x has one sample per column. Pass a cache to keep
/// what the backward pass needs.
Eigen::MatrixXd net_forward(const NetParams& params, const Eigen::MatrixXd& x,
                            ForwardCache* cache = nullptr);

/// Exact reverse-mode gradients of <out_grad, output> for every parameter
/// and the input. Weight/bias gradients are summed over the batch.
GradBundle net_backward(const NetParams& params, const ForwardCache& cache,
                        const Eigen::MatrixXd& out_grad);

/// d(output)/d(input) of the forward pass that produced `cache`
/// (single-sample cache), accumulated as a dense out x in matrix.
Eigen::MatrixXd net_input_jacobian(const NetParams& params,
                                   const ForwardCache& cache);

/// Standard bias-corrected adaptive-moment update, in place.
void adam_step(NetParams& params, const GradBundle& grads, AdamState& state);

// Weight-file schema: {"layer_sizes": [...], "seed": ..., "layers":
// [{"w": row-major, "b": [...]}, ...], "version": 1}. Extra top-level keys
// round-trip untouched by save_net/load_net callers that embed this.
void save_net_json(const std::string& path, const NetParams& params,
                   std::uint64_t seed);
NetParams load_net_json(const std::string& path, std::uint64_t* seed = nullptr);

}  // namespace optimfkd

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "optimfkd/net.hpp"

using namespace optimfkd;
namespace fs = std::filesystem;

namespace {

// Nudges inputs/params away from rectifier kinks so central differences
// stay valid at h = 1e-5.
void clear_kinks(NetParams& p, const Eigen::VectorXd& x, double margin = 1e-3) {
  for (int pass = 0; pass < 4; ++pass) {
    ForwardCache cache;
    net_forward(p, x, &cache);
    bool dirty = false;
    for (std::size_t l = 0; l + 1 < cache.pre.size(); ++l) {
      for (int r = 0; r < cache.pre[l].rows(); ++r) {
        if (std::abs(cache.pre[l](r, 0)) < margin) {
          p.biases[l](r) += 3.0 * margin;
          dirty = true;
        }
      }
    }
    if (!dirty) return;
  }
}

double loss_of(const NetParams& p, const Eigen::VectorXd& x,
               const Eigen::VectorXd& g) {
  return g.dot(net_forward(p, x).col(0));
}

}  // namespace

TEST_CASE("net_init builds the expected shapes deterministically") {
  const std::vector<int> sizes = {80, 256, 256, 256, 256, 256, 256, 60};
  const NetParams a = net_init(123, sizes);
  const NetParams b = net_init(123, sizes);
  CHECK(a.layer_sizes() == sizes);
  CHECK(a.input_size() == 80);
  CHECK(a.output_size() == 60);
  for (int l = 0; l < a.num_layers(); ++l) {
    CHECK(a.weights[l] == b.weights[l]);
    CHECK(a.biases[l].isZero());
  }
  const NetParams c = net_init(124, sizes);
  CHECK(a.weights[0] != c.weights[0]);
}

TEST_CASE("net_init samples have the He std within 5 percent") {
  const NetParams p = net_init(5, {300, 350});  // 105k draws
  const double expected = std::sqrt(2.0 / 300.0);
  const double mean = p.weights[0].mean();
  const double var = (p.weights[0].array() - mean).square().mean();
  CHECK(std::abs(std::sqrt(var) - expected) / expected < 0.05);
}

TEST_CASE("net_forward zero parameters give zero output") {
  NetParams p = net_init(1, {4, 8, 3});
  for (auto& w : p.weights) w.setZero();
  const Eigen::VectorXd y = net_forward(p, Eigen::VectorXd::Random(4));
  CHECK(y.isZero());
}

TEST_CASE("net_forward single-layer hand case") {
  NetParams p;
  Eigen::MatrixXd w(2, 2);
  w << 1, 2, 3, 4;
  p.weights.push_back(w);
  p.biases.push_back(Eigen::VectorXd::Zero(2));
  Eigen::VectorXd x(2);
  x << 1, 1;
  const Eigen::VectorXd y = net_forward(p, x);
  CHECK(y(0) == doctest::Approx(3.0));
  CHECK(y(1) == doctest::Approx(7.0));
}

TEST_CASE("negative pre-activation contributes nothing downstream") {
  NetParams p = net_init(2, {1, 2, 1});
  p.weights[0] << 1.0, 1.0;  // unit 0 and unit 1 identical inputs
  p.biases[0] << -5.0, 1.0;  // unit 0 clamped off for x = 0
  p.weights[1] << 100.0, 1.0;
  Eigen::VectorXd x(1);
  x << 0.0;
  ForwardCache cache;
  const double y = net_forward(p, x, &cache)(0);
  CHECK(cache.pre[0](0, 0) == doctest::Approx(-5.0));
  CHECK(y == doctest::Approx(1.0));  // only unit 1 passes
}

TEST_CASE("net_backward matches central finite differences") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> gauss(0.0, 1.0);
  NetParams p = net_init(99, {5, 12, 9, 4});
  Eigen::VectorXd x(5);
  for (int i = 0; i < 5; ++i) x(i) = gauss(rng);
  clear_kinks(p, x);
  Eigen::VectorXd g(4);
  for (int i = 0; i < 4; ++i) g(i) = gauss(rng);

  ForwardCache cache;
  net_forward(p, x, &cache);
  const GradBundle grads = net_backward(p, cache, g);

  const double h = 1e-5;
  for (int l = 0; l < p.num_layers(); ++l) {
    for (int r = 0; r < p.weights[l].rows(); ++r) {
      for (int c = 0; c < p.weights[l].cols(); ++c) {
        NetParams pp = p;
        pp.weights[l](r, c) += h;
        NetParams pm = p;
        pm.weights[l](r, c) -= h;
        const double fd = (loss_of(pp, x, g) - loss_of(pm, x, g)) / (2.0 * h);
        const double an = grads.d_weights[l](r, c);
        CHECK(std::abs(fd - an) <= 1e-6 * std::max({1.0, std::abs(fd), std::abs(an)}));
      }
      NetParams pp = p;
      pp.biases[l](r) += h;
      NetParams pm = p;
      pm.biases[l](r) -= h;
      const double fd = (loss_of(pp, x, g) - loss_of(pm, x, g)) / (2.0 * h);
      CHECK(std::abs(fd - grads.d_biases[l](r)) <= 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
  for (int i = 0; i < 5; ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    const double fd = (loss_of(p, xp, g) - loss_of(p, xm, g)) / (2.0 * h);
    CHECK(std::abs(fd - grads.d_input(i, 0)) <= 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("gradient check holds on the full-size architectures") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> pick_layer;
  const double h = 1e-5;
  for (const std::vector<int>& sizes :
       {std::vector<int>{80, 256, 256, 256, 256, 256, 256, 60},
        std::vector<int>{120, 256, 256, 256, 256, 256, 256, 20}}) {
    NetParams p = net_init(7, sizes);
    Eigen::VectorXd x(sizes.front());
    for (int i = 0; i < x.size(); ++i) x(i) = 0.5 * gauss(rng);
    Eigen::VectorXd g(sizes.back());
    for (int i = 0; i < g.size(); ++i) g(i) = gauss(rng);
    ForwardCache cache;
    net_forward(p, x, &cache);
    const GradBundle grads = net_backward(p, cache, g);
    // spot-check random coordinates in every layer
    for (int l = 0; l < p.num_layers(); ++l) {
      for (int k = 0; k < 12; ++k) {
        const int r = std::uniform_int_distribution<int>(0, p.weights[l].rows() - 1)(rng);
        const int c = std::uniform_int_distribution<int>(0, p.weights[l].cols() - 1)(rng);
        NetParams pp = p;
        pp.weights[l](r, c) += h;
        NetParams pm = p;
        pm.weights[l](r, c) -= h;
        const double fd = (loss_of(pp, x, g) - loss_of(pm, x, g)) / (2.0 * h);
        const double an = grads.d_weights[l](r, c);
        CHECK(std::abs(fd - an) <= 2e-6 * std::max({1.0, std::abs(fd), std::abs(an)}));
      }
    }
  }
}

TEST_CASE("net_backward zero output gradient gives zero bundle") {
  NetParams p = net_init(3, {4, 6, 2});
  ForwardCache cache;
  net_forward(p, Eigen::VectorXd::Random(4), &cache);
  const GradBundle g = net_backward(p, cache, Eigen::VectorXd::Zero(2));
  for (const auto& w : g.d_weights) CHECK(w.isZero());
  for (const auto& b : g.d_biases) CHECK(b.isZero());
  CHECK(g.d_input.isZero());
}

TEST_CASE("linear net weight gradient is the input") {
  NetParams p;
  p.weights.push_back(Eigen::MatrixXd::Random(3, 4));
  p.biases.push_back(Eigen::VectorXd::Random(3));
  Eigen::VectorXd x(4);
  x << 0.5, -1.0, 2.0, 3.0;
  ForwardCache cache;
  net_forward(p, x, &cache);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(3);
  g(1) = 1.0;  // d y_1
  const GradBundle grads = net_backward(p, cache, g);
  for (int k = 0; k < 4; ++k) {
    CHECK(grads.d_weights[0](1, k) == doctest::Approx(x(k)));
    CHECK(grads.d_weights[0](0, k) == 0.0);
  }
}

TEST_CASE("positive homogeneity of hidden pre-activations") {
  NetParams p = net_init(31, {6, 10, 10, 3});
  const Eigen::VectorXd x = Eigen::VectorXd::Random(6);
  ForwardCache base;
  net_forward(p, x, &base);
  NetParams scaled = p;
  const double c = 1.7;
  scaled.weights[1] *= c;  // layer 1 incoming weights
  ForwardCache after;
  net_forward(scaled, x, &after);
  CHECK((after.pre[1] - c * base.pre[1]).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("adam zero gradient leaves parameters unchanged") {
  NetParams p = net_init(3, {4, 5, 2});
  const NetParams orig = p;
  AdamState st = AdamState::zeros_like(p);
  adam_step(p, GradBundle::zeros_like(p), st);
  for (int l = 0; l < p.num_layers(); ++l) {
    CHECK(p.weights[l] == orig.weights[l]);
    CHECK(p.biases[l] == orig.biases[l]);
  }
}

TEST_CASE("first adam step moves by lr in the gradient sign direction") {
  NetParams p = net_init(3, {2, 3, 2});
  const NetParams orig = p;
  AdamState st = AdamState::zeros_like(p, 1e-3);
  GradBundle g = GradBundle::zeros_like(p);
  g.d_weights[0](0, 0) = 2.5;
  g.d_weights[0](1, 1) = -0.4;
  adam_step(p, g, st);
  CHECK(p.weights[0](0, 0) - orig.weights[0](0, 0) ==
        doctest::Approx(-1e-3).epsilon(1e-4));
  CHECK(p.weights[0](1, 1) - orig.weights[0](1, 1) ==
        doctest::Approx(1e-3).epsilon(1e-4));
  CHECK(p.weights[0](0, 1) == orig.weights[0](0, 1));
}

TEST_CASE("adam update is deterministic") {
  NetParams a = net_init(8, {3, 4, 2});
  NetParams b = a;
  AdamState sa = AdamState::zeros_like(a);
  AdamState sb = AdamState::zeros_like(b);
  GradBundle g = GradBundle::zeros_like(a);
  g.d_weights[0].setConstant(0.3);
  g.d_biases[1].setConstant(-0.2);
  adam_step(a, g, sa);
  adam_step(b, g, sb);
  for (int l = 0; l < a.num_layers(); ++l) CHECK(a.weights[l] == b.weights[l]);
}

TEST_CASE("weight file save-load-save is byte identical") {
  const NetParams p = net_init(77, {5, 7, 3});
  const fs::path f1 = fs::temp_directory_path() / "optimfkd_net1.json";
  const fs::path f2 = fs::temp_directory_path() / "optimfkd_net2.json";
  save_net_json(f1.string(), p, 77);
  std::uint64_t seed = 0;
  const NetParams q = load_net_json(f1.string(), &seed);
  CHECK(seed == 77);
  save_net_json(f2.string(), q, seed);
  std::ifstream a(f1, std::ios::binary), b(f2, std::ios::binary);
  std::ostringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());
}

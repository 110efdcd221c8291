#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <chrono>
#include <cmath>
#include <random>

#include "vnet/nn.hpp"

using namespace vnet;

namespace {

// Scalar probe loss L = sum_k c_k * y_k over the whole output batch.
double probe_loss(const DenseNet& net, const Batch& in,
                  const std::vector<double>& c) {
  const Batch out = net.forward(in);
  double L = 0.0;
  for (size_t k = 0; k < out.data.size(); ++k) L += c[k] * out.data[k];
  return L;
}

DenseNet random_net(Rng& rng) {
  std::uniform_int_distribution<int> dim(2, 6);
  std::uniform_int_distribution<int> depth(1, 3);
  std::uniform_int_distribution<int> act_pick(0, 3);
  const int layers = depth(rng);
  std::vector<int> dims(layers + 1);
  for (int& v : dims) v = dim(rng);
  std::vector<Activation> acts(layers);
  for (Activation& a : acts)
    a = static_cast<Activation>(act_pick(rng));
  return DenseNet(dims, acts, rng);
}

// Max relative error between analytic and central-difference gradients.
double gradient_check(DenseNet& net, Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int rows = 3;
  Batch in = Batch::zeros(rows, net.input_dim());
  for (double& v : in.data) v = u(rng);
  std::vector<double> c(static_cast<size_t>(rows) * net.output_dim());
  for (double& v : c) v = u(rng);

  ForwardCache cache;
  const Batch out = net.forward(in, &cache);
  Batch dout{rows, net.output_dim(), c};
  const NetGrads grads = net.backward(cache, dout);

  const double h = 1e-6;
  double worst = 0.0;
  auto check_param = [&](double& theta, double analytic) {
    const double orig = theta;
    theta = orig + h;
    const double lp = probe_loss(net, in, c);
    theta = orig - h;
    const double lm = probe_loss(net, in, c);
    theta = orig;
    const double fd = (lp - lm) / (2.0 * h);
    const double rel = std::fabs(fd - analytic) /
                       std::max(1.0, std::max(std::fabs(fd), std::fabs(analytic)));
    worst = std::max(worst, rel);
  };
  for (size_t l = 0; l < net.layers().size(); ++l) {
    Layer& layer = net.layers()[l];
    for (size_t k = 0; k < layer.w.size(); ++k)
      check_param(layer.w[k], grads.layers[l].dw[k]);
    for (size_t k = 0; k < layer.b.size(); ++k)
      check_param(layer.b[k], grads.layers[l].db[k]);
  }
  // Input gradients too: they drive the attention backward pass.
  for (size_t k = 0; k < in.data.size(); ++k)
    check_param(in.data[k], grads.input_grad.data[k]);
  return worst;
}

}  // namespace

TEST_CASE("hand-computed forward pass, single identity layer") {
  Rng rng(1);
  DenseNet net({2, 2}, {Activation::identity}, rng);
  net.layers()[0].w = {1.0, 2.0, 3.0, 4.0};
  net.layers()[0].b = {0.5, -0.5};
  const auto y = net.forward1({1.0, 1.0});
  CHECK(y[0] == doctest::Approx(3.5));
  CHECK(y[1] == doctest::Approx(6.5));
}

TEST_CASE("hand-computed activations") {
  Rng rng(1);
  SUBCASE("relu clips negatives") {
    DenseNet net({2, 2}, {Activation::relu}, rng);
    net.layers()[0].w = {1.0, 0.0, 0.0, 1.0};
    net.layers()[0].b = {-2.0, 2.0};
    const auto y = net.forward1({1.0, 1.0});
    CHECK(y[0] == 0.0);
    CHECK(y[1] == doctest::Approx(3.0));
  }
  SUBCASE("sigmoid") {
    DenseNet net({1, 1}, {Activation::sigmoid}, rng);
    net.layers()[0].w = {1.0};
    net.layers()[0].b = {0.0};
    CHECK(net.forward1({0.0})[0] == doctest::Approx(0.5));
    CHECK(net.forward1({2.0})[0] ==
          doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-12));
  }
  SUBCASE("softmax of [1,2]") {
    DenseNet net({2, 2}, {Activation::softmax}, rng);
    net.layers()[0].w = {1.0, 0.0, 0.0, 1.0};
    net.layers()[0].b = {0.0, 0.0};
    const auto y = net.forward1({1.0, 2.0});
    const double e = std::exp(1.0);
    CHECK(y[0] == doctest::Approx(1.0 / (1.0 + e)).epsilon(1e-12));
    CHECK(y[1] == doctest::Approx(e / (1.0 + e)).epsilon(1e-12));
    CHECK(y[0] + y[1] == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("softmax is shift-invariant and overflow-safe") {
    DenseNet net({2, 2}, {Activation::softmax}, rng);
    net.layers()[0].w = {1.0, 0.0, 0.0, 1.0};
    net.layers()[0].b = {0.0, 0.0};
    const auto y = net.forward1({1000.0, 1001.0});
    CHECK(std::isfinite(y[0]));
    const double e = std::exp(1.0);
    CHECK(y[1] == doctest::Approx(e / (1.0 + e)).epsilon(1e-9));
  }
}

TEST_CASE("analytic gradients agree with central finite differences") {
  Rng rng(2024);
  auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    DenseNet net = random_net(rng);
    worst = std::max(worst, gradient_check(net, rng));
  }
  const double secs = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
  CHECK(worst < 1e-4);
  CHECK(secs < 10.0);
}

TEST_CASE("adam first step moves by about -lr * sign(g)") {
  Rng rng(3);
  DenseNet net({3, 3}, {Activation::identity}, rng);
  const std::vector<double> w0 = net.layers()[0].w;
  AdamState opt = AdamState::for_net(net, 0.01, 0.9, 0.999);

  NetGrads g = net.zero_grads();
  for (size_t k = 0; k < g.layers[0].dw.size(); ++k)
    g.layers[0].dw[k] = (k % 2 == 0) ? 0.7 : -1.3;
  adam_step(net, g, opt);
  CHECK(opt.step == 1);
  for (size_t k = 0; k < w0.size(); ++k) {
    const double delta = net.layers()[0].w[k] - w0[k];
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    CHECK(delta == doctest::Approx(-0.01 * sign).epsilon(1e-6));
  }
}

TEST_CASE("adam with zero gradients leaves parameters unchanged") {
  Rng rng(4);
  DenseNet net({3, 2}, {Activation::relu}, rng);
  const std::vector<double> w0 = net.layers()[0].w;
  AdamState opt = AdamState::for_net(net, 0.01, 0.9, 0.999);
  adam_step(net, net.zero_grads(), opt);
  CHECK(net.layers()[0].w == w0);
}

TEST_CASE("soft update blends parameters") {
  Rng rng(5);
  DenseNet target({2, 2}, {Activation::identity}, rng);
  DenseNet source({2, 2}, {Activation::identity}, rng);

  DenseNet t0 = target;
  soft_update(target, source, 0.0);
  CHECK(target.layers()[0].w == t0.layers()[0].w);

  soft_update(target, source, 1.0);
  CHECK(target.layers()[0].w == source.layers()[0].w);

  target = t0;
  const double tau = 0.005;
  soft_update(target, source, tau);
  for (size_t k = 0; k < target.layers()[0].w.size(); ++k)
    CHECK(target.layers()[0].w[k] ==
          doctest::Approx(tau * source.layers()[0].w[k] +
                          (1 - tau) * t0.layers()[0].w[k])
              .epsilon(1e-12));
}

TEST_CASE("checkpoints round-trip byte-stably") {
  Rng rng(6);
  DenseNet net({4, 5, 2},
               {Activation::relu, Activation::sigmoid}, rng);
  const std::string j1 = net_to_json(net);
  DenseNet loaded = net_from_json(j1);
  CHECK(net_to_json(loaded) == j1);
  const std::vector<double> in = {0.1, -0.2, 0.3, 0.9};
  CHECK(net.forward1(in) == loaded.forward1(in));

  AdamState opt = AdamState::for_net(net, 1e-3, 0.9, 0.999);
  NetGrads g = net.zero_grads();
  g.layers[0].dw[0] = 1.0;
  adam_step(net, g, opt);
  const std::string a1 = adam_to_json(opt);
  AdamState opt2 = adam_from_json(a1);
  CHECK(adam_to_json(opt2) == a1);
  CHECK(opt2.step == 1);
}

TEST_CASE("parameter count and shape comparison") {
  Rng rng(7);
  DenseNet a({3, 4, 2}, {Activation::relu, Activation::identity}, rng);
  CHECK(a.parameter_count() == (3 * 4 + 4) + (4 * 2 + 2));
  DenseNet b({3, 4, 2}, {Activation::relu, Activation::identity}, rng);
  CHECK(a.same_shape(b));
  DenseNet c({3, 5, 2}, {Activation::relu, Activation::identity}, rng);
  CHECK_FALSE(a.same_shape(c));
}

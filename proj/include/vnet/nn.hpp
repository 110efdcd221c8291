#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vnet/rng.hpp"

namespace vnet {

enum class Activation { identity, relu, sigmoid, softmax };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

struct Layer {
  int in = 0;
  int out = 0;
  std::vector<double> w;  // out x in, row-major
  std::vector<double> b;  // out
  Activation act = Activation::identity;
};

// Batch of row vectors.
struct Batch {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;
  double* row(int r) { return data.data() + static_cast<size_t>(r) * cols; }
  const double* row(int r) const {
    return data.data() + static_cast<size_t>(r) * cols;
  }
  static Batch zeros(int rows, int cols) {
    return Batch{rows, cols, std::vector<double>(static_cast<size_t>(rows) * cols, 0.0)};
  }
};

// Forward cache: layer inputs, pre-activations and post-activations.
struct ForwardCache {
  std::vector<Batch> inputs;
  std::vector<Batch> preact;
  std::vector<Batch> outputs;
};

struct LayerGrads {
  std::vector<double> dw;
  std::vector<double> db;
};

struct NetGrads {
  std::vector<LayerGrads> layers;
  Batch input_grad;

  void scale(double s);
  void add_scaled(const NetGrads& other, double s);
};

class DenseNet {
 public:
  DenseNet() = default;
  DenseNet(const std::vector<int>& dims, const std::vector<Activation>& acts,
           Rng& rng);

  Batch forward(const Batch& input, ForwardCache* cache = nullptr) const;
  std::vector<double> forward1(const std::vector<double>& input,
                               ForwardCache* cache = nullptr) const;

  // Exact analytic gradients of the composed function; `dout` is the loss
  // gradient w.r.t. the network output batch.
  NetGrads backward(const ForwardCache& cache, const Batch& dout) const;

  NetGrads zero_grads() const;

  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }
  int input_dim() const { return layers_.empty() ? 0 : layers_.front().in; }
  int output_dim() const { return layers_.empty() ? 0 : layers_.back().out; }
  size_t parameter_count() const;

  bool same_shape(const DenseNet& other) const;

 private:
  std::vector<Layer> layers_;
};

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<LayerGrads> m;  // first moments, parameter-shaped
  std::vector<LayerGrads> v;  // second moments

  static AdamState for_net(const DenseNet& net, double lr, double beta1,
                           double beta2);
};

// In-place Adam update; increments the step counter.
void adam_step(DenseNet& net, const NetGrads& grads, AdamState& state);

// theta_target <- tau * theta_source + (1 - tau) * theta_target
void soft_update(DenseNet& target, const DenseNet& source, double tau);

// Self-describing JSON checkpoint; byte-stable across save/load cycles.
std::string net_to_json(const DenseNet& net);
DenseNet net_from_json(const std::string& json_text);

std::string adam_to_json(const AdamState& s);
AdamState adam_from_json(const std::string& json_text);

}  // namespace vnet

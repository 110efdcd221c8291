#include "vnet/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace vnet {

using nlohmann::json;

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::softmax: return "softmax";
  }
  return "identity";
}

Activation activation_from_name(const std::string& name) {
  if (name == "identity") return Activation::identity;
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "softmax") return Activation::softmax;
  throw std::invalid_argument("unknown activation: " + name);
}

namespace {

// Z(rows,out) = X(rows,in) * W^T + b
void affine(const Batch& x, const Layer& l, Batch& z) {
  z.rows = x.rows;
  z.cols = l.out;
  z.data.assign(static_cast<size_t>(x.rows) * l.out, 0.0);
  for (int r = 0; r < x.rows; ++r) {
    const double* xr = x.row(r);
    double* zr = z.row(r);
    for (int o = 0; o < l.out; ++o) {
      const double* wr = l.w.data() + static_cast<size_t>(o) * l.in;
      double acc = l.b[o];
      for (int k = 0; k < l.in; ++k) acc += wr[k] * xr[k];
      zr[o] = acc;
    }
  }
}

void apply_activation(Activation act, Batch& z) {
  switch (act) {
    case Activation::identity:
      break;
    case Activation::relu:
      for (double& v : z.data) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::sigmoid:
      for (double& v : z.data) v = 1.0 / (1.0 + std::exp(-v));
      break;
    case Activation::softmax:
      for (int r = 0; r < z.rows; ++r) {
        double* row = z.row(r);
        double mx = row[0];
        for (int c = 1; c < z.cols; ++c) mx = std::max(mx, row[c]);
        double sum = 0.0;
        for (int c = 0; c < z.cols; ++c) {
          row[c] = std::exp(row[c] - mx);
          sum += row[c];
        }
        for (int c = 0; c < z.cols; ++c) row[c] /= sum;
      }
      break;
  }
}

// dZ (pre-activation grad) from dY (post-activation grad), in place.
void activation_backward(Activation act, const Batch& preact, const Batch& out,
                         Batch& dy) {
  switch (act) {
    case Activation::identity:
      break;
    case Activation::relu:
      for (size_t i = 0; i < dy.data.size(); ++i)
        if (preact.data[i] <= 0.0) dy.data[i] = 0.0;
      break;
    case Activation::sigmoid:
      for (size_t i = 0; i < dy.data.size(); ++i)
        dy.data[i] *= out.data[i] * (1.0 - out.data[i]);
      break;
    case Activation::softmax:
      for (int r = 0; r < dy.rows; ++r) {
        const double* y = out.row(r);
        double* g = dy.row(r);
        double dot = 0.0;
        for (int c = 0; c < dy.cols; ++c) dot += g[c] * y[c];
        for (int c = 0; c < dy.cols; ++c) g[c] = y[c] * (g[c] - dot);
      }
      break;
  }
}

}  // namespace

DenseNet::DenseNet(const std::vector<int>& dims,
                   const std::vector<Activation>& acts, Rng& rng) {
  if (dims.size() < 2 || acts.size() != dims.size() - 1)
    throw std::invalid_argument("layer dims/activations mismatch");
  layers_.reserve(acts.size());
  for (size_t i = 0; i + 1 < dims.size(); ++i) {
    Layer l;
    l.in = dims[i];
    l.out = dims[i + 1];
    l.act = acts[i];
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    l.w.resize(static_cast<size_t>(l.out) * l.in);
    l.b.resize(l.out);
    for (double& v : l.w) v = dist(rng);
    for (double& v : l.b) v = dist(rng);
    layers_.push_back(std::move(l));
  }
}

Batch DenseNet::forward(const Batch& input, ForwardCache* cache) const {
  if (input.cols != input_dim())
    throw std::invalid_argument("input dimension mismatch");
  if (cache) {
    cache->inputs.clear();
    cache->preact.clear();
    cache->outputs.clear();
  }
  Batch cur = input;
  for (const Layer& l : layers_) {
    if (cache) cache->inputs.push_back(cur);
    Batch z;
    affine(cur, l, z);
    if (cache) cache->preact.push_back(z);
    apply_activation(l.act, z);
    if (cache) cache->outputs.push_back(z);
    cur = std::move(z);
  }
  return cur;
}

std::vector<double> DenseNet::forward1(const std::vector<double>& input,
                                       ForwardCache* cache) const {
  Batch b;
  b.rows = 1;
  b.cols = static_cast<int>(input.size());
  b.data = input;
  return forward(b, cache).data;
}

NetGrads DenseNet::zero_grads() const {
  NetGrads g;
  g.layers.resize(layers_.size());
  for (size_t i = 0; i < layers_.size(); ++i) {
    g.layers[i].dw.assign(layers_[i].w.size(), 0.0);
    g.layers[i].db.assign(layers_[i].b.size(), 0.0);
  }
  return g;
}

NetGrads DenseNet::backward(const ForwardCache& cache, const Batch& dout) const {
  if (cache.inputs.size() != layers_.size())
    throw std::invalid_argument("cache does not match network");
  NetGrads g = zero_grads();
  Batch dy = dout;
  for (int li = static_cast<int>(layers_.size()) - 1; li >= 0; --li) {
    const Layer& l = layers_[li];
    activation_backward(l.act, cache.preact[li], cache.outputs[li], dy);
    const Batch& x = cache.inputs[li];
    LayerGrads& lg = g.layers[li];
    // dW[o][k] = sum_r dz[r][o] * x[r][k]; db[o] = sum_r dz[r][o]
    for (int r = 0; r < dy.rows; ++r) {
      const double* dzr = dy.row(r);
      const double* xr = x.row(r);
      for (int o = 0; o < l.out; ++o) {
        const double d = dzr[o];
        if (d == 0.0) continue;
        double* dwr = lg.dw.data() + static_cast<size_t>(o) * l.in;
        for (int k = 0; k < l.in; ++k) dwr[k] += d * xr[k];
        lg.db[o] += d;
      }
    }
    // dX = dZ * W
    Batch dx = Batch::zeros(dy.rows, l.in);
    for (int r = 0; r < dy.rows; ++r) {
      const double* dzr = dy.row(r);
      double* dxr = dx.row(r);
      for (int o = 0; o < l.out; ++o) {
        const double d = dzr[o];
        if (d == 0.0) continue;
        const double* wr = l.w.data() + static_cast<size_t>(o) * l.in;
        for (int k = 0; k < l.in; ++k) dxr[k] += d * wr[k];
      }
    }
    dy = std::move(dx);
  }
  g.input_grad = std::move(dy);
  return g;
}

size_t DenseNet::parameter_count() const {
  size_t n = 0;
  for (const Layer& l : layers_) n += l.w.size() + l.b.size();
  return n;
}

bool DenseNet::same_shape(const DenseNet& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (size_t i = 0; i < layers_.size(); ++i)
    if (layers_[i].in != other.layers_[i].in ||
        layers_[i].out != other.layers_[i].out)
      return false;
  return true;
}

void NetGrads::scale(double s) {
  for (auto& lg : layers) {
    for (double& v : lg.dw) v *= s;
    for (double& v : lg.db) v *= s;
  }
  for (double& v : input_grad.data) v *= s;
}

void NetGrads::add_scaled(const NetGrads& other, double s) {
  for (size_t i = 0; i < layers.size(); ++i) {
    for (size_t j = 0; j < layers[i].dw.size(); ++j)
      layers[i].dw[j] += s * other.layers[i].dw[j];
    for (size_t j = 0; j < layers[i].db.size(); ++j)
      layers[i].db[j] += s * other.layers[i].db[j];
  }
}

AdamState AdamState::for_net(const DenseNet& net, double lr, double beta1,
                             double beta2) {
  AdamState s;
  s.lr = lr;
  s.beta1 = beta1;
  s.beta2 = beta2;
  for (const Layer& l : net.layers()) {
    LayerGrads z;
    z.dw.assign(l.w.size(), 0.0);
    z.db.assign(l.b.size(), 0.0);
    s.m.push_back(z);
    s.v.push_back(z);
  }
  return s;
}

namespace {

inline void adam_update(double& param, double g, double& m, double& v,
                        const AdamState& s, double corr1, double corr2) {
  m = s.beta1 * m + (1.0 - s.beta1) * g;
  v = s.beta2 * v + (1.0 - s.beta2) * g * g;
  const double mh = m / corr1;
  const double vh = v / corr2;
  param -= s.lr * mh / (std::sqrt(vh) + s.eps);
}

}  // namespace

void adam_step(DenseNet& net, const NetGrads& grads, AdamState& state) {
  if (state.m.size() != net.layers().size())
    throw std::invalid_argument("optimizer state does not match network");
  ++state.step;
  const double corr1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double corr2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (size_t li = 0; li < net.layers().size(); ++li) {
    Layer& l = net.layers()[li];
    const LayerGrads& g = grads.layers[li];
    LayerGrads& m = state.m[li];
    LayerGrads& v = state.v[li];
    for (size_t i = 0; i < l.w.size(); ++i)
      adam_update(l.w[i], g.dw[i], m.dw[i], v.dw[i], state, corr1, corr2);
    for (size_t i = 0; i < l.b.size(); ++i)
      adam_update(l.b[i], g.db[i], m.db[i], v.db[i], state, corr1, corr2);
  }
}

void soft_update(DenseNet& target, const DenseNet& source, double tau) {
  if (!target.same_shape(source))
    throw std::invalid_argument("soft_update: architecture mismatch");
  for (size_t li = 0; li < target.layers().size(); ++li) {
    Layer& t = target.layers()[li];
    const Layer& s = source.layers()[li];
    for (size_t i = 0; i < t.w.size(); ++i)
      t.w[i] = tau * s.w[i] + (1.0 - tau) * t.w[i];
    for (size_t i = 0; i < t.b.size(); ++i)
      t.b[i] = tau * s.b[i] + (1.0 - tau) * t.b[i];
  }
}

std::string net_to_json(const DenseNet& net) {
  json j;
  j["layers"] = json::array();
  for (const Layer& l : net.layers()) {
    j["layers"].push_back({{"in", l.in},
                           {"out", l.out},
                           {"activation", activation_name(l.act)},
                           {"w", l.w},
                           {"b", l.b}});
  }
  return j.dump();
}

DenseNet net_from_json(const std::string& text) {
  const json j = json::parse(text);
  DenseNet net;
  for (const json& lj : j.at("layers")) {
    Layer l;
    l.in = lj.at("in");
    l.out = lj.at("out");
    l.act = activation_from_name(lj.at("activation"));
    l.w = lj.at("w").get<std::vector<double>>();
    l.b = lj.at("b").get<std::vector<double>>();
    if (l.w.size() != static_cast<size_t>(l.in) * l.out ||
        l.b.size() != static_cast<size_t>(l.out))
      throw std::invalid_argument("checkpoint layer shape mismatch");
    net.layers().push_back(std::move(l));
  }
  for (size_t i = 1; i < net.layers().size(); ++i)
    if (net.layers()[i].in != net.layers()[i - 1].out)
      throw std::invalid_argument("checkpoint layer dimensions incompatible");
  return net;
}

std::string adam_to_json(const AdamState& s) {
  json j;
  j["lr"] = s.lr;
  j["beta1"] = s.beta1;
  j["beta2"] = s.beta2;
  j["eps"] = s.eps;
  j["step"] = s.step;
  j["m"] = json::array();
  j["v"] = json::array();
  for (const LayerGrads& g : s.m) j["m"].push_back({{"w", g.dw}, {"b", g.db}});
  for (const LayerGrads& g : s.v) j["v"].push_back({{"w", g.dw}, {"b", g.db}});
  return j.dump();
}

AdamState adam_from_json(const std::string& text) {
  const json j = json::parse(text);
  AdamState s;
  s.lr = j.at("lr");
  s.beta1 = j.at("beta1");
  s.beta2 = j.at("beta2");
  s.eps = j.at("eps");
  s.step = j.at("step");
  for (const json& g : j.at("m")) {
    LayerGrads lg;
    lg.dw = g.at("w").get<std::vector<double>>();
    lg.db = g.at("b").get<std::vector<double>>();
    s.m.push_back(std::move(lg));
  }
  for (const json& g : j.at("v")) {
    LayerGrads lg;
    lg.dw = g.at("w").get<std::vector<double>>();
    lg.db = g.at("b").get<std::vector<double>>();
    s.v.push_back(std::move(lg));
  }
  return s;
}

}  // namespace vnet

#include "vnet/shapley.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace vnet {

Coalition coalition_from_indices(int d, const std::vector<int>& indices) {
  Coalition c(d, 0);
  for (int i : indices) {
    if (i < 0 || i >= d) throw std::invalid_argument("coalition index out of range");
    c[i] = 1;
  }
  return c;
}

CachedGame::CachedGame(int d, Game game) : d_(d), game_(std::move(game)) {
  if (d < 0) throw std::invalid_argument("CachedGame: d must be >= 0");
}

double CachedGame::operator()(const Coalition& c) {
  std::string key(c.begin(), c.end());
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  ++evals_;
  const double v = game_(c);
  cache_.emplace(key, v);
  return v;
}

std::vector<double> mask_state(const std::vector<double>& s,
                               const Coalition& coalition,
                               const std::vector<double>& baseline) {
  if (s.size() != coalition.size() || s.size() != baseline.size())
    throw std::invalid_argument("mask_state: dimension mismatch");
  std::vector<double> out(s.size());
  for (size_t i = 0; i < s.size(); ++i)
    out[i] = coalition[i] ? s[i] : baseline[i];
  return out;
}

std::vector<double> normalize_importance(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("normalize_importance: empty input");
  constexpr double eps = 1e-12;
  double total = 0.0;
  for (double x : v) total += std::fabs(x);
  std::vector<double> out(v.size());
  for (size_t i = 0; i < v.size(); ++i) out[i] = std::fabs(v[i]) / (total + eps);
  return out;
}

ShapleyReport shapley_exact(int d, const Game& game) {
  if (d < 1) throw std::invalid_argument("shapley_exact: d must be >= 1");
  if (d > 12)
    throw std::invalid_argument(
        "shapley_exact: d > 12 is infeasible, use shapley_mc");

  const std::uint64_t total = 1ULL << d;
  std::vector<double> v(total);
  Coalition c(d, 0);
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    for (int i = 0; i < d; ++i) c[i] = (mask >> i) & 1ULL ? 1 : 0;
    v[mask] = game(c);
  }

  std::vector<double> fact(d + 1, 1.0);
  for (int i = 1; i <= d; ++i) fact[i] = fact[i - 1] * i;

  ShapleyReport rep;
  rep.kind = EstimatorKind::exact;
  rep.psi.assign(d, 0.0);
  rep.stderr_psi.assign(d, 0.0);
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    const int size = std::popcount(mask);
    for (int i = 0; i < d; ++i) {
      if ((mask >> i) & 1ULL) continue;
      const double weight = fact[size] * fact[d - size - 1] / fact[d];
      rep.psi[i] += weight * (v[mask | (1ULL << i)] - v[mask]);
    }
  }
  return rep;
}

ShapleyReport shapley_mc(int d, const Game& game, int samples, Rng& rng) {
  if (d < 1) throw std::invalid_argument("shapley_mc: d must be >= 1");
  if (samples < 1) throw std::invalid_argument("shapley_mc: samples must be >= 1");

  std::vector<double> sum(d, 0.0), sumsq(d, 0.0);
  std::vector<int> perm(d);
  std::iota(perm.begin(), perm.end(), 0);
  Coalition c(d, 0);
  const Coalition empty(d, 0);

  for (int j = 0; j < samples; ++j) {
    // Fisher-Yates; permutation prefixes realize the Shapley weights.
    for (int i = d - 1; i > 0; --i) {
      const int k = std::uniform_int_distribution<int>(0, i)(rng);
      std::swap(perm[i], perm[k]);
    }
    std::fill(c.begin(), c.end(), 0);
    double v_prev = game(empty);
    for (int idx : perm) {
      c[idx] = 1;
      const double v_cur = game(c);
      const double marginal = v_cur - v_prev;
      sum[idx] += marginal;
      sumsq[idx] += marginal * marginal;
      v_prev = v_cur;
    }
  }

  ShapleyReport rep;
  rep.kind = EstimatorKind::monte_carlo;
  rep.samples = samples;
  rep.psi.assign(d, 0.0);
  rep.stderr_psi.assign(d, 0.0);
  for (int i = 0; i < d; ++i) {
    const double mean = sum[i] / samples;
    rep.psi[i] = mean;
    if (samples > 1) {
      const double var = std::max(0.0, (sumsq[i] - samples * mean * mean) / (samples - 1));
      rep.stderr_psi[i] = std::sqrt(var / samples);
    }
  }
  return rep;
}

double characteristic_value(const RolloutSim& start, const Policy& policy,
                            const Coalition& coalition,
                            const std::vector<double>& baseline,
                            const RolloutSpec& spec, Rng& rng) {
  double total = 0.0;
  for (int r = 0; r < spec.rollouts; ++r) {
    auto sim = start.clone();
    // Rollouts differ through the simulator's own randomness.
    sim->perturb(rng());
    double acc = 0.0;
    double g = 1.0;
    for (int t = 0; t < spec.horizon; ++t) {
      const std::vector<double> obs = sim->observe();
      const std::vector<double> masked = mask_state(obs, coalition, baseline);
      acc += g * sim->step(policy(masked));
      g *= spec.gamma;
    }
    total += acc;
  }
  return total / spec.rollouts;
}

ShapleyReport shapley_for_state(const RolloutSim& start, const Policy& policy,
                                const std::vector<double>& baseline,
                                int samples, const RolloutSpec& spec,
                                std::uint64_t seed) {
  const int d = static_cast<int>(start.observe().size());
  Rng rng(seed);
  CachedGame cached(d, [&](const Coalition& c) {
    return characteristic_value(start, policy, c, baseline, spec, rng);
  });
  ShapleyReport rep = shapley_mc(d, [&](const Coalition& c) { return cached(c); },
                                 samples, rng);
  rep.rollout_horizon = spec.horizon;
  rep.gamma = spec.gamma;
  rep.baseline = baseline;
  return rep;
}

}  // namespace vnet

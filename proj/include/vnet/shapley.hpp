#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "vnet/rng.hpp"

namespace vnet {

// Feature coalition as a membership mask over {0..d-1}.
using Coalition = std::vector<char>;

Coalition coalition_from_indices(int d, const std::vector<int>& indices);

// Characteristic function v(C).
using Game = std::function<double(const Coalition&)>;

// Memoizing wrapper keyed on the membership mask.
class CachedGame {
 public:
  CachedGame(int d, Game game);
  double operator()(const Coalition& c);
  size_t evaluations() const { return evals_; }

 private:
  int d_;
  Game game_;
  size_t evals_ = 0;
  std::unordered_map<std::string, double> cache_;
};

enum class EstimatorKind { exact, monte_carlo };

struct ShapleyReport {
  std::vector<double> psi;
  std::vector<double> stderr_psi;  // MC only, else zeros
  EstimatorKind kind = EstimatorKind::exact;
  int samples = 0;          // MC permutations per feature
  int rollout_horizon = 0;  // 0 for synthetic games
  double gamma = 0.0;
  std::vector<double> baseline;  // masking baseline, empty for synthetic
};

// Exact enumeration over all 2^d coalitions; guarded to d <= 12.
ShapleyReport shapley_exact(int d, const Game& game);

// Monte-Carlo estimate via uniform-random permutation prefixes, which
// realizes the exact combinatorial weights. Each feature receives
// `samples` marginal contributions; reports mean and standard error.
ShapleyReport shapley_mc(int d, const Game& game, int samples, Rng& rng);

// s_i for i in C, baseline_i otherwise.
std::vector<double> mask_state(const std::vector<double>& s,
                               const Coalition& coalition,
                               const std::vector<double>& baseline);

// |v_i| / (sum_k |v_k| + eps); all-zero input maps to all zeros.
std::vector<double> normalize_importance(const std::vector<double>& v);

// --- rollout-based characteristic function ------------------------------

// Minimal simulator surface the Shapley machinery needs. Implemented by
// the network environment; tests provide stubs.
class RolloutSim {
 public:
  virtual ~RolloutSim() = default;
  virtual std::vector<double> observe() const = 0;
  virtual double step(const std::vector<double>& flat_action) = 0;
  virtual std::unique_ptr<RolloutSim> clone() const = 0;
  // Reseeds the simulator's internal randomness so repeated rollouts from
  // the same state explore different stochastic futures.
  virtual void perturb(std::uint64_t /*seed*/) {}
};

using Policy = std::function<std::vector<double>(const std::vector<double>&)>;

struct RolloutSpec {
  int horizon = 10;        // H
  double gamma = 0.99;
  int rollouts = 3;        // k, averaged per coalition evaluation
};

// Average discounted return over `spec.rollouts` truncated rollouts where
// the policy observes mask_state(obs, C, baseline) while the simulator
// evolves on the true state.
double characteristic_value(const RolloutSim& start, const Policy& policy,
                            const Coalition& coalition,
                            const std::vector<double>& baseline,
                            const RolloutSpec& spec, Rng& rng);

// Monte-Carlo Shapley over the rollout game anchored at `start`.
ShapleyReport shapley_for_state(const RolloutSim& start, const Policy& policy,
                                const std::vector<double>& baseline,
                                int samples, const RolloutSpec& spec,
                                std::uint64_t seed);

}  // namespace vnet

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qlacc/rng.hpp"

namespace qlacc {

struct StepResult {
  int next_state = 0;
  double reward = 0.0;
  bool terminal = false;
};

/// A finite deterministic MDP with injective feature encodings. Transitions
/// are pure functions of (state, action), so the full model is enumerable
/// and exact value iteration is always available as an oracle.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual const char* kind() const = 0;
  virtual int state_count() const = 0;
  virtual int action_count() const = 0;
  virtual int state_dim() const = 0;
  virtual int action_dim() const = 0;
  /// Rewards are scaled so every discounted return fits in [0, 1] for any
  /// discount up to this value: the goal pays exactly 1 - gamma_cap.
  virtual double gamma_cap() const = 0;
  virtual bool is_terminal(int state) const = 0;
  virtual StepResult step(int state, int action) const = 0;
  virtual void encode_state(int state, std::span<double> out) const = 0;
  virtual void encode_action(int action, std::span<double> out) const = 0;

  int input_dim() const { return state_dim() + action_dim(); }

  /// Concatenated state and action features, all components in [0, 1],
  /// injective over (state, action) pairs.
  std::vector<double> encode_input(int state, int action) const;

  /// Uniform draw over the non-terminal states (episode reset).
  int random_nonterminal_state(Rng& rng) const;

  void check_indices(int state, int action) const;
};

/// Environment dimensions. The two presets mirror the small and large
/// problem scales the accelerator model is calibrated for.
struct EnvSpec {
  int state_dim = 4;
  int action_dim = 2;
  int actions_per_state = 9;
  int state_space_size = 36;
  double gamma_cap = 0.9;
  std::uint64_t seed = 1;

  static EnvSpec simple_preset(std::uint64_t seed = 1, double gamma = 0.9);
  static EnvSpec complex_preset(std::uint64_t seed = 1, double gamma = 0.9);
};

/// n states on a line, actions {left, right}; moving right from state n-2
/// enters the terminal state n-1 and pays 1 - gamma. Left at the wall stays.
std::unique_ptr<Environment> make_chain(int n, double gamma);

/// A seeded random-goal gridworld: states form an H x W grid (the most
/// square factorization of state_space_size), actions are clamped 2D
/// displacement moves, and a single seeded goal cell pays 1 - gamma_cap on
/// entry. Construction verifies every state can reach the goal.
std::unique_ptr<Environment> make_grid(const EnvSpec& spec);

/// Full transition model as JSON for external inspection (`env dump`).
std::string dump_model(const Environment& env);

}  // namespace qlacc

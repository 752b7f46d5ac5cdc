#pragma once

#include <span>
#include <vector>

#include "qlacc/environments.hpp"
#include "qlacc/neural.hpp"
#include "qlacc/rng.hpp"

namespace qlacc {

/// Learning constants. alpha scales the temporal-difference error, c_rate
/// scales the weight update, so the effective gradient step is their
/// product; the two knobs stay independent.
struct Hyperparams {
  double alpha = 0.5;
  double gamma = 0.9;
  double c_rate = 0.2;
  double epsilon = 0.1;

  Hyperparams() = default;
  Hyperparams(double alpha_, double gamma_, double c_rate_, double epsilon_);
};

struct Transition {
  int state = 0;
  int action = 0;
  double reward = 0.0;
  int next_state = 0;
  bool terminal = false;
};

/// Dense (state, action) -> Q map, the tabular reference implementation.
class QTable {
 public:
  QTable(int n_states, int n_actions, double initial = 0.0);

  int state_count() const { return n_states_; }
  int action_count() const { return n_actions_; }

  double q(int state, int action) const;
  void set(int state, int action, double value);
  std::span<const double> row(int state) const;

  /// Largest absolute entry difference; tables must have equal shape.
  double max_abs_diff(const QTable& other) const;

 private:
  std::size_t idx(int state, int action) const;

  int n_states_;
  int n_actions_;
  std::vector<double> values_;
};

/// Index of the maximum Q-value, lowest index on ties.
int greedy_action(std::span<const double> q_values);

/// With probability epsilon a uniform random action, otherwise greedy.
int epsilon_greedy(std::span<const double> q_values, double epsilon, Rng& rng);

/// Maximum Q-value over the next state's actions.
double opt_q(std::span<const double> q_values_next);

/// alpha * (r + gamma * opt_q_next - q_current); terminal transitions drop
/// the bootstrap term.
double q_error(double reward, double opt_q_next, double q_current,
               double alpha, double gamma, bool terminal);

/// In-place tabular update Q(s,a) += q_error.
void tabular_update(QTable& table, const Transition& t, const Hyperparams& hp);

/// Exact Q*: Bellman sweeps until no entry moves by more than tol.
QTable value_iteration(const Environment& env, double gamma, double tol);

/// Everything observed during one neural Q update.
struct UpdateRecord {
  long step = 0;
  int state = 0;
  int action = 0;
  double reward = 0.0;
  int next_state = 0;
  bool terminal = false;
  double q_err = 0.0;
  std::vector<double> q_current;
  std::vector<double> q_next;
  int feedforwards = 0;  // always 2A: one pass per action for both states
};

/// One full neural Q update: evaluate all actions of `state`, pick one by
/// epsilon-greedy, step the environment, evaluate all actions of the next
/// state, form the scaled TD error and backpropagate it. On the fixed
/// backend the TD error itself is computed with the saturating fixed-point
/// ops, like the rest of the datapath.
UpdateRecord neural_q_step(Network& net, const Environment& env, int state,
                           const Hyperparams& hp, UpdateRule rule, Rng& rng);

/// Q-vector of every action in `state` under the current network.
std::vector<double> q_values_for_state(const Network& net, const Environment& env, int state);

/// Fraction of non-terminal states whose greedy network action is optimal
/// under `oracle` (ties in the oracle count as optimal).
double policy_agreement(const Network& net, const Environment& env, const QTable& oracle);

/// Mean |Q_net - Q*| over all non-terminal (state, action) pairs.
double mean_abs_q_gap(const Network& net, const Environment& env, const QTable& oracle);

}  // namespace qlacc

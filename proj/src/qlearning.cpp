#include "qlacc/qlearning.hpp"

#include <cmath>
#include <stdexcept>

namespace qlacc {

Hyperparams::Hyperparams(double alpha_, double gamma_, double c_rate_, double epsilon_)
    : alpha(alpha_), gamma(gamma_), c_rate(c_rate_), epsilon(epsilon_) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("Hyperparams: alpha must be in [0, 1]");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("Hyperparams: gamma must be in [0, 1)");
  }
  if (!(c_rate > 0.0)) {
    throw std::invalid_argument("Hyperparams: c_rate must be > 0");
  }
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw std::invalid_argument("Hyperparams: epsilon must be in [0, 1]");
  }
}

QTable::QTable(int n_states, int n_actions, double initial)
    : n_states_(n_states), n_actions_(n_actions) {
  if (n_states < 1 || n_actions < 1) {
    throw std::invalid_argument("QTable: dimensions must be positive");
  }
  values_.assign(static_cast<std::size_t>(n_states) * n_actions, initial);
}

std::size_t QTable::idx(int state, int action) const {
  if (state < 0 || state >= n_states_ || action < 0 || action >= n_actions_) {
    throw std::out_of_range("QTable: index out of range");
  }
  return static_cast<std::size_t>(state) * n_actions_ + action;
}

double QTable::q(int state, int action) const { return values_[idx(state, action)]; }

void QTable::set(int state, int action, double value) { values_[idx(state, action)] = value; }

std::span<const double> QTable::row(int state) const {
  return std::span<const double>(values_.data() + idx(state, 0),
                                 static_cast<std::size_t>(n_actions_));
}

double QTable::max_abs_diff(const QTable& other) const {
  if (n_states_ != other.n_states_ || n_actions_ != other.n_actions_) {
    throw std::invalid_argument("QTable: shape mismatch");
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < values_.size(); ++k) {
    worst = std::max(worst, std::fabs(values_[k] - other.values_[k]));
  }
  return worst;
}

int greedy_action(std::span<const double> q_values) {
  if (q_values.empty()) {
    throw std::invalid_argument("greedy_action: empty Q-vector");
  }
  int best = 0;
  for (int a = 1; a < static_cast<int>(q_values.size()); ++a) {
    if (q_values[static_cast<std::size_t>(a)] > q_values[static_cast<std::size_t>(best)]) {
      best = a;
    }
  }
  return best;
}

int epsilon_greedy(std::span<const double> q_values, double epsilon, Rng& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw std::invalid_argument("epsilon_greedy: epsilon must be in [0, 1]");
  }
  if (unit_double(rng) < epsilon) {
    return uniform_int(rng, static_cast<int>(q_values.size()));
  }
  return greedy_action(q_values);
}

double opt_q(std::span<const double> q_values_next) {
  return q_values_next[static_cast<std::size_t>(greedy_action(q_values_next))];
}

double q_error(double reward, double opt_q_next, double q_current,
               double alpha, double gamma, bool terminal) {
  const double bootstrap = terminal ? 0.0 : gamma * opt_q_next;
  return alpha * (reward + bootstrap - q_current);
}

void tabular_update(QTable& table, const Transition& t, const Hyperparams& hp) {
  const double next_best = t.terminal ? 0.0 : opt_q(table.row(t.next_state));
  const double err = q_error(t.reward, next_best, table.q(t.state, t.action),
                             hp.alpha, hp.gamma, t.terminal);
  table.set(t.state, t.action, table.q(t.state, t.action) + err);
}

QTable value_iteration(const Environment& env, double gamma, double tol) {
  if (!(tol > 0.0)) {
    throw std::invalid_argument("value_iteration: tol must be > 0");
  }
  const int n_states = env.state_count();
  const int n_actions = env.action_count();
  QTable q(n_states, n_actions, 0.0);
  QTable next = q;

  // Geometric convergence for gamma < 1; the cap only guards degenerate tols.
  const long max_sweeps = 1000000;
  for (long sweep = 0; sweep < max_sweeps; ++sweep) {
    double change = 0.0;
    for (int s = 0; s < n_states; ++s) {
      for (int a = 0; a < n_actions; ++a) {
        double target;
        if (env.is_terminal(s)) {
          target = 0.0;
        } else {
          const StepResult r = env.step(s, a);
          target = r.reward + (r.terminal ? 0.0 : gamma * opt_q(q.row(r.next_state)));
        }
        change = std::max(change, std::fabs(target - q.q(s, a)));
        next.set(s, a, target);
      }
    }
    std::swap(q, next);
    if (change <= tol) return q;
  }
  throw std::runtime_error("value_iteration: failed to converge");
}

std::vector<double> q_values_for_state(const Network& net, const Environment& env, int state) {
  std::vector<double> q(static_cast<std::size_t>(env.action_count()));
  for (int a = 0; a < env.action_count(); ++a) {
    q[static_cast<std::size_t>(a)] = feedforward(net, env.encode_input(state, a)).q();
  }
  return q;
}

namespace {

// TD error evaluated on the fixed-point datapath: every product and sum goes
// through the saturating ops, mirroring the error-capture stage.
double fixed_point_q_error(const Network& net, double reward, double opt_q_next,
                           double q_current, double alpha, double gamma, bool terminal) {
  const QFormat& fmt = net.fmt;
  OverflowCounter* ovf = &net.overflow;
  const FxValue r = encode(reward, fmt, ovf);
  const FxValue boot = terminal
      ? FxValue{0, fmt}
      : mul(encode(gamma, fmt, ovf), encode(opt_q_next, fmt, ovf), ovf);
  const FxValue target = add_sat(r, boot, ovf);
  const FxValue diff = add_sat(target, negate(encode(q_current, fmt, ovf), ovf), ovf);
  return decode(mul(encode(alpha, fmt, ovf), diff, ovf));
}

}  // namespace

UpdateRecord neural_q_step(Network& net, const Environment& env, int state,
                           const Hyperparams& hp, UpdateRule rule, Rng& rng) {
  const int n_actions = env.action_count();

  UpdateRecord rec;
  rec.state = state;

  // (1) Q-values for every action in the current state, keeping each trace
  // so the chosen action's pass can be reused for backpropagation.
  std::vector<ForwardTrace> traces;
  traces.reserve(static_cast<std::size_t>(n_actions));
  rec.q_current.resize(static_cast<std::size_t>(n_actions));
  for (int a = 0; a < n_actions; ++a) {
    traces.push_back(feedforward(net, env.encode_input(state, a)));
    rec.q_current[static_cast<std::size_t>(a)] = traces.back().q();
  }

  // (2) Action selection and environment step.
  rec.action = epsilon_greedy(rec.q_current, hp.epsilon, rng);
  const StepResult sr = env.step(state, rec.action);
  rec.reward = sr.reward;
  rec.next_state = sr.next_state;
  rec.terminal = sr.terminal;

  // (3) Q-values for every action in the next state.
  rec.q_next = q_values_for_state(net, env, sr.next_state);

  // (4) Scaled TD error from the next-state maximum.
  const double best_next = opt_q(rec.q_next);
  const double q_sa = rec.q_current[static_cast<std::size_t>(rec.action)];
  rec.q_err = net.backend == Backend::fixed_point
      ? fixed_point_q_error(net, sr.reward, best_next, q_sa, hp.alpha, hp.gamma, sr.terminal)
      : q_error(sr.reward, best_next, q_sa, hp.alpha, hp.gamma, sr.terminal);

  // (5) Backpropagate and update weights and biases.
  const ForwardTrace& chosen = traces[static_cast<std::size_t>(rec.action)];
  const Deltas deltas = backprop(net, chosen, rec.q_err);
  apply_update(net, chosen, deltas, hp.c_rate, rule);

  rec.feedforwards = 2 * n_actions;
  return rec;
}

double policy_agreement(const Network& net, const Environment& env, const QTable& oracle) {
  constexpr double kTieTol = 1e-9;
  int checked = 0;
  int agree = 0;
  for (int s = 0; s < env.state_count(); ++s) {
    if (env.is_terminal(s)) continue;
    ++checked;
    const std::vector<double> q = q_values_for_state(net, env, s);
    const int pick = greedy_action(q);
    const double best = opt_q(oracle.row(s));
    if (oracle.q(s, pick) >= best - kTieTol) ++agree;
  }
  return checked == 0 ? 1.0 : static_cast<double>(agree) / checked;
}

double mean_abs_q_gap(const Network& net, const Environment& env, const QTable& oracle) {
  double total = 0.0;
  long count = 0;
  for (int s = 0; s < env.state_count(); ++s) {
    if (env.is_terminal(s)) continue;
    const std::vector<double> q = q_values_for_state(net, env, s);
    for (int a = 0; a < env.action_count(); ++a) {
      total += std::fabs(q[static_cast<std::size_t>(a)] - oracle.q(s, a));
      ++count;
    }
  }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

}  // namespace qlacc

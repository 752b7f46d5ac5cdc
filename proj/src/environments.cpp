#include "qlacc/environments.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include <json.hpp>

namespace qlacc {

namespace {
using ordered_json = nlohmann::ordered_json;
}

std::vector<double> Environment::encode_input(int state, int action) const {
  check_indices(state, action);
  std::vector<double> out(static_cast<std::size_t>(input_dim()));
  encode_state(state, std::span<double>(out.data(), static_cast<std::size_t>(state_dim())));
  encode_action(action, std::span<double>(out.data() + state_dim(),
                                          static_cast<std::size_t>(action_dim())));
  return out;
}

int Environment::random_nonterminal_state(Rng& rng) const {
  const int n = state_count();
  for (;;) {
    const int s = uniform_int(rng, n);
    if (!is_terminal(s)) return s;
  }
}

void Environment::check_indices(int state, int action) const {
  if (state < 0 || state >= state_count()) {
    throw std::out_of_range("environment: state index out of range");
  }
  if (action < 0 || action >= action_count()) {
    throw std::out_of_range("environment: action index out of range");
  }
}

EnvSpec EnvSpec::simple_preset(std::uint64_t seed, double gamma) {
  return EnvSpec{4, 2, 9, 36, gamma, seed};
}

EnvSpec EnvSpec::complex_preset(std::uint64_t seed, double gamma) {
  return EnvSpec{14, 6, 40, 1800, gamma, seed};
}

namespace {

class ChainEnv final : public Environment {
 public:
  ChainEnv(int n, double gamma) : n_(n), gamma_(gamma) {
    if (n < 2) throw std::invalid_argument("make_chain: need n >= 2");
    if (!(gamma >= 0.0 && gamma < 1.0)) {
      throw std::invalid_argument("make_chain: gamma must be in [0, 1)");
    }
  }

  const char* kind() const override { return "chain"; }
  int state_count() const override { return n_; }
  int action_count() const override { return 2; }
  int state_dim() const override { return 1; }
  int action_dim() const override { return 1; }
  double gamma_cap() const override { return gamma_; }
  bool is_terminal(int state) const override { return state == n_ - 1; }

  StepResult step(int state, int action) const override {
    check_indices(state, action);
    if (is_terminal(state)) return StepResult{state, 0.0, true};
    const int next = action == 0 ? std::max(state - 1, 0) : state + 1;
    const bool terminal = next == n_ - 1;
    return StepResult{next, terminal ? 1.0 - gamma_ : 0.0, terminal};
  }

  void encode_state(int state, std::span<double> out) const override {
    out[0] = static_cast<double>(state) / static_cast<double>(n_ - 1);
  }

  void encode_action(int action, std::span<double> out) const override {
    out[0] = static_cast<double>(action);
  }

 private:
  int n_;
  double gamma_;
};

// Most-square H x W factorization, H <= W.
std::pair<int, int> grid_shape(int n) {
  for (int h = static_cast<int>(std::sqrt(static_cast<double>(n))); h >= 1; --h) {
    if (n % h == 0) return {h, n / h};
  }
  return {1, n};
}

class GridEnv final : public Environment {
 public:
  explicit GridEnv(const EnvSpec& spec) : spec_(spec) {
    if (spec.state_space_size < 2) {
      throw std::invalid_argument("make_grid: need at least 2 states");
    }
    if (spec.state_dim < 2 || spec.action_dim < 1 || spec.actions_per_state < 1) {
      throw std::invalid_argument("make_grid: invalid dimensions");
    }
    if (!(spec.gamma_cap >= 0.0 && spec.gamma_cap < 1.0)) {
      throw std::invalid_argument("make_grid: gamma_cap must be in [0, 1)");
    }

    std::tie(height_, width_) = grid_shape(spec.state_space_size);

    // Moves are the row-major cells of the smallest centred square holding
    // actions_per_state entries; for 9 actions this is the 3x3 neighbourhood.
    int radius = 0;
    while ((2 * radius + 1) * (2 * radius + 1) < spec.actions_per_state) ++radius;
    for (int dr = -radius; dr <= radius; ++dr) {
      for (int dc = -radius; dc <= radius; ++dc) {
        if (static_cast<int>(moves_.size()) < spec.actions_per_state) {
          moves_.emplace_back(dr, dc);
        }
      }
    }

    action_base_ = 2;
    while (pow_int(action_base_, spec.action_dim) < spec.actions_per_state) {
      ++action_base_;
    }

    Rng rng(spec.seed);
    goal_ = uniform_int(rng, spec.state_space_size);

    verify_reachability();
  }

  const char* kind() const override { return "grid"; }
  int state_count() const override { return spec_.state_space_size; }
  int action_count() const override { return spec_.actions_per_state; }
  int state_dim() const override { return spec_.state_dim; }
  int action_dim() const override { return spec_.action_dim; }
  double gamma_cap() const override { return spec_.gamma_cap; }
  bool is_terminal(int state) const override { return state == goal_; }

  StepResult step(int state, int action) const override {
    check_indices(state, action);
    if (is_terminal(state)) return StepResult{state, 0.0, true};
    const auto [dr, dc] = moves_[static_cast<std::size_t>(action)];
    const int r = std::clamp(state / width_ + dr, 0, height_ - 1);
    const int c = std::clamp(state % width_ + dc, 0, width_ - 1);
    const int next = r * width_ + c;
    const bool terminal = next == goal_;
    return StepResult{next, terminal ? 1.0 - spec_.gamma_cap : 0.0, terminal};
  }

  // Row/column coordinates normalized to [0, 1], repeated across the
  // configured width. Injective via the first two slots.
  void encode_state(int state, std::span<double> out) const override {
    const double r = height_ > 1
        ? static_cast<double>(state / width_) / static_cast<double>(height_ - 1) : 0.0;
    const double c = width_ > 1
        ? static_cast<double>(state % width_) / static_cast<double>(width_ - 1) : 0.0;
    for (int k = 0; k < spec_.state_dim; ++k) {
      out[static_cast<std::size_t>(k)] = (k % 2 == 0) ? r : c;
    }
  }

  // The action index packed as fixed-width base-B digits, most significant
  // first, each normalized by (B-1). B is the smallest base that fits
  // actions_per_state in action_dim digits; with the row-major move order
  // the 9-action case reduces to the move's own (dr+1, dc+1) offsets.
  void encode_action(int action, std::span<double> out) const override {
    int rem = action;
    for (int k = spec_.action_dim - 1; k >= 0; --k) {
      out[static_cast<std::size_t>(k)] =
          static_cast<double>(rem % action_base_) / static_cast<double>(action_base_ - 1);
      rem /= action_base_;
    }
  }

  int goal_state() const { return goal_; }
  int grid_height() const { return height_; }
  int grid_width() const { return width_; }
  int action_encoding_base() const { return action_base_; }

 private:
  static long pow_int(int base, int exp) {
    long v = 1;
    for (int i = 0; i < exp; ++i) {
      v *= base;
      if (v > (1L << 40)) return v;  // already larger than any action count
    }
    return v;
  }

  // Reverse BFS from the goal; a state that cannot reach it makes the spec
  // infeasible (e.g. too few moves to cover both directions).
  void verify_reachability() const {
    const int n = spec_.state_space_size;
    std::vector<std::vector<int>> rev(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
      if (is_terminal(s)) continue;
      for (int a = 0; a < spec_.actions_per_state; ++a) {
        rev[static_cast<std::size_t>(step(s, a).next_state)].push_back(s);
      }
    }
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::deque<int> queue{goal_};
    seen[static_cast<std::size_t>(goal_)] = 1;
    while (!queue.empty()) {
      const int s = queue.front();
      queue.pop_front();
      for (int p : rev[static_cast<std::size_t>(s)]) {
        if (!seen[static_cast<std::size_t>(p)]) {
          seen[static_cast<std::size_t>(p)] = 1;
          queue.push_back(p);
        }
      }
    }
    if (std::count(seen.begin(), seen.end(), 1) != n) {
      throw std::invalid_argument(
          "make_grid: infeasible spec, some states cannot reach the goal");
    }
  }

  EnvSpec spec_;
  int height_ = 1;
  int width_ = 1;
  int goal_ = 0;
  int action_base_ = 2;
  std::vector<std::pair<int, int>> moves_;
};

}  // namespace

std::unique_ptr<Environment> make_chain(int n, double gamma) {
  return std::make_unique<ChainEnv>(n, gamma);
}

std::unique_ptr<Environment> make_grid(const EnvSpec& spec) {
  return std::make_unique<GridEnv>(spec);
}

std::string dump_model(const Environment& env) {
  ordered_json j;
  j["kind"] = env.kind();
  j["state_count"] = env.state_count();
  j["action_count"] = env.action_count();
  j["state_dim"] = env.state_dim();
  j["action_dim"] = env.action_dim();
  j["gamma_cap"] = env.gamma_cap();
  j["max_reward"] = 1.0 - env.gamma_cap();

  ordered_json transitions = ordered_json::array();
  for (int s = 0; s < env.state_count(); ++s) {
    ordered_json row = ordered_json::array();
    for (int a = 0; a < env.action_count(); ++a) {
      const StepResult r = env.step(s, a);
      row.push_back({{"next", r.next_state}, {"reward", r.reward}, {"terminal", r.terminal}});
    }
    transitions.push_back(std::move(row));
  }
  j["transitions"] = std::move(transitions);

  ordered_json encodings = ordered_json::array();
  for (int s = 0; s < env.state_count(); ++s) {
    std::vector<double> enc(static_cast<std::size_t>(env.state_dim()));
    env.encode_state(s, enc);
    encodings.push_back(enc);
  }
  j["state_encodings"] = std::move(encodings);

  ordered_json action_encodings = ordered_json::array();
  for (int a = 0; a < env.action_count(); ++a) {
    std::vector<double> enc(static_cast<std::size_t>(env.action_dim()));
    env.encode_action(a, enc);
    action_encodings.push_back(enc);
  }
  j["action_encodings"] = std::move(action_encodings);

  return j.dump(2);
}

}  // namespace qlacc

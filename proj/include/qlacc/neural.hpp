#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qlacc/activation.hpp"
#include "qlacc/fixedpoint.hpp"
#include "qlacc/rng.hpp"

namespace qlacc {

enum class Backend { fixed_point, floating_point };

/// Weight-update rule. `textbook` scales every weight change by the source
/// neuron's output (gradient-correct); `literal_rate` updates single-neuron
/// weights by C*delta alone, reproducing the datapath's single-neuron update
/// block as published. Multi-layer updates are identical under both rules.
enum class UpdateRule { textbook, literal_rate };

struct Topology {
  int input_dim = 2;
  std::vector<int> hidden_sizes;
  static constexpr int output_dim = 1;

  /// [input_dim, hidden..., 1]
  std::vector<int> layer_sizes() const;
  /// Input passthroughs count as neurons, so a 6-input 4-hidden net has 11.
  int neuron_count() const;
  bool is_perceptron() const { return hidden_sizes.empty(); }

  bool operator==(const Topology&) const = default;
};

/// Pre-activations and outputs captured during one forward pass.
/// outputs[0] is the input vector; preacts[l] pairs with outputs[l+1].
/// The raw_* arrays carry the exact fixed-point payloads on that backend.
struct ForwardTrace {
  std::vector<std::vector<double>> preacts;
  std::vector<std::vector<double>> outputs;
  std::vector<std::vector<std::int64_t>> raw_preacts;
  std::vector<std::vector<std::int64_t>> raw_outputs;

  double q() const { return outputs.back().front(); }
};

/// Per-neuron backpropagated errors for each non-input layer; d[l] pairs
/// with layer_sizes[l+1].
struct Deltas {
  std::vector<std::vector<double>> d;
  std::vector<std::vector<std::int64_t>> raw;
};

/// A perceptron or MLP with one output neuron emitting the Q estimate.
///
/// On the fixed-point backend the raw integer arrays are authoritative and
/// every arithmetic step goes through the saturating fixed-point ops; on the
/// floating-point backend the double arrays are authoritative.
struct Network {
  Topology topo;
  Backend backend = Backend::floating_point;
  QFormat fmt;
  bool float_uses_lut = false;
  std::shared_ptr<const ActivationSet> acts;

  // weights[l] is row-major [layer_sizes[l] x layer_sizes[l+1]]:
  // w(i, j) = weights[l][i * cols + j], source neuron i to dest neuron j.
  std::vector<std::vector<double>> w;
  std::vector<std::vector<double>> b;
  std::vector<std::vector<std::int64_t>> w_raw;
  std::vector<std::vector<std::int64_t>> b_raw;

  mutable OverflowCounter overflow;
  mutable std::uint64_t feedforward_calls = 0;

  int layer_count() const { return static_cast<int>(topo.hidden_sizes.size()) + 1; }
  bool is_perceptron() const { return topo.is_perceptron(); }

  double weight(int layer, int i, int j) const;
  double bias(int layer, int j) const;
};

/// Weights and biases drawn i.i.d. uniform in [-scale, scale] from the seed.
/// The same (topology, seed, scale) always yields bit-identical parameters,
/// regardless of backend (fixed-point nets quantize the same draws).
Network init_network(const Topology& topo, Backend backend, const QFormat& fmt,
                     std::shared_ptr<const ActivationSet> acts,
                     bool float_uses_lut, std::uint64_t seed, double scale);

/// Forward pass: per layer, sigma_j = sum_i O_i w_ij + b_j (multiply-
/// accumulate semantics on the fixed backend) and O_j = activation(sigma_j).
ForwardTrace feedforward(const Network& net, std::span<const double> input);

/// delta_out = f'(sigma_out) * q_error. Returns a Deltas with only the
/// output layer populated (complete for a perceptron).
Deltas output_delta(const Network& net, const ForwardTrace& trace, double q_error);

/// Backward recursion delta_i = f'(sigma_i) * sum_j delta_j w_ij filling the
/// hidden layers of `deltas` in place.
void hidden_deltas(const Network& net, const ForwardTrace& trace, Deltas& deltas);

/// output_delta + hidden_deltas in one call.
Deltas backprop(const Network& net, const ForwardTrace& trace, double q_error);

/// Applies dW_ij = C * O_i * delta_j and db_j = C * delta_j (textbook), or
/// dW = C * delta for single-neuron nets under literal_rate. Fixed-point
/// nets use saturating adds and count overflows.
void apply_update(Network& net, const ForwardTrace& trace, const Deltas& deltas,
                  double c_rate, UpdateRule rule);

/// Compares the analytic gradient of 0.5*(target - Q)^2 against central
/// finite differences (step 1e-5) over every weight and bias; returns the
/// maximum relative error. Floating-point backend with exact activations only.
double gradient_check(const Network& net, std::span<const double> input, double target);

/// Snapshot round-trips bit-exactly: raw integers on the fixed backend,
/// shortest round-trip decimals on the floating backend.
std::string network_to_json(const Network& net);
Network network_from_json(const std::string& text,
                          std::shared_ptr<const ActivationSet> acts);

}  // namespace qlacc

#include "qlacc/neural.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace qlacc {

namespace {

using ordered_json = nlohmann::ordered_json;

void require_float_backend(const Network& net, const char* what) {
  if (net.backend != Backend::floating_point) {
    throw std::invalid_argument(std::string(what) + " requires the floating-point backend");
  }
}

const ActivationSet& luts(const Network& net) {
  if (!net.acts) {
    throw std::logic_error("network has no activation tables");
  }
  return *net.acts;
}

double activate(const Network& net, double preact) {
  if (net.float_uses_lut) return luts(net).sigmoid.eval(preact);
  return exact_sigmoid(preact);
}

double activation_slope(const Network& net, double preact) {
  if (net.float_uses_lut) return luts(net).derivative.eval(preact);
  return exact_sigmoid_derivative(preact);
}

}  // namespace

std::vector<int> Topology::layer_sizes() const {
  std::vector<int> sizes;
  sizes.reserve(hidden_sizes.size() + 2);
  sizes.push_back(input_dim);
  sizes.insert(sizes.end(), hidden_sizes.begin(), hidden_sizes.end());
  sizes.push_back(output_dim);
  return sizes;
}

int Topology::neuron_count() const {
  int n = input_dim + output_dim;
  for (int h : hidden_sizes) n += h;
  return n;
}

double Network::weight(int layer, int i, int j) const {
  const int cols = topo.layer_sizes()[layer + 1];
  if (backend == Backend::fixed_point) {
    return decode(FxValue{w_raw[layer][static_cast<std::size_t>(i) * cols + j], fmt});
  }
  return w[layer][static_cast<std::size_t>(i) * cols + j];
}

double Network::bias(int layer, int j) const {
  if (backend == Backend::fixed_point) {
    return decode(FxValue{b_raw[layer][j], fmt});
  }
  return b[layer][j];
}

Network init_network(const Topology& topo, Backend backend, const QFormat& fmt,
                     std::shared_ptr<const ActivationSet> acts,
                     bool float_uses_lut, std::uint64_t seed, double scale) {
  if (topo.input_dim < 1) {
    throw std::invalid_argument("init_network: input_dim must be >= 1");
  }
  for (int h : topo.hidden_sizes) {
    if (h < 1) throw std::invalid_argument("init_network: hidden sizes must be >= 1");
  }
  if (!(scale >= 0.0)) {
    throw std::invalid_argument("init_network: scale must be >= 0");
  }
  if (backend == Backend::fixed_point && !acts) {
    throw std::invalid_argument("init_network: fixed-point backend needs activation tables");
  }

  Network net;
  net.topo = topo;
  net.backend = backend;
  net.fmt = fmt;
  net.float_uses_lut = float_uses_lut;
  net.acts = std::move(acts);

  const std::vector<int> sizes = topo.layer_sizes();
  const int layers = static_cast<int>(sizes.size()) - 1;
  net.w.resize(layers);
  net.b.resize(layers);
  if (backend == Backend::fixed_point) {
    net.w_raw.resize(layers);
    net.b_raw.resize(layers);
  }

  Rng rng(seed);
  // Draw order is fixed: per layer, all weights row-major, then biases.
  // Both backends consume the identical stream; fixed-point quantizes it.
  for (int l = 0; l < layers; ++l) {
    const std::size_t n_w = static_cast<std::size_t>(sizes[l]) * sizes[l + 1];
    const std::size_t n_b = static_cast<std::size_t>(sizes[l + 1]);
    net.w[l].resize(n_w);
    net.b[l].resize(n_b);
    for (std::size_t k = 0; k < n_w; ++k) {
      net.w[l][k] = uniform_double(rng, -scale, scale);
    }
    for (std::size_t k = 0; k < n_b; ++k) {
      net.b[l][k] = uniform_double(rng, -scale, scale);
    }
    if (backend == Backend::fixed_point) {
      net.w_raw[l].resize(n_w);
      net.b_raw[l].resize(n_b);
      for (std::size_t k = 0; k < n_w; ++k) {
        net.w_raw[l][k] = encode(net.w[l][k], fmt, &net.overflow).raw;
      }
      for (std::size_t k = 0; k < n_b; ++k) {
        net.b_raw[l][k] = encode(net.b[l][k], fmt, &net.overflow).raw;
      }
      net.w[l].clear();
      net.b[l].clear();
    }
  }
  return net;
}

ForwardTrace feedforward(const Network& net, std::span<const double> input) {
  const std::vector<int> sizes = net.topo.layer_sizes();
  if (static_cast<int>(input.size()) != sizes.front()) {
    throw std::invalid_argument("feedforward: input dimension mismatch");
  }
  ++net.feedforward_calls;

  const int layers = net.layer_count();
  ForwardTrace trace;
  trace.preacts.resize(layers);
  trace.outputs.resize(layers + 1);
  trace.outputs[0].assign(input.begin(), input.end());

  if (net.backend == Backend::floating_point) {
    for (int l = 0; l < layers; ++l) {
      const int rows = sizes[l];
      const int cols = sizes[l + 1];
      trace.preacts[l].resize(cols);
      trace.outputs[l + 1].resize(cols);
      for (int j = 0; j < cols; ++j) {
        double sigma = net.b[l][j];
        for (int i = 0; i < rows; ++i) {
          sigma += trace.outputs[l][i] * net.w[l][static_cast<std::size_t>(i) * cols + j];
        }
        trace.preacts[l][j] = sigma;
        trace.outputs[l + 1][j] = activate(net, sigma);
      }
    }
    return trace;
  }

  // Fixed-point path: encode the input once, then chain raw payloads through
  // MAC + LUT reads exactly as the datapath would.
  const QFormat& fmt = net.fmt;
  trace.raw_preacts.resize(layers);
  trace.raw_outputs.resize(layers + 1);
  trace.raw_outputs[0].resize(input.size());
  for (std::size_t i = 0; i < input.size(); ++i) {
    trace.raw_outputs[0][i] = encode(input[i], fmt, &net.overflow).raw;
    trace.outputs[0][i] = decode(FxValue{trace.raw_outputs[0][i], fmt});
  }
  const ActivationLut& sig_lut = luts(net).sigmoid;
  for (int l = 0; l < layers; ++l) {
    const int rows = sizes[l];
    const int cols = sizes[l + 1];
    trace.preacts[l].resize(cols);
    trace.outputs[l + 1].resize(cols);
    trace.raw_preacts[l].resize(cols);
    trace.raw_outputs[l + 1].resize(cols);
    for (int j = 0; j < cols; ++j) {
      WideAccumulator acc(fmt);
      for (int i = 0; i < rows; ++i) {
        acc.mac(FxValue{trace.raw_outputs[l][i], fmt},
                FxValue{net.w_raw[l][static_cast<std::size_t>(i) * cols + j], fmt});
      }
      acc.add(FxValue{net.b_raw[l][j], fmt});
      const FxValue sigma = acc.readout(&net.overflow);
      const FxValue out = sig_lut.eval_fx(sigma);
      trace.raw_preacts[l][j] = sigma.raw;
      trace.raw_outputs[l + 1][j] = out.raw;
      trace.preacts[l][j] = decode(sigma);
      trace.outputs[l + 1][j] = decode(out);
    }
  }
  return trace;
}

Deltas output_delta(const Network& net, const ForwardTrace& trace, double q_error) {
  const int layers = net.layer_count();
  Deltas deltas;
  deltas.d.resize(layers);
  const std::vector<int> sizes = net.topo.layer_sizes();
  for (int l = 0; l < layers; ++l) deltas.d[l].assign(sizes[l + 1], 0.0);

  if (net.backend == Backend::floating_point) {
    deltas.d.back()[0] = activation_slope(net, trace.preacts.back()[0]) * q_error;
    return deltas;
  }

  deltas.raw.resize(layers);
  for (int l = 0; l < layers; ++l) deltas.raw[l].assign(sizes[l + 1], 0);
  const QFormat& fmt = net.fmt;
  const FxValue err = encode(q_error, fmt, &net.overflow);
  const FxValue slope = luts(net).derivative.eval_fx(FxValue{trace.raw_preacts.back()[0], fmt});
  const FxValue d = mul(slope, err, &net.overflow);
  deltas.raw.back()[0] = d.raw;
  deltas.d.back()[0] = decode(d);
  return deltas;
}

void hidden_deltas(const Network& net, const ForwardTrace& trace, Deltas& deltas) {
  const std::vector<int> sizes = net.topo.layer_sizes();
  const int layers = net.layer_count();
  const QFormat& fmt = net.fmt;

  for (int l = layers - 2; l >= 0; --l) {
    const int n = sizes[l + 1];        // neurons whose deltas we fill
    const int cols = sizes[l + 2];     // next layer's width
    for (int i = 0; i < n; ++i) {
      if (net.backend == Backend::floating_point) {
        double sum = 0.0;
        for (int j = 0; j < cols; ++j) {
          sum += deltas.d[l + 1][j] * net.w[l + 1][static_cast<std::size_t>(i) * cols + j];
        }
        deltas.d[l][i] = activation_slope(net, trace.preacts[l][i]) * sum;
      } else {
        WideAccumulator acc(fmt);
        for (int j = 0; j < cols; ++j) {
          acc.mac(FxValue{deltas.raw[l + 1][j], fmt},
                  FxValue{net.w_raw[l + 1][static_cast<std::size_t>(i) * cols + j], fmt});
        }
        const FxValue sum = acc.readout(&net.overflow);
        const FxValue slope = luts(net).derivative.eval_fx(FxValue{trace.raw_preacts[l][i], fmt});
        const FxValue d = mul(slope, sum, &net.overflow);
        deltas.raw[l][i] = d.raw;
        deltas.d[l][i] = decode(d);
      }
    }
  }
}

Deltas backprop(const Network& net, const ForwardTrace& trace, double q_error) {
  Deltas deltas = output_delta(net, trace, q_error);
  hidden_deltas(net, trace, deltas);
  return deltas;
}

void apply_update(Network& net, const ForwardTrace& trace, const Deltas& deltas,
                  double c_rate, UpdateRule rule) {
  const std::vector<int> sizes = net.topo.layer_sizes();
  const int layers = net.layer_count();
  const bool no_input_factor = (rule == UpdateRule::literal_rate) && net.is_perceptron();
  const QFormat& fmt = net.fmt;

  if (net.backend == Backend::floating_point) {
    for (int l = 0; l < layers; ++l) {
      const int rows = sizes[l];
      const int cols = sizes[l + 1];
      for (int j = 0; j < cols; ++j) {
        const double scaled = c_rate * deltas.d[l][j];
        net.b[l][j] += scaled;
        for (int i = 0; i < rows; ++i) {
          const double dw = no_input_factor ? scaled : scaled * trace.outputs[l][i];
          net.w[l][static_cast<std::size_t>(i) * cols + j] += dw;
        }
      }
    }
    return;
  }

  const FxValue c = encode(c_rate, fmt, &net.overflow);
  for (int l = 0; l < layers; ++l) {
    const int rows = sizes[l];
    const int cols = sizes[l + 1];
    for (int j = 0; j < cols; ++j) {
      // One C*delta product per neuron, shared by its bias and weights.
      const FxValue scaled = mul(c, FxValue{deltas.raw[l][j], fmt}, &net.overflow);
      const FxValue nb = add_sat(FxValue{net.b_raw[l][j], fmt}, scaled, &net.overflow);
      net.b_raw[l][j] = nb.raw;
      for (int i = 0; i < rows; ++i) {
        FxValue dw = scaled;
        if (!no_input_factor) {
          dw = mul(FxValue{trace.raw_outputs[l][i], fmt}, scaled, &net.overflow);
        }
        const std::size_t k = static_cast<std::size_t>(i) * cols + j;
        net.w_raw[l][k] = add_sat(FxValue{net.w_raw[l][k], fmt}, dw, &net.overflow).raw;
      }
    }
  }
}

double gradient_check(const Network& net, std::span<const double> input, double target) {
  require_float_backend(net, "gradient_check");
  if (net.float_uses_lut) {
    throw std::invalid_argument("gradient_check requires exact activations (float_uses_lut=false)");
  }

  const auto loss = [&](const Network& n) {
    const double q = feedforward(n, input).q();
    return 0.5 * (target - q) * (target - q);
  };

  const ForwardTrace trace = feedforward(net, input);
  const Deltas deltas = backprop(net, trace, target - trace.q());

  const std::vector<int> sizes = net.topo.layer_sizes();
  constexpr double kStep = 1e-5;
  constexpr double kFloor = 1e-6;
  double max_rel = 0.0;

  Network probe = net;
  for (int l = 0; l < net.layer_count(); ++l) {
    const int rows = sizes[l];
    const int cols = sizes[l + 1];
    for (int j = 0; j < cols; ++j) {
      for (int i = 0; i <= rows; ++i) {
        // i == rows probes the bias; otherwise weight (i, j).
        const bool is_bias = (i == rows);
        const std::size_t k = is_bias ? 0 : static_cast<std::size_t>(i) * cols + j;
        double& slot = is_bias ? probe.b[l][j] : probe.w[l][k];
        const double saved = slot;
        slot = saved + kStep;
        const double lp = loss(probe);
        slot = saved - kStep;
        const double lm = loss(probe);
        slot = saved;

        const double numeric = (lp - lm) / (2.0 * kStep);
        // The update direction O_i * delta_j descends the loss, so its
        // negation is the analytic gradient.
        const double analytic =
            is_bias ? -deltas.d[l][j] : -trace.outputs[l][i] * deltas.d[l][j];
        const double denom = std::max({std::fabs(analytic), std::fabs(numeric), kFloor});
        max_rel = std::max(max_rel, std::fabs(analytic - numeric) / denom);
      }
    }
  }
  return max_rel;
}

std::string network_to_json(const Network& net) {
  ordered_json j;
  j["topology"] = {{"input_dim", net.topo.input_dim},
                   {"hidden_sizes", net.topo.hidden_sizes}};
  j["backend"] = net.backend == Backend::fixed_point ? "fixed" : "float";
  j["qformat"] = {{"word_bits", net.fmt.word_bits}, {"frac_bits", net.fmt.frac_bits}};
  j["float_uses_lut"] = net.float_uses_lut;
  if (net.backend == Backend::fixed_point) {
    j["weights_raw"] = net.w_raw;
    j["biases_raw"] = net.b_raw;
  } else {
    j["weights"] = net.w;
    j["biases"] = net.b;
  }
  return j.dump();
}

Network network_from_json(const std::string& text,
                          std::shared_ptr<const ActivationSet> acts) {
  const ordered_json j = ordered_json::parse(text);
  Network net;
  net.topo.input_dim = j.at("topology").at("input_dim").get<int>();
  net.topo.hidden_sizes = j.at("topology").at("hidden_sizes").get<std::vector<int>>();
  const std::string backend = j.at("backend").get<std::string>();
  net.backend = backend == "fixed" ? Backend::fixed_point : Backend::floating_point;
  net.fmt = QFormat(j.at("qformat").at("word_bits").get<int>(),
                    j.at("qformat").at("frac_bits").get<int>());
  net.float_uses_lut = j.at("float_uses_lut").get<bool>();
  net.acts = std::move(acts);
  if (net.backend == Backend::fixed_point) {
    net.w_raw = j.at("weights_raw").get<std::vector<std::vector<std::int64_t>>>();
    net.b_raw = j.at("biases_raw").get<std::vector<std::vector<std::int64_t>>>();
    net.w.resize(net.w_raw.size());
    net.b.resize(net.b_raw.size());
    if (!net.acts) {
      throw std::invalid_argument("network_from_json: fixed-point snapshot needs activation tables");
    }
  } else {
    net.w = j.at("weights").get<std::vector<std::vector<double>>>();
    net.b = j.at("biases").get<std::vector<std::vector<double>>>();
  }
  return net;
}

}  // namespace qlacc

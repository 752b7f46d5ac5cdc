#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "qlacc/fixedpoint.hpp"

namespace qlacc {

/// Numerically stable logistic function 1 / (1 + e^-x).
double exact_sigmoid(double x);

/// s * (1 - s) with s = exact_sigmoid(x). Peaks at 0.25 for x = 0.
double exact_sigmoid_derivative(double x);

enum class LutKind { sigmoid, sigmoid_derivative };

/// ROM-style lookup table over [lo, hi): `depth` cells, each storing the
/// function value at its left edge. Reads are direct indexed (no
/// interpolation); inputs outside the range clamp to the first/last entry.
///
/// Built with a QFormat the entries are quantized through encode(), which is
/// what the fixed-point datapath reads. Built without one the entries keep
/// full double precision for the floating-point backend.
class ActivationLut {
 public:
  static ActivationLut build(LutKind kind, double lo, double hi,
                             std::size_t depth,
                             const std::optional<QFormat>& fmt = std::nullopt);

  double eval(double x) const { return entries_[index_of(x)]; }
  FxValue eval_fx(const FxValue& x) const;

  std::size_t index_of(double x) const;

  LutKind kind() const { return kind_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  std::size_t depth() const { return entries_.size(); }
  bool quantized() const { return fmt_.has_value(); }
  const QFormat& format() const { return *fmt_; }

  /// Entry value as stored (decoded when quantized).
  double entry(std::size_t k) const { return entries_[k]; }
  std::int64_t raw_entry(std::size_t k) const { return raw_[k]; }
  /// Input coordinate of cell k's left edge.
  double edge(std::size_t k) const;

 private:
  ActivationLut() = default;

  LutKind kind_ = LutKind::sigmoid;
  double lo_ = -8.0;
  double hi_ = 8.0;
  std::optional<QFormat> fmt_;
  std::vector<double> entries_;
  std::vector<std::int64_t> raw_;  // populated when quantized
};

/// The sigmoid/derivative table pair one backend instance reads from.
struct ActivationSet {
  ActivationLut sigmoid;
  ActivationLut derivative;

  static ActivationSet build(double lo, double hi, std::size_t depth,
                             const std::optional<QFormat>& fmt = std::nullopt);
};

}  // namespace qlacc

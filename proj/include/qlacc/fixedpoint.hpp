#pragma once

#include <cstdint>
#include <stdexcept>

namespace qlacc {

using int128 = __int128;

/// Signed two's-complement fixed-point format: `word_bits` total bits of
/// which `frac_bits` are fractional. Resolution (1 ulp) is 2^-frac_bits and
/// the representable range is [-2^(w-f-1), 2^(w-f-1) - 2^-f].
struct QFormat {
  int word_bits = 32;
  int frac_bits = 16;

  QFormat() = default;
  QFormat(int word, int frac);

  std::int64_t max_raw() const;
  std::int64_t min_raw() const;
  double resolution() const;  // 2^-frac_bits
  double max_value() const;
  double min_value() const;

  bool operator==(const QFormat&) const = default;
};

/// Counts saturation events. One instance per engine/run, never global;
/// training reports surface the count so silent clipping is visible.
class OverflowCounter {
 public:
  void record() noexcept { ++count_; }
  std::uint64_t count() const noexcept { return count_; }
  void reset() noexcept { count_ = 0; }

 private:
  std::uint64_t count_ = 0;
};

/// A fixed-point value: raw integer payload interpreted under `fmt`.
struct FxValue {
  std::int64_t raw = 0;
  QFormat fmt;
};

/// Round-to-nearest of x * 2^frac_bits, saturated to the representable
/// range. Total: out-of-range input clips to min/max (and bumps `ovf`),
/// NaN encodes to zero.
FxValue encode(double x, const QFormat& fmt, OverflowCounter* ovf = nullptr);

/// Exact value raw * 2^-frac_bits.
double decode(const FxValue& v);

/// Exact integer sum, saturated to word_bits. Formats must match.
FxValue add_sat(const FxValue& a, const FxValue& b, OverflowCounter* ovf = nullptr);

/// Double-width product, arithmetic right shift by frac_bits (floor
/// rounding, so results bias downward), then saturation. Formats must match.
FxValue mul(const FxValue& a, const FxValue& b, OverflowCounter* ovf = nullptr);

/// Two's-complement negation; the most negative value saturates to max.
FxValue negate(const FxValue& v, OverflowCounter* ovf = nullptr);

/// Multiply-accumulate register holding the full double-width sum of
/// products. No intermediate rounding: readout() shifts and saturates once,
/// matching DSP-block accumulate-then-truncate behaviour.
class WideAccumulator {
 public:
  explicit WideAccumulator(const QFormat& fmt) : fmt_(fmt) {}

  void mac(const FxValue& a, const FxValue& b);

  /// Adds a value at single width (e.g. a bias term), shifted into the
  /// accumulator's product scale. Exact.
  void add(const FxValue& v);

  FxValue readout(OverflowCounter* ovf = nullptr) const;

  const QFormat& format() const { return fmt_; }

 private:
  int128 acc_ = 0;
  QFormat fmt_;
};

}  // namespace qlacc

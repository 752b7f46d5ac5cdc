#include "qlacc/fixedpoint.hpp"

#include <cmath>

namespace qlacc {

namespace {

std::int64_t clamp_raw(int128 value, const QFormat& fmt, OverflowCounter* ovf) {
  const std::int64_t hi = fmt.max_raw();
  const std::int64_t lo = fmt.min_raw();
  if (value > hi) {
    if (ovf) ovf->record();
    return hi;
  }
  if (value < lo) {
    if (ovf) ovf->record();
    return lo;
  }
  return static_cast<std::int64_t>(value);
}

void require_same_format(const FxValue& a, const FxValue& b) {
  if (!(a.fmt == b.fmt)) {
    throw std::invalid_argument("fixed-point format mismatch");
  }
}

}  // namespace

QFormat::QFormat(int word, int frac) : word_bits(word), frac_bits(frac) {
  if (word < 8 || word > 64) {
    throw std::invalid_argument("QFormat: word_bits must be in [8, 64]");
  }
  if (frac < 0 || frac >= word) {
    throw std::invalid_argument("QFormat: frac_bits must be in [0, word_bits)");
  }
}

std::int64_t QFormat::max_raw() const {
  if (word_bits == 64) return INT64_MAX;
  return (std::int64_t{1} << (word_bits - 1)) - 1;
}

std::int64_t QFormat::min_raw() const {
  if (word_bits == 64) return INT64_MIN;
  return -(std::int64_t{1} << (word_bits - 1));
}

double QFormat::resolution() const { return std::exp2(-frac_bits); }

double QFormat::max_value() const {
  return static_cast<double>(max_raw()) * resolution();
}

double QFormat::min_value() const {
  return static_cast<double>(min_raw()) * resolution();
}

FxValue encode(double x, const QFormat& fmt, OverflowCounter* ovf) {
  if (std::isnan(x)) {
    if (ovf) ovf->record();
    return FxValue{0, fmt};
  }
  // Scale in extended precision so the saturation comparison is reliable
  // even near the word boundary.
  const long double scaled = static_cast<long double>(x) * std::exp2l(fmt.frac_bits);
  const long double hi = static_cast<long double>(fmt.max_raw());
  const long double lo = static_cast<long double>(fmt.min_raw());
  if (scaled >= hi + 0.5L) {
    if (ovf) ovf->record();
    return FxValue{fmt.max_raw(), fmt};
  }
  if (scaled <= lo - 0.5L) {
    if (ovf) ovf->record();
    return FxValue{fmt.min_raw(), fmt};
  }
  std::int64_t raw = static_cast<std::int64_t>(llroundl(scaled));
  if (raw > fmt.max_raw()) raw = fmt.max_raw();
  if (raw < fmt.min_raw()) raw = fmt.min_raw();
  return FxValue{raw, fmt};
}

double decode(const FxValue& v) {
  return static_cast<double>(v.raw) * v.fmt.resolution();
}

FxValue add_sat(const FxValue& a, const FxValue& b, OverflowCounter* ovf) {
  require_same_format(a, b);
  const int128 sum = static_cast<int128>(a.raw) + static_cast<int128>(b.raw);
  return FxValue{clamp_raw(sum, a.fmt, ovf), a.fmt};
}

FxValue mul(const FxValue& a, const FxValue& b, OverflowCounter* ovf) {
  require_same_format(a, b);
  const int128 prod = static_cast<int128>(a.raw) * static_cast<int128>(b.raw);
  // Arithmetic right shift floors toward -inf for negative products.
  const int128 shifted = prod >> a.fmt.frac_bits;
  return FxValue{clamp_raw(shifted, a.fmt, ovf), a.fmt};
}

FxValue negate(const FxValue& v, OverflowCounter* ovf) {
  return FxValue{clamp_raw(-static_cast<int128>(v.raw), v.fmt, ovf), v.fmt};
}

void WideAccumulator::mac(const FxValue& a, const FxValue& b) {
  if (!(a.fmt == fmt_) || !(b.fmt == fmt_)) {
    throw std::invalid_argument("fixed-point format mismatch");
  }
  acc_ += static_cast<int128>(a.raw) * static_cast<int128>(b.raw);
}

void WideAccumulator::add(const FxValue& v) {
  if (!(v.fmt == fmt_)) {
    throw std::invalid_argument("fixed-point format mismatch");
  }
  acc_ += static_cast<int128>(v.raw) << fmt_.frac_bits;
}

FxValue WideAccumulator::readout(OverflowCounter* ovf) const {
  const int128 shifted = acc_ >> fmt_.frac_bits;
  return FxValue{clamp_raw(shifted, fmt_, ovf), fmt_};
}

}  // namespace qlacc

#include "qlacc/activation.hpp"

#include <cmath>
#include <stdexcept>

namespace qlacc {

double exact_sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double exact_sigmoid_derivative(double x) {
  const double s = exact_sigmoid(x);
  return s * (1.0 - s);
}

ActivationLut ActivationLut::build(LutKind kind, double lo, double hi,
                                   std::size_t depth,
                                   const std::optional<QFormat>& fmt) {
  if (!(lo < hi)) {
    throw std::invalid_argument("ActivationLut: lo must be < hi");
  }
  if (depth < 2 || (depth & (depth - 1)) != 0) {
    throw std::invalid_argument("ActivationLut: depth must be a power of two >= 2");
  }

  ActivationLut lut;
  lut.kind_ = kind;
  lut.lo_ = lo;
  lut.hi_ = hi;
  lut.fmt_ = fmt;
  lut.entries_.resize(depth);
  if (fmt) lut.raw_.resize(depth);

  const double cell = (hi - lo) / static_cast<double>(depth);
  for (std::size_t k = 0; k < depth; ++k) {
    const double x = lo + static_cast<double>(k) * cell;
    const double y = (kind == LutKind::sigmoid) ? exact_sigmoid(x)
                                                : exact_sigmoid_derivative(x);
    if (fmt) {
      const FxValue q = encode(y, *fmt);
      lut.raw_[k] = q.raw;
      lut.entries_[k] = decode(q);
    } else {
      lut.entries_[k] = y;
    }
  }
  return lut;
}

std::size_t ActivationLut::index_of(double x) const {
  const std::size_t depth = entries_.size();
  const double pos = (x - lo_) * static_cast<double>(depth) / (hi_ - lo_);
  if (!(pos > 0.0)) return 0;  // below range (or NaN) reads the first entry
  if (pos >= static_cast<double>(depth)) return depth - 1;
  return static_cast<std::size_t>(pos);
}

FxValue ActivationLut::eval_fx(const FxValue& x) const {
  if (!fmt_) {
    throw std::logic_error("ActivationLut: fixed-point read from an unquantized table");
  }
  const std::size_t k = index_of(decode(x));
  return FxValue{raw_[k], *fmt_};
}

double ActivationLut::edge(std::size_t k) const {
  return lo_ + static_cast<double>(k) * (hi_ - lo_) / static_cast<double>(depth());
}

ActivationSet ActivationSet::build(double lo, double hi, std::size_t depth,
                                   const std::optional<QFormat>& fmt) {
  return ActivationSet{
      ActivationLut::build(LutKind::sigmoid, lo, hi, depth, fmt),
      ActivationLut::build(LutKind::sigmoid_derivative, lo, hi, depth, fmt),
  };
}

}  // namespace qlacc

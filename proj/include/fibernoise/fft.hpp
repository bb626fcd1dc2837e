#pragma once

#include "fibernoise/types.hpp"

namespace fibernoise {

/// FFTW-backed 1-D complex transforms of a fixed length.
///
/// `to_spectrum` computes out_k = sum_n in_n exp(+2 pi i k n / N), matching the
/// exp(+i W tau) sign used throughout; `to_time` is its exact inverse, including the
/// 1/N factor. Plans are cached per length and shared, so instances are cheap to create
/// and may be used concurrently from different threads.
class Fft {
 public:
  explicit Fft(int size);

  int size() const { return size_; }

  void to_spectrum(const ComplexArray& in, ComplexArray& out) const;
  void to_time(const ComplexArray& in, ComplexArray& out) const;

  ComplexArray to_spectrum(const ComplexArray& in) const;
  ComplexArray to_time(const ComplexArray& in) const;

 private:
  int size_;
  void* plus_plan_;
  void* minus_plan_;
};

}  // namespace fibernoise

#include "fibernoise/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

#include "fibernoise/errors.hpp"

namespace fibernoise {
namespace {

struct PlanPair {
  fftw_plan plus = nullptr;
  fftw_plan minus = nullptr;
};

// Plan creation is not thread-safe in FFTW; execution of an existing plan with the
// new-array interface is.
PlanPair plans_for(int size) {
  static std::mutex mutex;
  static std::map<int, PlanPair> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(size);
  if (it != cache.end()) return it->second;
  auto* in = fftw_alloc_complex(size);
  auto* out = fftw_alloc_complex(size);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  PlanPair pair;
  pair.plus = fftw_plan_dft_1d(size, in, out, FFTW_BACKWARD, flags);
  pair.minus = fftw_plan_dft_1d(size, in, out, FFTW_FORWARD, flags);
  fftw_free(in);
  fftw_free(out);
  cache.emplace(size, pair);
  return pair;
}

fftw_complex* as_fftw(const ComplexArray& a) {
  return reinterpret_cast<fftw_complex*>(const_cast<Complex*>(a.data()));
}

}  // namespace

Fft::Fft(int size) : size_(size) {
  require(size > 0, "FFT length must be positive");
  auto pair = plans_for(size);
  plus_plan_ = pair.plus;
  minus_plan_ = pair.minus;
}

void Fft::to_spectrum(const ComplexArray& in, ComplexArray& out) const {
  require(in.size() == size_, "FFT input length mismatch");
  out.resize(size_);
  if (in.data() == out.data()) {
    ComplexArray copy = in;
    fftw_execute_dft(static_cast<fftw_plan>(plus_plan_), as_fftw(copy), as_fftw(out));
  } else {
    fftw_execute_dft(static_cast<fftw_plan>(plus_plan_), as_fftw(in), as_fftw(out));
  }
}

void Fft::to_time(const ComplexArray& in, ComplexArray& out) const {
  require(in.size() == size_, "FFT input length mismatch");
  out.resize(size_);
  if (in.data() == out.data()) {
    ComplexArray copy = in;
    fftw_execute_dft(static_cast<fftw_plan>(minus_plan_), as_fftw(copy), as_fftw(out));
  } else {
    fftw_execute_dft(static_cast<fftw_plan>(minus_plan_), as_fftw(in), as_fftw(out));
  }
  out /= static_cast<double>(size_);
}

ComplexArray Fft::to_spectrum(const ComplexArray& in) const {
  ComplexArray out(size_);
  to_spectrum(in, out);
  return out;
}

ComplexArray Fft::to_time(const ComplexArray& in) const {
  ComplexArray out(size_);
  to_time(in, out);
  return out;
}

}  // namespace fibernoise

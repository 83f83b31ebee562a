#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace cgaug::detail {

// Owns an FFTW real-to-complex / complex-to-real plan pair of a fixed size.
// Plan creation is serialized; execution uses the new-array interface so a
// single plan may be shared by the calling thread for many frames.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return n_; }
  std::size_t bins() const { return n_ / 2 + 1; }

  // in.size() == size(); out.size() == bins().
  void forward(std::span<const double> in, std::span<std::complex<double>> out);
  // Unnormalized inverse: returns size() * x for x = inverse DFT.
  void inverse(std::span<const std::complex<double>> in, std::span<double> out);

 private:
  std::size_t n_;
  double* real_;
  fftw_complex* spec_;
  fftw_plan fwd_;
  fftw_plan inv_;
};

// Periodic Hann window of length n.
std::vector<double> hann_window(std::size_t n);

}  // namespace cgaug::detail

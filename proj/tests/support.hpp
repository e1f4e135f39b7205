#pragma once

#include "cfpm/image.hpp"

#include <cmath>
#include <cstdint>
#include <random>

namespace cfpm::test {

inline bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

/// Small deterministic generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double normal(double mean, double sd) { return std::normal_distribution<double>(mean, sd)(rng_); }

  Image image(Eigen::Index rows, Eigen::Index cols, double lo = 0.0, double hi = 1.0) {
    Image out(rows, cols);
    for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = uniform(lo, hi);
    return out;
  }

  /// Values drawn from `levels` evenly spaced steps, to provoke ties.
  Image quantized(Eigen::Index rows, Eigen::Index cols, int levels) {
    Image out(rows, cols);
    for (Eigen::Index i = 0; i < out.size(); ++i)
      out.data()[i] = static_cast<double>(integer(0, levels - 1)) / static_cast<double>(levels);
    return out;
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace cfpm::test

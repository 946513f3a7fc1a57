#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace dpmrm {

// Random number generator for the samplers. All variate transforms are
// implemented on top of a single uniform stream so that chains are
// bit-reproducible for a given seed, independent of the standard library's
// distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1).
  double uniform();
  // Uniform on [lo, hi).
  double uniform(double lo, double hi);
  // Uniform integer in [0, n).
  int uniform_int(int n);

  // Standard normal via Marsaglia's polar method (no cached spare).
  double normal();
  // Gamma(shape, rate) via Marsaglia-Tsang, shape boost for shape < 1.
  double gamma(double shape, double rate);
  double beta(double a, double b);
  // Dirichlet with per-coordinate concentrations; zero entries yield zeros.
  std::vector<double> dirichlet(const std::vector<double>& concentration);

  // Draw an index proportional to nonnegative weights. Inversion of the
  // cumulative sum in index order; `total` must equal the sum of weights.
  int categorical(const std::vector<double>& weights, double total);
  int categorical(const std::vector<double>& weights);
  // Draw proportional to exp(logw - max(logw)). Leaves logw untouched.
  int categorical_from_logs(const std::vector<double>& log_weights);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace dpmrm

#include "dpmrm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dpmrm/common.hpp"

namespace dpmrm {

double Rng::uniform() {
  // 53-bit mantissa in [0, 1).
  return (engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

int Rng::uniform_int(int n) {
  if (n <= 0) throw InvariantError("uniform_int: n must be positive");
  return static_cast<int>(uniform() * n) % n;
}

double Rng::normal() {
  // Polar method, rejection without caching the second variate.
  for (;;) {
    double u = 2.0 * uniform() - 1.0;
    double v = 2.0 * uniform() - 1.0;
    double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) {
      return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }
}

double Rng::gamma(double shape, double rate) {
  if (shape <= 0.0 || rate <= 0.0) {
    throw InvariantError("gamma: shape and rate must be positive");
  }
  if (shape < 1.0) {
    // Boost: X ~ Gamma(shape+1), X * U^{1/shape} ~ Gamma(shape).
    double u = uniform();
    while (u <= 0.0) u = uniform();
    return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
  }
  // Marsaglia-Tsang squeeze.
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
      return d * v / rate;
    }
  }
}

double Rng::beta(double a, double b) {
  double x = gamma(a, 1.0);
  double y = gamma(b, 1.0);
  return x / (x + y);
}

std::vector<double> Rng::dirichlet(const std::vector<double>& concentration) {
  std::vector<double> out(concentration.size(), 0.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < concentration.size(); ++i) {
    if (concentration[i] > 0.0) {
      out[i] = gamma(concentration[i], 1.0);
      sum += out[i];
    }
  }
  if (sum <= 0.0) throw InvariantError("dirichlet: no positive concentration");
  for (double& x : out) x /= sum;
  return out;
}

int Rng::categorical(const std::vector<double>& weights, double total) {
  if (weights.empty() || !(total > 0.0)) {
    throw InvariantError("categorical: empty support or nonpositive total");
  }
  double u = uniform() * total;
  double cum = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    cum += weights[i];
    if (u < cum) return static_cast<int>(i);
  }
  // Roundoff spill: last index with positive weight.
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0.0) return static_cast<int>(i);
  }
  throw InvariantError("categorical: all weights zero");
}

int Rng::categorical(const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  return categorical(weights, total);
}

int Rng::categorical_from_logs(const std::vector<double>& log_weights) {
  if (log_weights.empty()) throw InvariantError("categorical: empty support");
  double mx = -std::numeric_limits<double>::infinity();
  for (double lw : log_weights) mx = std::max(mx, lw);
  if (!std::isfinite(mx)) throw InvariantError("categorical: no finite log weight");
  std::vector<double> w(log_weights.size());
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp(log_weights[i] - mx);
    total += w[i];
  }
  return categorical(w, total);
}

}  // namespace dpmrm

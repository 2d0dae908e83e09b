#pragma once

// Independent reference computations shared by unit tests and the acceptance runner.

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "ndt/geometry.hpp"
#include "ndt/predict.hpp"

namespace ndt::oracle {

/// Dense point sampling: midpoints of n equal sub-intervals, strict interior test.
inline bool sampled_blocked(const Vec3& a, const Vec3& b, const Box& box, int n = 10000) {
  for (int k = 0; k < n; ++k) {
    const double t = (k + 0.5) / n;
    const double x = a.x + t * (b.x - a.x), y = a.y + t * (b.y - a.y), z = a.z + t * (b.z - a.z);
    if (box.footprint.contains_strict(x, y) && z > 0.0 && z < box.top) return true;
  }
  return false;
}

struct LosInstance {
  Vec3 a, b;
  Box box;
};

/// Random segment/box pairs over a 500 m square, a mix of hits and misses.
inline std::vector<LosInstance> los_instances(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(0.0, 500.0), size(10.0, 120.0), top(5.0, 40.0), z(0.5, 45.0);
  std::vector<LosInstance> out;
  for (std::size_t i = 0; i < count; ++i) {
    LosInstance in;
    const double x0 = pos(rng) * 0.8, y0 = pos(rng) * 0.8;
    in.box = Box{Rect{x0, y0, x0 + size(rng), y0 + size(rng)}, top(rng)};
    in.a = {pos(rng), pos(rng), z(rng)};
    in.b = {pos(rng), pos(rng), z(rng)};
    out.push_back(in);
  }
  return out;
}

/// Free-space gain in dB evaluated in long double straight from the Friis formula.
inline double friis_gain_db(double d, double f) {
  const long double pi = std::numbers::pi_v<long double>;
  const long double c = 299792458.0L;
  const long double ratio = 4.0L * pi * static_cast<long double>(std::max(d, 1.0)) * f / c;
  return static_cast<double>(-20.0L * std::log10(ratio));
}

/// Smallest |pre-activation| over hidden units and samples. Central differences
/// are only meaningful when no ReLU switches inside the probe interval.
inline double min_abs_preactivation(const Mlp& net, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd a = x;
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l + 1 < net.weights().size(); ++l) {
    const Eigen::MatrixXd z = (net.weights()[l] * a).colwise() + net.biases()[l];
    m = std::min(m, z.cwiseAbs().minCoeff());
    a = z.cwiseMax(0.0);
  }
  return m;
}

/// Largest relative error between analytic and central-difference gradients.
inline double gradient_check(const Mlp& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double h = 1e-4) {
  MlpGradients g;
  net.backward(x, y, g);
  std::vector<double> analytic;
  for (std::size_t l = 0; l < g.w.size(); ++l) {
    // parameter order: weights of layer l (column-major), then biases of layer l
    for (Eigen::Index k = 0; k < g.w[l].size(); ++k) analytic.push_back(g.w[l].data()[k]);
    for (Eigen::Index k = 0; k < g.b[l].size(); ++k) analytic.push_back(g.b[l].data()[k]);
  }
  Mlp probe = net;
  auto params = net.parameters();
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double keep = params[i];
    params[i] = keep + h;
    probe.set_parameters(params);
    const double up = probe.loss(x, y);
    params[i] = keep - h;
    probe.set_parameters(params);
    const double down = probe.loss(x, y);
    params[i] = keep;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-7});
    worst = std::max(worst, std::abs(numeric - analytic[i]) / denom);
  }
  return worst;
}

}  // namespace ndt::oracle

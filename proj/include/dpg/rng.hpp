#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace dpg {

// Deterministic splittable PRNG (splitmix64 core). Unlike the std::
// distribution templates, every draw here is specified bit-for-bit, so
// seeded runs reproduce across compilers and platforms. split(i) derives
// an independent stream for subtask i without sharing state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) {
    if (!(lo < hi)) throw std::invalid_argument("uniform: lo must be < hi");
    return lo + (hi - lo) * uniform();
  }

  // Exponential(1) via inversion; strictly positive.
  double exponential() { return -std::log1p(-uniform()); }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    if (lo > hi) throw std::invalid_argument("uniform_int: lo must be <= hi");
    auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next_u64() % span);
  }

  // Dirichlet(1, ..., 1): uniform over the simplex, via normalized
  // exponentials.
  std::vector<double> dirichlet_uniform(int k) {
    if (k < 1) throw std::invalid_argument("dirichlet_uniform: k must be >= 1");
    std::vector<double> x(static_cast<std::size_t>(k));
    double sum = 0.0;
    for (auto& xi : x) {
      xi = exponential();
      sum += xi;
    }
    for (auto& xi : x) xi /= sum;
    return x;
  }

  // Independent child stream; distinct indices give distinct streams.
  Rng split(std::uint64_t index) const {
    Rng child(state_ ^ (0x5851f42d4c957f2dULL * (index + 1)));
    child.next_u64();
    return child;
  }

 private:
  std::uint64_t state_;
};

}  // namespace dpg

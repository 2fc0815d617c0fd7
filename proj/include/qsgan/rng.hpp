#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <sstream>
#include <string>

#include "qsgan/error.hpp"

namespace qsgan {

// Deterministic random source. mt19937_64 output is bit-exact across
// implementations; the distribution helpers are hand-rolled because the
// standard library's distributions are not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : eng_(seed) {}

  std::uint64_t raw() { return eng_(); }

  // uniform in [0, 1)
  double uniform01() { return static_cast<double>(raw() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // unbiased integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) fail(ErrorKind::BadLength, "Rng::below(0)");
    const std::uint64_t threshold = (-n) % n;
    for (;;) {
      const std::uint64_t x = raw();
      if (x >= threshold) return x % n;
    }
  }

  // standard normal via Box-Muller (cached spare)
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    // want u1 in (0, 1]
    u1 = 1.0 - u1;
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  bool bernoulli(double p) { return uniform01() < p; }

  std::string save_state() const {
    std::ostringstream os;
    os << eng_ << " " << (has_spare_ ? 1 : 0) << " ";
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(spare_));
    std::memcpy(&bits, &spare_, sizeof(bits));
    os << bits;
    return os.str();
  }

  void load_state(const std::string& s) {
    std::istringstream is(s);
    int spare_flag = 0;
    std::uint64_t bits = 0;
    is >> eng_ >> spare_flag >> bits;
    if (is.fail()) fail(ErrorKind::BadCheckpoint, "corrupt rng state");
    has_spare_ = spare_flag != 0;
    std::memcpy(&spare_, &bits, sizeof(bits));
  }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace qsgan

#include "pfsgan/rng.hpp"

#include <cmath>
#include <sstream>

#include "pfsgan/errors.hpp"

namespace pfsgan {

double Rng::uniform() {
  return static_cast<double>(eng_() >> 11) * (1.0 / 9007199254740992.0);  // 53-bit mantissa
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

int Rng::uniform_int(int n) {
  if (n <= 0) throw ContractError("Rng::uniform_int: n must be positive");
  // Rejection sampling keeps the distribution exact.
  const uint64_t un = static_cast<uint64_t>(n);
  const uint64_t limit = UINT64_MAX - UINT64_MAX % un;
  uint64_t r;
  do {
    r = eng_();
  } while (r >= limit);
  return static_cast<int>(r % un);
}

double Rng::normal() {
  double u1 = uniform();
  const double u2 = uniform();
  if (u1 <= 0.0) u1 = 5e-324;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

Rng Rng::fork(uint64_t stream) {
  // Derive a child seed from the parent engine plus the stream id.
  const uint64_t a = eng_();
  return Rng(a ^ (stream * 0x9E3779B97F4A7C15ull));
}

std::string Rng::serialize() const {
  std::ostringstream os;
  os << eng_;
  return os.str();
}

void Rng::deserialize(const std::string& s) {
  std::istringstream is(s);
  is >> eng_;
  if (!is) throw CheckpointError("Rng::deserialize: malformed engine state");
}

}  // namespace pfsgan

#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace sledge {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

namespace rng {

// splitmix64 output function; used both as a standalone generator step and
// as the mixing stage when deriving sub-stream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derive the seed of an independent sub-stream from (seed, stream, counter).
// Feeding each component through the splitmix64 mix keeps nearby ids
// (consecutive steps, consecutive purposes) statistically unrelated.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream,
                                    std::uint64_t counter) {
  std::uint64_t s = seed;
  std::uint64_t a = splitmix64(s);
  s ^= stream * 0x9e3779b97f4a7c15ULL;
  std::uint64_t b = splitmix64(s);
  s ^= counter * 0xd1b54a32d192ed03ULL;
  std::uint64_t c = splitmix64(s);
  return a ^ (b + 0x165667b19e3779f9ULL) ^ (c << 1);
}

// Stream identifiers for the distinct random decisions of a run.  Keeping
// them fixed (and deriving one generator per (seed, purpose, step)) makes
// every draw independent of how many values other purposes consumed.
enum Purpose : std::uint64_t {
  kMinibatch = 1,
  kNoise = 2,
  kInit = 3,
  kClientPick = 4,
  kRefreshSet = 5,
  kClientBatch = 6,
  kProblemGen = 7,
  kPartition = 8,
  kProbe = 9,
};

// Deterministic generator: xoshiro-free, splitmix64-driven.  All draws are
// reproducible across platforms since only integer ops and IEEE doubles with
// exact constants are involved.
class Engine {
 public:
  explicit Engine(std::uint64_t seed) : state_(seed) {
    // Warm up so that a zero seed does not emit a zero-heavy first block.
    splitmix64(state_);
  }

  Engine(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter)
      : Engine(substream_seed(seed, stream, counter)) {}

  std::uint64_t next_u64() { return splitmix64(state_); }

  // Uniform double in [0, 1) with 53 random bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform double in (0, 1]; safe as a log() argument.
  double next_unit_pos() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller.  std::normal_distribution is avoided on
  // purpose: its algorithm is implementation-defined, which would break
  // cross-platform byte-identical traces.
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    const double u1 = next_unit_pos();
    const double u2 = next_unit();
    const double m = std::sqrt(-2.0 * std::log(u1));
    const double a = kTwoPi * u2;
    spare_ = m * std::sin(a);
    have_spare_ = true;
    return m * std::cos(a);
  }

  // Uniform integer in [0, n) by rejection; exact (no modulo bias).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Engine::below: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Uniform draw from the Euclidean ball of radius r centered at the origin:
// Gaussian direction scaled by r * U^{1/d}.  r == 0 returns the zero vector
// without consuming randomness.
inline Vec sample_ball(Engine& eng, int d, double r) {
  if (d <= 0) throw std::invalid_argument("sample_ball: dimension must be positive");
  if (r < 0.0) throw std::invalid_argument("sample_ball: radius must be nonnegative");
  Vec xi = Vec::Zero(d);
  if (r == 0.0) return xi;
  double norm2 = 0.0;
  do {
    for (int k = 0; k < d; ++k) {
      xi[k] = eng.next_normal();
      norm2 += xi[k] * xi[k];
    }
  } while (norm2 == 0.0);
  const double u = eng.next_unit_pos();
  xi *= r * std::pow(u, 1.0 / d) / std::sqrt(norm2);
  return xi;
}

// Sample `b` distinct indices from {0, .., n-1} uniformly (partial
// Fisher-Yates over a scratch identity permutation), returned ascending so
// downstream reductions have a canonical order.
inline std::vector<int> sample_without_replacement(Engine& eng, int n, int b) {
  if (b < 1 || b > n)
    throw std::invalid_argument("sample_without_replacement: need 1 <= b <= n");
  std::vector<int> pool(n);
  for (int i = 0; i < n; ++i) pool[i] = i;
  for (int i = 0; i < b; ++i) {
    const int j = i + static_cast<int>(eng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(pool[i], pool[j]);
  }
  std::vector<int> out(pool.begin(), pool.begin() + b);
  std::sort(out.begin(), out.end());
  return out;
}

// Sample `b` indices with replacement (for uniform-sampling baselines),
// returned in draw order.
inline std::vector<int> sample_with_replacement(Engine& eng, int n, int b) {
  if (b < 1 || n < 1)
    throw std::invalid_argument("sample_with_replacement: need n >= 1, b >= 1");
  std::vector<int> out(b);
  for (int i = 0; i < b; ++i)
    out[i] = static_cast<int>(eng.below(static_cast<std::uint64_t>(n)));
  return out;
}

}  // namespace rng
}  // namespace sledge

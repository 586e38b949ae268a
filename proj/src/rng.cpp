#include "wbb/rng.hpp"

#include <cmath>
#include <numbers>

#include "wbb/error.hpp"

namespace wbb {
namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Stream::Stream(const RngConfig& cfg, Substream sub) {
  // Fold the three key words through separate SplitMix64 rounds so that
  // (seed, stream) pairs differing in any word land far apart.
  std::uint64_t key = cfg.master_seed;
  std::uint64_t h = splitmix64(key);
  key = h ^ cfg.stream_id;
  h = splitmix64(key);
  key = h ^ (static_cast<std::uint64_t>(sub) * 0xd1b54a32d192ed03ULL);
  for (auto& s : state_) s = splitmix64(key);
}

std::uint64_t Stream::next_u64() {
  const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double Stream::uniform() {
  // Midpoints of the 2^53 dyadic cells: min 2^-54, max 1 - 2^-54.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Stream::exponential() { return exp_from_uniform(uniform()); }

double Stream::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_normal_;
  }
  const double radius = std::sqrt(2.0 * exp_from_uniform(uniform()));
  const double angle = 2.0 * std::numbers::pi * uniform();
  cached_normal_ = radius * std::sin(angle);
  has_cached_ = true;
  return radius * std::cos(angle);
}

std::uint64_t Stream::below(std::uint64_t bound) {
  if (bound == 0) throw DomainError("Stream::below: bound must be positive");
  // Lemire's nearly-divisionless rejection.
  unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(next_u64()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double exp_from_uniform(double u) {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("exp_from_uniform: u must lie in (0, 1)");
  return -std::log(u);
}

WeightDraw WeightDraw::scaled(double c) const {
  WeightDraw out = *this;
  for (auto& x : out.obs_weights) x *= c;
  out.prior_weight *= c;
  return out;
}

WeightDraw sample_weights(std::size_t n, const RngConfig& rng, PriorMode mode) {
  if (n == 0) throw DomainError("sample_weights: n must be at least 1");
  Stream stream(rng, Substream::Weights);
  WeightDraw w;
  w.draw_id = rng.stream_id;
  w.obs_weights.resize(n);
  for (auto& x : w.obs_weights) x = stream.exponential();
  w.prior_weight = mode == PriorMode::Fixed ? 1.0 : stream.exponential();
  return w;
}

WeightDraw unit_weights(std::size_t n, std::uint64_t draw_id) {
  return WeightDraw{std::vector<double>(n, 1.0), 1.0, draw_id};
}

void validate(const WeightDraw& w) {
  for (double x : w.obs_weights) {
    if (!(std::isfinite(x) && x > 0.0)) throw DomainError("weights must be finite and positive");
  }
  if (!(std::isfinite(w.prior_weight) && w.prior_weight > 0.0)) {
    throw DomainError("prior weight must be finite and positive");
  }
}

}  // namespace wbb

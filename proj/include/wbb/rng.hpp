#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace wbb {

/// Identifies one reproducible random stream. Draw k of a bootstrap run uses
/// stream_id = k under the run's master seed.
struct RngConfig {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;
};

/// Independent purposes within one stream. Each (seed, stream, substream)
/// triple is hashed to its own generator state, so adding a consumer never
/// shifts the numbers another consumer sees.
enum class Substream : std::uint64_t {
  Weights = 0,
  Solver = 1,
  Noise = 2,
  Folds = 3,
};

/// xoshiro256** keyed by SplitMix64 hashing of the stream identity.
class Stream {
 public:
  explicit Stream(const RngConfig& cfg, Substream sub = Substream::Weights);

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1); never returns 0 or 1.
  double uniform();
  /// Standard exponential via ln(1/u).
  double exponential();
  /// Standard normal (Box-Muller, pairs cached).
  double normal();
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

 private:
  std::array<std::uint64_t, 4> state_{};
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

/// ln(1/u) for u in (0, 1). Throws DomainError otherwise.
double exp_from_uniform(double u);

enum class PriorMode { Weighted, Fixed };

/// One realization of the bootstrap weights (w_1..w_n, w_p).
struct WeightDraw {
  std::vector<double> obs_weights;
  double prior_weight = 1.0;
  std::uint64_t draw_id = 0;

  std::size_t size() const { return obs_weights.size(); }
  /// Every component multiplied by c > 0.
  WeightDraw scaled(double c) const;
};

/// n i.i.d. Exp(1) observation weights followed by the prior weight, which is
/// Exp(1) under PriorMode::Weighted and exactly 1 under PriorMode::Fixed.
WeightDraw sample_weights(std::size_t n, const RngConfig& rng, PriorMode mode);

/// All weights equal to 1; the unweighted regularized problem.
WeightDraw unit_weights(std::size_t n, std::uint64_t draw_id = 0);

/// Throws DomainError unless every weight is finite and strictly positive.
void validate(const WeightDraw& w);

}  // namespace wbb

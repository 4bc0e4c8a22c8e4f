#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace sepsis {

uint64_t fnv1a64(std::string_view s);

// One splitmix64 scrambling step.
uint64_t mix64(uint64_t x);

// Per-stage seed derivation: one global seed fans out to independent stage
// seeds through the stage-name hash, so a single --seed reproduces every stage.
uint64_t derive_seed(uint64_t global_seed, std::string_view stage);

// Counter-based deterministic generator. Keyed by (seed, stream); draws are a
// pure function of (key, draw index), so per-record / per-resample streams can
// be evaluated in parallel and still match the serial output exactly.
class Rng {
  public:
    Rng(uint64_t seed, uint64_t stream);

    uint64_t next_u64();
    double uniform();                       // [0, 1)
    double uniform(double lo, double hi);   // [lo, hi)
    uint64_t uniform_index(uint64_t n);     // {0, .., n-1}
    bool bernoulli(double p);
    double normal();                        // standard normal, inverse-CDF
    double truncated_normal(double mean, double sd, double lo, double hi);
    // Fisher-Yates over {0..n-1}.
    std::vector<size_t> shuffled_indices(size_t n);

  private:
    uint64_t key_;
    uint64_t counter_ = 0;
};

}  // namespace sepsis

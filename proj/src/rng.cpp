#include "sepsis/rng.hpp"

#include <cmath>

#include "sepsis/stats_math.hpp"

namespace sepsis {

uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

uint64_t derive_seed(uint64_t global_seed, std::string_view stage) {
    return mix64(global_seed ^ fnv1a64(stage));
}

Rng::Rng(uint64_t seed, uint64_t stream) : key_(mix64(mix64(seed) ^ mix64(stream ^ 0xa5a5a5a5a5a5a5a5ull))) {}

uint64_t Rng::next_u64() {
    return mix64(key_ + 0x9e3779b97f4a7c15ull * ++counter_);
}

double Rng::uniform() {
    // 53 random bits -> [0, 1)
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

uint64_t Rng::uniform_index(uint64_t n) {
    return static_cast<uint64_t>(uniform() * static_cast<double>(n)) % n;
}

bool Rng::bernoulli(double p) {
    return uniform() < p;
}

double Rng::normal() {
    double u = uniform();
    if (u <= 0.0) u = 0x1.0p-53;
    return normal_quantile(u);
}

double Rng::truncated_normal(double mean, double sd, double lo, double hi) {
    double a = normal_cdf((lo - mean) / sd);
    double b = normal_cdf((hi - mean) / sd);
    double u = a + (b - a) * uniform();
    if (u <= 0.0) u = 0x1.0p-53;
    if (u >= 1.0) u = 1.0 - 0x1.0p-53;
    return mean + sd * normal_quantile(u);
}

std::vector<size_t> Rng::shuffled_indices(size_t n) {
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    for (size_t i = n; i > 1; --i) {
        size_t j = static_cast<size_t>(uniform_index(i));
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

}  // namespace sepsis

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace fsaudit {

// FNV-1a over a label string, used to derive per-stage seed streams.
constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (char c : s) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 1099511628211ull;
    }
    return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Every random decision in the pipeline traces to a master seed through
// derive_seed(master, stage, index). The derivation is pure arithmetic, so
// runs are reproducible across platforms and across process invocations.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view stage,
                                    std::uint64_t index = 0) {
    return splitmix64(splitmix64(master ^ fnv1a64(stage)) ^
                      splitmix64(index * 0x9e3779b97f4a7c15ull + 0x243f6a8885a308d3ull));
}

// Deterministic random stream. std::mt19937_64 is fully specified by the
// standard; the distribution transforms below are written out explicitly
// because the std::*_distribution classes are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed), base_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [lo, hi], inclusive.
    int uniform_int(int lo, int hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(bounded(span));
    }

    // Unbiased bounded draw in [0, n) via rejection sampling.
    std::uint64_t bounded(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t(0) - (~std::uint64_t(0) % n);
        std::uint64_t x;
        do {
            x = eng_();
        } while (x >= limit);
        return x % n;
    }

    // Standard normal via Box-Muller (one value per call; call order is part
    // of the determinism contract).
    double normal() {
        const double u1 = std::max(uniform(), 0x1.0p-60);
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Zero-mean Laplace with the given scale b (stddev = b*sqrt(2)).
    double laplace(double scale) {
        const double u = uniform() - 0.5;
        const double mag = std::log(std::max(1.0 - 2.0 * std::abs(u), 0x1.0p-60));
        return (u < 0 ? scale : -scale) * mag;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = bounded(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    // Sample k distinct indices from [0, n) without replacement, order random.
    std::vector<int> sample_indices(int n, int k) {
        std::vector<int> idx(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
        for (int i = 0; i < k; ++i) {
            const int j = i + static_cast<int>(bounded(static_cast<std::uint64_t>(n - i)));
            std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
        }
        idx.resize(static_cast<std::size_t>(k));
        return idx;
    }

    // Child stream keyed by a label; independent of draws on the parent.
    Rng fork(std::string_view label, std::uint64_t index = 0) const {
        return Rng(derive_seed(base_, label, index));
    }

    std::uint64_t base_seed() const { return base_; }

private:
    std::mt19937_64 eng_;
    std::uint64_t base_;
};

}  // namespace fsaudit

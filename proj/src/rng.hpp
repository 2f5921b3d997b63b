#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace missddim {

// Distribution sampling is hand-rolled on top of std::mt19937_64 because the
// standard pins the engine's output but not the library distributions; every
// reproducibility guarantee in this project reduces to these routines.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Collapses (base, a, b) into one stream seed. Used to give every
// (row, sample) and every (seed, epoch) its own independent stream so that
// execution order and thread count cannot affect results.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t s = base;
    std::uint64_t h = splitmix64(s);
    s ^= a + 0x632BE59BD9B4E019ull;
    h ^= splitmix64(s);
    s ^= b + 0x0B6E452CF3A5B1D7ull;
    h ^= splitmix64(s);
    return h;
}

class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // [0, 1)
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Inclusive [lo, hi], unbiased via rejection.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
        if (range == 0) {  // full 64-bit span
            return static_cast<std::int64_t>(engine_());
        }
        const std::uint64_t threshold = (-range) % range;
        for (;;) {
            const std::uint64_t r = engine_();
            if (r >= threshold) {
                return lo + static_cast<std::int64_t>(r % range);
            }
        }
    }

    // Marsaglia polar method with cached spare.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double factor = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * factor;
        has_spare_ = true;
        return u * factor;
    }

    void fill_normal(std::span<double> out) {
        for (double& x : out) {
            x = normal();
        }
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace missddim

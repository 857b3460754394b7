#pragma once

#include <cstdint>
#include <vector>

namespace ccm {

// Small deterministic PRNG (splitmix64 core). The standard library engines
// leave distribution output implementation-defined; this one produces the
// same stream on every platform, which the replay tests rely on.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // in [0, 1)
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // in [0, n)
    std::uint64_t next_below(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

    bool bernoulli(double p) { return next_double() < p; }

    // Independent stream derived from this generator's seed and a stream id.
    Rng fork(std::uint64_t stream) const {
        Rng r(state_ ^ (0x632be59bd9b4e019ull + stream * 0x100000001b3ull));
        r.next_u64();
        return r;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

}  // namespace ccm

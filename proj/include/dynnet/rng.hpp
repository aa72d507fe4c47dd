#pragma once

#include <cstdint>

namespace dynnet {

// Counter-based generator: output i is a strong 64-bit mix of (key, i).
// Streams are cheap to derive from (master seed, trial, domain, id) tuples,
// so node and adversary randomness stay independent per trial, replay is
// bit-identical on any platform, and there is no sequential seed hand-off.
class Rng {
  public:
    Rng() : key_(0) {}
    explicit Rng(std::uint64_t key) : key_(key) {}

    static std::uint64_t mix(std::uint64_t x) {
        // splitmix64 finalizer
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

    // Derive a stream key from up to four words.
    static std::uint64_t derive(std::uint64_t a, std::uint64_t b = 0,
                                std::uint64_t c = 0, std::uint64_t d = 0) {
        std::uint64_t h = mix(a);
        h = mix(h ^ (b + 0x9e3779b97f4a7c15ull));
        h = mix(h ^ (c + 0xc2b2ae3d27d4eb4full));
        h = mix(h ^ (d + 0x165667b19e3779f9ull));
        return h;
    }

    std::uint64_t next_u64() { return mix(key_ ^ (ctr_++ * 0xd1b54a32d192ed03ull)); }

    // Uniform in [0, bound); bound >= 1. Rejection keeps it unbiased.
    std::uint64_t next_below(std::uint64_t bound) {
        if (bound <= 1) return 0;
        std::uint64_t limit = (~0ull / bound) * bound;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % bound;
    }

    // Uniform w-bit value, w <= 64.
    std::uint64_t next_bits(int w) {
        if (w <= 0) return 0;
        std::uint64_t x = next_u64();
        return w >= 64 ? x : (x >> (64 - w));
    }

    bool next_bool() { return (next_u64() >> 63) != 0; }

    double next_double() {  // [0,1)
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

  private:
    std::uint64_t key_;
    std::uint64_t ctr_ = 0;
};

}  // namespace dynnet

#ifndef FLASH_RNG_HPP
#define FLASH_RNG_HPP

#include <cstdint>
#include <random>
#include <vector>

namespace flash {

// splitmix64: cheap seed mixer for deriving independent streams.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic RNG with portable distributions. std::mt19937_64 output is
// pinned by the standard; the std:: distributions are not, so the bounded
// draws below are implemented by hand.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    // Derives an independent stream for (seed, tag, id) tuples.
    static Rng derive(std::uint64_t seed, std::uint64_t tag, std::uint64_t id = 0) {
        return Rng(splitmix64(seed ^ splitmix64(tag)) ^ splitmix64(id));
    }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, n), rejection-sampled to avoid modulo bias.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % n;
    }

    // Uniform integer in [lo, hi).
    std::int64_t range(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo)));
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool chance(double p) { return uniform() < p; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    template <typename T>
    const T& pick(const std::vector<T>& v) {
        return v[static_cast<std::size_t>(below(v.size()))];
    }

  private:
    std::mt19937_64 engine_;
};

}  // namespace flash

#endif  // FLASH_RNG_HPP

#pragma once

#include <cmath>
#include <cstdint>

namespace elicit {

// splitmix64: the mixing function behind every stream.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Counter-based stream derived from (seed, stream tag). Draw k of stream s is
// a pure function of (seed, s, k), so results never depend on the order in
// which streams are consumed.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream)
        : base_(splitmix64(seed ^ splitmix64(stream * 0xd6e8feb86659fd93ull))), counter_(0) {}

    std::uint64_t next_u64() { return splitmix64(base_ + 0x632be59bd9b4e019ull * ++counter_); }

    // Uniform in [0, 1).
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    // Inclusive bounds; small ranges only (modulo bias negligible for our use).
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
    }

    // Laplace(0, scale) via inverse CDF.
    double laplace(double scale) {
        double u = next_unit() - 0.5;
        double s = u < 0 ? -1.0 : 1.0;
        return -scale * s * std::log(1.0 - 2.0 * std::fabs(u));
    }

    // Derived stream, independent of this one's counter position.
    RngStream child(std::uint64_t tag) const { return RngStream(base_, tag); }

private:
    std::uint64_t base_;
    std::uint64_t counter_;
};

}  // namespace elicit

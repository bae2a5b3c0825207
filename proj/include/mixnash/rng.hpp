#pragma once

#include <cmath>
#include <cstdint>
#include <utility>

namespace mixnash {

/// SplitMix64 counter-based generator (Steele, Lea & Flood 2014).
///
/// Chosen over <random> engines because the output sequence -- including the
/// derived uniform/normal draws below -- is fully specified here and therefore
/// bit-identical across platforms and standard libraries. Streams are cheap to
/// split by index, so per-point work can run under any schedule and still
/// reproduce exactly.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random mantissa bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    /// Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

    /// Standard normal via Box-Muller. Two independent draws per call pair;
    /// the spare is cached so consecutive calls stay cheap.
    double next_normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = next_double();
        double u2 = next_double();
        // Guard the log against an exact zero draw.
        while (u1 <= 0.0) u1 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    /// Derive an independent stream for (seed, stream index). Used to split
    /// per-point / per-trial streams so parallel schedules cannot reorder draws.
    static Rng stream(std::uint64_t seed, std::uint64_t index) {
        Rng mixer(seed ^ (0x9e3779b97f4a7c15ULL + index * 0xd1342543de82ef95ULL));
        return Rng(mixer.next_u64());
    }

  private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace mixnash

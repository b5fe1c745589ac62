#pragma once

#include <cmath>
#include <cstdint>

namespace mcs {

/// Deterministic random stream (splitmix64 core, Box-Muller gaussians).
/// Sub-streams derived with derive() are independent of each other and of
/// the order in which they are consumed, which is what makes parallel
/// evaluation reproducible for any worker count.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Standard normal draw.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 == 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    /// Independent sub-stream for (this seed, id). Mixing goes through the
    /// splitmix64 scrambler twice so nearby ids do not correlate.
    [[nodiscard]] Rng derive(std::uint64_t id) const {
        Rng mixer(state_ ^ (0xd1b54a32d192ed03ULL * (id + 1)));
        mixer.next_u64();
        return Rng(mixer.next_u64());
    }

    [[nodiscard]] Rng derive(std::uint64_t a, std::uint64_t b) const {
        return derive(a).derive(b);
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace mcs

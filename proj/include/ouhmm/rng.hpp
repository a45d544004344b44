#ifndef OUHMM_RNG_HPP
#define OUHMM_RNG_HPP

#include <cmath>
#include <cstdint>

namespace ouhmm {

/// Seeded, stream-splittable PRNG (xoshiro256++ core, splitmix64 seeding).
///
/// A stream is identified by (seed, stream id). Identical (seed, stream,
/// draw count) reproduce identical values on every run and under any thread
/// schedule, which is what all reproducibility guarantees in this project
/// rest on. Streams for trajectories, filters and individual particles are
/// derived with child(), never by sharing one engine across tasks.
class RngStream {
public:
    RngStream() : RngStream(0, 0) {}

    RngStream(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t x = seed;
        x = splitmix(x);
        x ^= 0x9e3779b97f4a7c15ULL * (stream + 1);
        for (auto& word : state_) {
            x = splitmix(x);
            word = x;
        }
        // xoshiro must not start at the all-zero state
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[3] = 1;
        origin_ = x;
    }

    /// Derive an independent stream keyed by `salt` from this stream's
    /// identity (not its position): children are stable no matter how many
    /// draws the parent has made.
    RngStream child(std::uint64_t salt) const {
        RngStream c;
        std::uint64_t x = origin_ ^ splitmix(salt ^ 0xd1b54a32d192ed03ULL);
        for (auto& word : c.state_) {
            x = splitmix(x);
            word = x;
        }
        if ((c.state_[0] | c.state_[1] | c.state_[2] | c.state_[3]) == 0) c.state_[3] = 1;
        c.origin_ = x;
        return c;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [a, b).
    double uniform(double a, double b) { return a + uniform() * (b - a); }

    /// Standard normal via Box-Muller; the spare value is cached, so draw
    /// counts alternate between consuming two uniforms and none.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 0x1.0p-80) u1 = 0x1.0p-80;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(t);
        have_spare_ = true;
        return r * std::cos(t);
    }

    double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

    /// Exponential with the given rate (rate > 0).
    double exponential(double rate) {
        double u = uniform();
        return -std::log1p(-u) / rate;
    }

    static std::uint64_t splitmix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4] = {};
    std::uint64_t origin_ = 0;  // identity hash used for child derivation
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace ouhmm

#endif

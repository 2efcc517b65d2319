#pragma once

#include <array>
#include <cstdint>

namespace sedbox {

// Counter-seeded xoshiro256++ generator. Sequences depend only on
// (seed, stream), never on platform or library version, so synthetic
// datasets and Monte Carlo runs reproduce bit-for-bit everywhere.
//
// Every stochastic operation in this library takes an Rng explicitly;
// there is no global random state.
class Rng {
  public:
    explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0)
        : seed_(seed), stream_(stream) {
        std::uint64_t a = seed;
        std::uint64_t b = mix64(stream + kGolden);
        for (auto& word : state_) {
            word = splitmix_next(a) ^ splitmix_next(b);
        }
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) {
            state_[0] = kGolden;
        }
    }

    std::uint64_t next() {
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

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

    // Uniform integer in [0, n); n must be nonzero.
    std::uint64_t uniform_int(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * n) >> 64);
    }

    // Independent generator derived from this one's identity; substream(k)
    // for distinct k never shares state with the parent or with each other.
    Rng substream(std::uint64_t index) const {
        return Rng(seed_, mix64(stream_ ^ mix64(index + kGolden)));
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

  private:
    static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    static std::uint64_t mix64(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ull;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBull;
        z ^= z >> 31;
        return z;
    }

    static std::uint64_t splitmix_next(std::uint64_t& s) {
        s += kGolden;
        return mix64(s);
    }

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::array<std::uint64_t, 4> state_;
};

}  // namespace sedbox

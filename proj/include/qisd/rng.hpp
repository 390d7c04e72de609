#ifndef QISD_RNG_HPP
#define QISD_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>

namespace qisd::rng {

// Counter-based generator (Philox 4x32, 10 rounds). A value is a pure
// function of (key, counter), so any draw index can be generated out of
// order and ensembles stay reproducible under any parallel schedule.
struct Philox4x32 {
    static constexpr std::uint32_t M0 = 0xD2511F53u;
    static constexpr std::uint32_t M1 = 0xCD9E8D57u;
    static constexpr std::uint32_t W0 = 0x9E3779B9u;
    static constexpr std::uint32_t W1 = 0xBB67AE85u;

    static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                              std::array<std::uint32_t, 2> key) {
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
            key[0] += W0;
            key[1] += W1;
        }
        return ctr;
    }
};

// Stream ids separate independent uses of the same master seed.
enum class Stream : std::uint32_t {
    noise = 0x6e6f6973u,
    init = 0x696e6974u,
    state = 0x73746174u,
    scratch = 0x73637261u,
};

// Deterministic stream of uniforms/gaussians keyed by (seed, stream, index).
class CounterRng {
  public:
    CounterRng(std::uint64_t seed, Stream stream, std::uint64_t index)
        : key_{static_cast<std::uint32_t>(seed & 0xffffffffu),
               static_cast<std::uint32_t>(seed >> 32) ^ static_cast<std::uint32_t>(stream)},
          ctr_{static_cast<std::uint32_t>(index & 0xffffffffu),
               static_cast<std::uint32_t>(index >> 32), 0u, 0u} {}

    std::uint64_t next_u64() {
        if (lane_ == 0) {
            buf_ = Philox4x32::block(ctr_, key_);
            advance_counter();
            lane_ = 2;
            return (static_cast<std::uint64_t>(buf_[0]) << 32) | buf_[1];
        }
        lane_ = 0;
        return (static_cast<std::uint64_t>(buf_[2]) << 32) | buf_[3];
    }

    // Uniform on (0, 1); never returns 0 or 1.
    double next_uniform() {
        const std::uint64_t u = next_u64();
        return static_cast<double>(u >> 11) * 0x1.0p-53 + 0x1.0p-54;
    }

    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

  private:
    void advance_counter() {
        if (++ctr_[2] == 0) ++ctr_[3];
    }

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> ctr_;
    std::array<std::uint32_t, 4> buf_{};
    int lane_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace qisd::rng

#endif

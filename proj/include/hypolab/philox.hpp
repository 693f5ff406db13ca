#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace hypolab {

/// Philox4x32-10 counter-based generator (Salmon et al.). Stateless: the
/// output is a pure function of (key, counter).
class Philox4x32 {
public:
    using Block = std::array<std::uint32_t, 4>;

    explicit Philox4x32(std::uint64_t seed)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

    Block operator()(Block ctr) const {
        std::array<std::uint32_t, 2> key = key_;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
            key[0] += 0x9E3779B9u;
            key[1] += 0xBB67AE85u;
        }
        return ctr;
    }

private:
    std::array<std::uint32_t, 2> key_;
};

/// Sequential stream over a Philox counter: stream id in the high words,
/// position in the low words.
class GaussianStream {
public:
    GaussianStream(std::uint64_t seed, std::uint64_t stream, std::uint64_t offset = 0)
        : gen_(seed), stream_(stream), pos_(offset) {}

    /// Uniform in (0, 1], 53-bit resolution.
    double uniform() {
        if (idx_ >= 2) refill();
        const std::uint64_t bits = (std::uint64_t{buf_[2 * idx_]} << 32 | buf_[2 * idx_ + 1]) >> 11;
        ++idx_;
        return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; the second variate is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform(), u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double th = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(th);
        has_spare_ = true;
        return r * std::cos(th);
    }

private:
    void refill() {
        buf_ = gen_({static_cast<std::uint32_t>(pos_), static_cast<std::uint32_t>(pos_ >> 32),
                     static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)});
        ++pos_;
        idx_ = 0;
    }

    Philox4x32 gen_;
    std::uint64_t stream_;
    std::uint64_t pos_;
    Philox4x32::Block buf_{};
    int idx_ = 2;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace hypolab

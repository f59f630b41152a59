#pragma once

#include <cmath>
#include <cstdint>

namespace coneflow {

// Counter-based random stream (Philox4x32-10). A stream is addressed by
// (seed, stream_id); distinct ids give statistically independent sequences,
// which is what lets ensembles run in parallel and still merge
// deterministically. Draw order is part of the reproducibility contract:
//   - uniform()/uniform_pos() consume one 64-bit word (two 32-bit outputs),
//   - gaussian() consumes two uniforms on the first call of a pair and
//     returns the cached mate on the next call.
class RngStream {
  public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : key0_(static_cast<std::uint32_t>(seed)),
          key1_(static_cast<std::uint32_t>(seed >> 32)),
          stream_(stream_id) {}

    std::uint64_t next_u64() {
        if (idx_ >= 4) refill();
        std::uint64_t lo = block_[idx_];
        std::uint64_t hi = block_[idx_ + 1];
        idx_ += 2;
        return (hi << 32) | lo;
    }

    // uniform on [0,1) with 53 random bits
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // uniform on (0,1], safe under log()
    double uniform_pos() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    // standard normal via Box-Muller (portable: no dependence on the
    // standard library's distribution implementations)
    double gaussian() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u1 = uniform_pos();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double phi = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(phi);
        has_cached_ = true;
        return r * std::cos(phi);
    }

    double uniform_range(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    std::uint64_t uniform_index(std::uint64_t n) { return next_u64() % n; }

  private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kBump0 = 0x9E3779B9u;
    static constexpr std::uint32_t kBump1 = 0xBB67AE85u;

    static void round(std::uint32_t (&c)[4], std::uint32_t k0, std::uint32_t k1) {
        std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
        std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
        std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
        std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
        std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
        std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
        std::uint32_t n0 = hi1 ^ c[1] ^ k0;
        std::uint32_t n1 = lo1;
        std::uint32_t n2 = hi0 ^ c[3] ^ k1;
        std::uint32_t n3 = lo0;
        c[0] = n0;
        c[1] = n1;
        c[2] = n2;
        c[3] = n3;
    }

    void refill() {
        std::uint32_t c[4] = {static_cast<std::uint32_t>(counter_),
                              static_cast<std::uint32_t>(counter_ >> 32),
                              static_cast<std::uint32_t>(stream_),
                              static_cast<std::uint32_t>(stream_ >> 32)};
        std::uint32_t k0 = key0_, k1 = key1_;
        for (int r = 0; r < 10; ++r) {
            round(c, k0, k1);
            k0 += kBump0;
            k1 += kBump1;
        }
        block_[0] = c[0];
        block_[1] = c[1];
        block_[2] = c[2];
        block_[3] = c[3];
        ++counter_;
        idx_ = 0;
    }

    std::uint32_t key0_, key1_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
    std::uint32_t block_[4] = {0, 0, 0, 0};
    int idx_ = 4;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace coneflow

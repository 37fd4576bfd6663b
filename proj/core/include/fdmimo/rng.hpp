// SPDX-License-Identifier: Apache-2.0
//
// fdmimo: system-level simulation toolkit for FD-MIMO downlink
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef FDMIMO_RNG_HPP
#define FDMIMO_RNG_HPP

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>

namespace fdmimo {

// Counter-based random streams (Philox4x32-10, Salmon et al., SC 2011).
// Every stream is fully determined by (seed, stream id); draws are therefore
// reproducible regardless of thread scheduling or evaluation order.

namespace detail {

inline uint64_t splitmix64(uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace detail

class Philox4x32 {
public:
    using Block = std::array<uint32_t, 4>;

    Philox4x32(uint64_t key, uint64_t counter_base = 0) {
        key_[0] = static_cast<uint32_t>(key);
        key_[1] = static_cast<uint32_t>(key >> 32);
        counter_[0] = static_cast<uint32_t>(counter_base);
        counter_[1] = static_cast<uint32_t>(counter_base >> 32);
        counter_[2] = 0;
        counter_[3] = 0;
    }

    // One 128-bit block for the current counter; does not advance state.
    Block block() const {
        Block ctr = counter_;
        std::array<uint32_t, 2> key = key_;
        for (int round = 0; round < 10; ++round) {
            ctr = single_round(ctr, key);
            if (round < 9) {
                key[0] += kWeyl32A;
                key[1] += kWeyl32B;
            }
        }
        return ctr;
    }

    uint32_t next_u32() {
        if (cache_pos_ == 4) {
            cache_ = block();
            advance_counter();
            cache_pos_ = 0;
        }
        return cache_[cache_pos_++];
    }

    uint64_t next_u64() {
        uint64_t lo = next_u32();
        uint64_t hi = next_u32();
        return lo | (hi << 32);
    }

    // Uniform on (0,1): 53-bit mantissa, never exactly 0 or 1.
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; one spare value is cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * M_PI * u2;
        spare_ = r * std::sin(t);
        have_spare_ = true;
        return r * std::cos(t);
    }

    // Circularly symmetric complex normal CN(0,1).
    std::complex<double> cnormal() {
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-std::log(u1));
        const double t = 2.0 * M_PI * u2;
        return {r * std::cos(t), r * std::sin(t)};
    }

    double exponential(double rate) { return -std::log(uniform()) / rate; }

    // Uniform integer in [0, n).
    uint32_t below(uint32_t n) {
        return static_cast<uint32_t>(static_cast<uint64_t>(next_u32()) * n >> 32);
    }

private:
    static constexpr uint32_t kMul4x32A = 0xD2511F53u;
    static constexpr uint32_t kMul4x32B = 0xCD9E8D57u;
    static constexpr uint32_t kWeyl32A = 0x9E3779B9u;
    static constexpr uint32_t kWeyl32B = 0xBB67AE85u;

    static Block single_round(const Block& ctr, const std::array<uint32_t, 2>& key) {
        const uint64_t p0 = static_cast<uint64_t>(kMul4x32A) * ctr[0];
        const uint64_t p1 = static_cast<uint64_t>(kMul4x32B) * ctr[2];
        const auto lo0 = static_cast<uint32_t>(p0);
        const auto hi0 = static_cast<uint32_t>(p0 >> 32);
        const auto lo1 = static_cast<uint32_t>(p1);
        const auto hi1 = static_cast<uint32_t>(p1 >> 32);
        return {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }

    void advance_counter() {
        if (++counter_[0] == 0 && ++counter_[1] == 0 && ++counter_[2] == 0) {
            ++counter_[3];
        }
    }

    std::array<uint32_t, 4> counter_;
    std::array<uint32_t, 2> key_;
    Block cache_{};
    int cache_pos_ = 4;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Hierarchical stream keys. Streams derived from the same seed but different
// tag tuples are statistically independent.
class StreamKey {
public:
    explicit StreamKey(uint64_t seed) : state_(seed ^ 0xa02bd8f70c931f2dULL) {
        (void)detail::splitmix64(state_);
    }

    StreamKey fork(uint64_t tag) const {
        StreamKey child = *this;
        child.state_ ^= 0x9e3779b97f4a7c15ULL * (tag + 1);
        (void)detail::splitmix64(child.state_);
        return child;
    }

    template <typename... Tags>
    StreamKey fork(uint64_t tag, Tags... rest) const {
        return fork(tag).fork(static_cast<uint64_t>(rest)...);
    }

    Philox4x32 rng() const { return Philox4x32(state_); }

    uint64_t value() const { return state_; }

private:
    uint64_t state_;
};

// Stream purposes; used as the first fork tag below the seed.
enum StreamPurpose : uint64_t {
    kStreamUeDrop = 1,
    kStreamLinkState = 2,
    kStreamClusters = 3,
    kStreamCsiNoise = 4,
    kStreamTraffic = 5,
    kStreamCapacityMc = 6,
    kStreamChannelMc = 7,
};

template <typename... Tags>
Philox4x32 make_rng(uint64_t seed, Tags... tags) {
    return StreamKey(seed).fork(static_cast<uint64_t>(tags)...).rng();
}

} // namespace fdmimo

#endif // FDMIMO_RNG_HPP

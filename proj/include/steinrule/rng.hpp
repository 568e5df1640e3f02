/*
   Copyright 2026 The steinrule Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

#include <Eigen/Dense>

namespace steinrule {

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// splitmix64 finalizer
inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace detail

/// Counter-based generator: the n-th output of stream (seed, stream, substream)
/// is a pure function of those four integers, so any draw can be regenerated
/// independently of how the work was split across threads.
///
/// Satisfies UniformRandomBitGenerator and can drive the <random> distributions.
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0,
                        std::uint64_t substream = 0) noexcept
    {
        using detail::kGolden;
        using detail::mix64;
        std::uint64_t k = mix64(seed + kGolden);
        k = mix64(k ^ (stream * 0xD1B54A32D192ED03ULL + kGolden));
        k = mix64(k ^ (substream * 0xAEF17502108EF2D9ULL + 0x632BE59BD9B4E019ULL));
        key_ = k;
    }

    result_type operator()() noexcept
    {
        ++counter_;
        return detail::mix64(key_ + detail::kGolden * counter_);
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept
    {
        return std::numeric_limits<result_type>::max();
    }

    std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

/// Uniform on [0, 1) with 53 random bits.
inline double uniform01(CounterRng& rng) noexcept
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Standard normal via the polar method. No cached second variate, so each
/// call consumes only its own counters.
inline double standard_normal(CounterRng& rng) noexcept
{
    for (;;) {
        const double u = 2.0 * uniform01(rng) - 1.0;
        const double v = 2.0 * uniform01(rng) - 1.0;
        const double s = u * u + v * v;
        if (s > 0.0 && s < 1.0)
            return u * std::sqrt(-2.0 * std::log(s) / s);
    }
}

inline void fill_standard_normal(CounterRng& rng, Eigen::Ref<Eigen::VectorXd> out) noexcept
{
    for (Eigen::Index i = 0; i < out.size(); ++i)
        out[i] = standard_normal(rng);
}

}  // namespace steinrule

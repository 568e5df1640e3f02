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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace steinrule {

/// Sample means of N per-draw statistics, with their sample covariance so the
/// standard error of any linear combination can be formed.
template <std::size_t N>
struct MonteCarloMeans {
    std::size_t count = 0;
    Eigen::Matrix<double, static_cast<int>(N), 1> mean;
    Eigen::Matrix<double, static_cast<int>(N), static_cast<int>(N)> cov;

    double se(std::size_t i) const
    {
        return count > 0 ? std::sqrt(std::max(cov(i, i), 0.0) / static_cast<double>(count)) : 0.0;
    }

    /// Standard error of w' mean.
    double se_of(const Eigen::Matrix<double, static_cast<int>(N), 1>& w) const
    {
        return count > 0 ? std::sqrt(std::max(w.dot(cov * w), 0.0) / static_cast<double>(count))
                         : 0.0;
    }
};

namespace detail {

inline constexpr std::size_t kChunk = 4096;

inline unsigned worker_count(std::size_t chunks)
{
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    return static_cast<unsigned>(std::min<std::size_t>(hw, std::max<std::size_t>(chunks, 1)));
}

/// Runs body(chunk_index) for every chunk on a small pool of threads.
/// Chunks are claimed round-robin by worker id, so the assignment is fixed.
template <class Body>
void for_each_chunk(std::size_t chunks, Body&& body)
{
    const unsigned workers = worker_count(chunks);
    if (workers <= 1) {
        for (std::size_t c = 0; c < chunks; ++c)
            body(c);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t c = w; c < chunks; c += workers)
                    body(c);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool)
        t.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

}  // namespace detail

/// Computes means and covariance of `stat(i)` over i = 0..count-1.
///
/// Each chunk of draws is reduced to centred sums, and chunks are merged in
/// index order, so the result does not depend on the number of threads.
template <std::size_t N, class Stat>
MonteCarloMeans<N> monte_carlo_means(std::size_t count, Stat&& stat)
{
    using Vec = Eigen::Matrix<double, static_cast<int>(N), 1>;
    using Mat = Eigen::Matrix<double, static_cast<int>(N), static_cast<int>(N)>;

    struct Partial {
        std::size_t n = 0;
        Vec mean = Vec::Zero();
        Mat m2 = Mat::Zero();
    };

    const std::size_t chunks = (count + detail::kChunk - 1) / detail::kChunk;
    std::vector<Partial> partials(chunks);

    detail::for_each_chunk(chunks, [&](std::size_t c) {
        Partial p;
        const std::size_t begin = c * detail::kChunk;
        const std::size_t end = std::min(count, begin + detail::kChunk);
        for (std::size_t i = begin; i < end; ++i) {
            const std::array<double, N> s = stat(i);
            const Vec x = Eigen::Map<const Vec>(s.data());
            ++p.n;
            const Vec delta = x - p.mean;
            p.mean += delta / static_cast<double>(p.n);
            p.m2 += delta * (x - p.mean).transpose();
        }
        partials[c] = p;
    });

    Partial total;
    for (const Partial& p : partials) {
        if (p.n == 0)
            continue;
        const double na = static_cast<double>(total.n);
        const double nb = static_cast<double>(p.n);
        const double nt = na + nb;
        const Vec delta = p.mean - total.mean;
        total.mean += delta * (nb / nt);
        total.m2 += p.m2 + delta * delta.transpose() * (na * nb / nt);
        total.n += p.n;
    }

    MonteCarloMeans<N> out;
    out.count = total.n;
    out.mean = total.mean;
    out.cov = total.n > 1 ? Mat(total.m2 / static_cast<double>(total.n - 1)) : Mat(Mat::Zero());
    return out;
}

/// Evaluates fn(i) for i = 0..count-1 into a vector, in parallel.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t count, Fn&& fn)
{
    std::vector<T> out(count);
    const std::size_t chunks = (count + detail::kChunk - 1) / detail::kChunk;
    detail::for_each_chunk(chunks, [&](std::size_t c) {
        const std::size_t begin = c * detail::kChunk;
        const std::size_t end = std::min(count, begin + detail::kChunk);
        for (std::size_t i = begin; i < end; ++i)
            out[i] = fn(i);
    });
    return out;
}

}  // namespace steinrule

#pragma once

// Deterministic reductions. Terms are summed in fixed blocks, and block sums
// are combined by a pairwise tree, so the result depends only on the number
// of terms and never on how many worker threads took part.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace aniso {

namespace detail {

inline std::atomic<unsigned>& thread_cap() {
    static std::atomic<unsigned> cap{1};
    return cap;
}

inline constexpr std::size_t reduce_block = 4096;

inline double pairwise(const double* v, std::size_t count) {
    if (count <= 8) {
        double s = 0;
        for (std::size_t i = 0; i < count; ++i) s += v[i];
        return s;
    }
    const std::size_t half = count / 2;
    return pairwise(v, half) + pairwise(v + half, count - half);
}

}  // namespace detail

/// Caps the workers used by data-parallel loops; 0 selects the hardware count.
inline void set_max_threads(unsigned threads) {
    if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
    detail::thread_cap().store(threads);
}

[[nodiscard]] inline unsigned max_threads() { return detail::thread_cap().load(); }

/// Runs body(begin, end) over [0, count) split into fixed chunks.
template <class Body>
void parallel_blocks(std::size_t count, std::size_t block, Body&& body) {
    const std::size_t blocks = (count + block - 1) / block;
    const unsigned workers =
        static_cast<unsigned>(std::min<std::size_t>(max_threads(), std::max<std::size_t>(blocks, 1)));
    auto run = [&](unsigned w) {
        for (std::size_t b = w; b < blocks; b += workers) {
            body(b * block, std::min(count, (b + 1) * block));
        }
    };
    if (workers <= 1) {
        run(0);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(run, w);
    run(0);
    for (auto& t : pool) t.join();
}

/// Sum of term(i) for i in [0, count), reproducible for any thread count.
template <class Term>
[[nodiscard]] double reduce_sum(std::size_t count, Term&& term) {
    const std::size_t blocks = (count + detail::reduce_block - 1) / detail::reduce_block;
    std::vector<double> partial(blocks, 0.0);
    parallel_blocks(count, detail::reduce_block, [&](std::size_t begin, std::size_t end) {
        double buf[detail::reduce_block];
        for (std::size_t i = begin; i < end; ++i) buf[i - begin] = term(i);
        partial[begin / detail::reduce_block] = detail::pairwise(buf, end - begin);
    });
    return detail::pairwise(partial.data(), partial.size());
}

}  // namespace aniso

#pragma once

#include <cstddef>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lcfl::parallel {

/// When set, every kernel runs on the calling thread. The serial and OpenMP
/// paths execute the identical chunk decomposition and combine order, so
/// results are bit-identical either way; the switch exists so tests can
/// assert that and the benchmark can measure the difference.
void set_force_serial(bool on);
bool force_serial();

bool openmp_available();
int max_threads();

inline constexpr std::size_t kGrain = 256;

/// Apply fn(i) for every i in [0, n). Iterations must be independent
/// (each writes only its own slots).
template <typename Fn>
void for_each_index(std::size_t n, Fn&& fn) {
#ifdef _OPENMP
    if (!force_serial() && n >= kGrain) {
        #pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(n); ++i) {
            fn(static_cast<std::size_t>(i));
        }
        return;
    }
#endif
    for (std::size_t i = 0; i < n; ++i) {
        fn(i);
    }
}

/// Deterministic reduction over [0, n). The range is cut into fixed-size
/// chunks; each chunk is accumulated serially in index order into its own
/// accumulator, and chunk accumulators are combined in chunk order. Only the
/// assignment of chunks to threads varies with the thread count, so the
/// result is bit-identical for any number of threads (including one).
///
///   make()            -> Acc            fresh zero accumulator
///   accumulate(a, i)                    fold index i into a
///   combine(total, a)                   fold a chunk accumulator into total
template <typename Acc, typename MakeAcc, typename Accumulate, typename Combine>
Acc chunked_reduce(std::size_t n, MakeAcc&& make, Accumulate&& accumulate, Combine&& combine,
                   std::size_t chunk = kGrain) {
    if (chunk == 0) {
        chunk = kGrain;
    }
    const std::size_t n_chunks = n == 0 ? 0 : (n + chunk - 1) / chunk;

    std::vector<Acc> partial;
    partial.reserve(n_chunks);
    for (std::size_t c = 0; c < n_chunks; ++c) {
        partial.push_back(make());
    }

    auto run_chunk = [&](std::size_t c) {
        const std::size_t lo = c * chunk;
        const std::size_t hi = lo + chunk < n ? lo + chunk : n;
        for (std::size_t i = lo; i < hi; ++i) {
            accumulate(partial[c], i);
        }
    };

#ifdef _OPENMP
    if (!force_serial() && n_chunks > 1) {
        #pragma omp parallel for schedule(static)
        for (long long c = 0; c < static_cast<long long>(n_chunks); ++c) {
            run_chunk(static_cast<std::size_t>(c));
        }
    } else
#endif
    {
        for (std::size_t c = 0; c < n_chunks; ++c) {
            run_chunk(c);
        }
    }

    Acc total = make();
    for (std::size_t c = 0; c < n_chunks; ++c) {
        combine(total, partial[c]);
    }
    return total;
}

/// Sum fn(i) over [0, n) with the deterministic chunked scheme.
template <typename Fn>
double chunked_sum(std::size_t n, Fn&& fn, std::size_t chunk = kGrain) {
    return chunked_reduce<double>(
        n, [] { return 0.0; },
        [&](double& acc, std::size_t i) { acc += fn(i); },
        [](double& total, const double& part) { total += part; }, chunk);
}

}  // namespace lcfl::parallel

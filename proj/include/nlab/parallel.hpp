#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

namespace nlab::parallel {

/// Pairwise summation with Kahan compensation at the leaves; the reduction
/// tree depends only on the element order, never on the thread schedule.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 32) {
        double s = 0.0, c = 0.0;
        for (double x : v) {
            const double y = x - c;
            const double t = s + y;
            c = (t - s) - y;
            s = t;
        }
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

struct TrialOutput {
    std::vector<double> values;
    long discards = 0;
};

struct TrialStats {
    std::vector<double> mean;
    std::vector<double> stderr_;
    std::size_t samples = 0;
    long discards = 0;
};

/// Runs `samples` independent trials with work stealing over fixed blocks.
/// Per-block partial sums are keyed by block index, so the final reduction
/// is identical for every thread count.
inline TrialStats run_trials(std::size_t samples, int threads, std::size_t ncomp,
                             const std::function<TrialOutput(std::size_t)>& fn) {
    if (samples == 0) throw std::invalid_argument("run_trials: need at least one sample");
    // Block structure depends only on the sample count, so the reduction tree
    // is identical for every thread count.
    const std::size_t kBlock = samples <= 512 ? 4 : 256;
    const std::size_t nblocks = (samples + kBlock - 1) / kBlock;
    std::vector<std::vector<double>> block_sum(ncomp, std::vector<double>(nblocks, 0.0));
    std::vector<std::vector<double>> block_sumsq(ncomp, std::vector<double>(nblocks, 0.0));
    std::vector<double> block_discards(nblocks, 0.0);

    std::atomic<std::size_t> next_block{0};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto worker = [&]() {
        try {
            while (true) {
                const std::size_t b = next_block.fetch_add(1);
                if (b >= nblocks) break;
                const std::size_t lo = b * kBlock;
                const std::size_t hi = std::min(samples, lo + kBlock);
                std::vector<double> sum(ncomp, 0.0), comp(ncomp, 0.0);
                std::vector<double> sumsq(ncomp, 0.0), compsq(ncomp, 0.0);
                long discards = 0;
                for (std::size_t trial = lo; trial < hi; ++trial) {
                    TrialOutput out = fn(trial);
                    if (out.values.size() != ncomp)
                        throw std::logic_error("run_trials: trial produced wrong component count");
                    discards += out.discards;
                    for (std::size_t c = 0; c < ncomp; ++c) {
                        const double x = out.values[c];
                        double y = x - comp[c];
                        double t = sum[c] + y;
                        comp[c] = (t - sum[c]) - y;
                        sum[c] = t;
                        const double xs = x * x;
                        y = xs - compsq[c];
                        t = sumsq[c] + y;
                        compsq[c] = (t - sumsq[c]) - y;
                        sumsq[c] = t;
                    }
                }
                for (std::size_t c = 0; c < ncomp; ++c) {
                    block_sum[c][b] = sum[c];
                    block_sumsq[c][b] = sumsq[c];
                }
                block_discards[b] = static_cast<double>(discards);
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
        }
    };

    const int nthreads = std::max(1, threads);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nthreads) - 1);
    for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);

    TrialStats stats;
    stats.samples = samples;
    stats.discards = static_cast<long>(pairwise_sum(block_discards));
    stats.mean.resize(ncomp);
    stats.stderr_.resize(ncomp);
    const double n = static_cast<double>(samples);
    for (std::size_t c = 0; c < ncomp; ++c) {
        const double s = pairwise_sum(block_sum[c]);
        const double ss = pairwise_sum(block_sumsq[c]);
        const double mean = s / n;
        stats.mean[c] = mean;
        const double var = samples > 1 ? std::max(0.0, (ss - n * mean * mean) / (n - 1.0)) : 0.0;
        stats.stderr_[c] = std::sqrt(var / n);
    }
    return stats;
}

}  // namespace nlab::parallel

/*
   Copyright 2026 The postsel Authors

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

#include "postsel/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <string>
#include <thread>

#include "postsel/error.hpp"

namespace postsel {

namespace {

constexpr std::uint64_t block_size = std::uint64_t{1} << 15;

// Calls fn(i) for i in [0, n) on up to `workers` threads. Each i is handled
// exactly once; the first exception thrown is rethrown on the caller.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn)
{
    const std::size_t nthreads = std::min<std::size_t>(workers, n);
    if (nthreads <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n)
                return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error)
                    error = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        pool.reserve(nthreads);
        for (std::size_t t = 0; t < nthreads; ++t)
            pool.emplace_back(body);
    }
    if (error)
        std::rethrow_exception(error);
}

struct Block {
    std::size_t run = 0;
    std::uint64_t begin = 0;
    std::uint64_t end = 0;
};

std::vector<Block> make_blocks(std::uint64_t n_samples, std::uint64_t n_runs)
{
    std::vector<Block> blocks;
    for (std::uint64_t r = 0; r < n_runs; ++r) {
        const std::uint64_t first = r * n_samples;
        for (std::uint64_t b = first; b < first + n_samples; b += block_size)
            blocks.push_back({static_cast<std::size_t>(r), b, std::min(b + block_size, first + n_samples)});
    }
    return blocks;
}

inline ModeVectord seed_field(std::uint64_t seed, std::uint64_t index, HiddenPhases& phases)
{
    phases = sample_phases({seed, index});
    return make_input<double>(phases).modes;
}

EnsembleResult run_with_settings(const EnsembleConfig& cfg, std::span<const Settings> per_run,
                                 LambdaSink* sink)
{
    std::vector<Propagator<double>> props;
    props.reserve(per_run.size());
    for (const auto& s : per_run)
        props.emplace_back(cfg.gain, s);

    EnsembleResult result;
    result.runs.assign(cfg.n_runs, EnsembleStats{cfg.settings});
    result.pooled.settings = cfg.settings;

    const auto blocks = make_blocks(cfg.n_samples, cfg.n_runs);
    const unsigned workers = resolve_workers(cfg.workers);
    const bool record = cfg.record_lambdas && sink != nullptr;
    const std::size_t wave = record ? std::max<std::size_t>(4 * workers, 16) : blocks.size();

    std::vector<EnsembleStats> block_stats;
    std::vector<std::vector<LambdaRecord>> block_records;
    for (std::size_t w0 = 0; w0 < blocks.size(); w0 += wave) {
        const std::size_t w1 = std::min(blocks.size(), w0 + wave);
        block_stats.assign(w1 - w0, EnsembleStats{});
        if (record)
            block_records.assign(w1 - w0, {});

        parallel_for(w1 - w0, workers, [&](std::size_t j) {
            const Block& blk = blocks[w0 + j];
            const auto& prop = props[blk.run];
            EnsembleStats& st = block_stats[j];
            std::vector<LambdaRecord>* recs = record ? &block_records[j] : nullptr;
            if (recs)
                recs->reserve(blk.end - blk.begin);
            HiddenPhases phases;
            for (std::uint64_t i = blk.begin; i < blk.end; ++i) {
                const RunOutcome o = detect(prop(seed_field(cfg.master_seed, i, phases)), cfg.thresholds,
                                            cfg.side_rule);
                st.joint_count += o.joint;
                st.side_III_count += o.side_III;
                st.side_IV_count += o.side_IV;
                st.either_side_count += either_side(o);
                if (recs)
                    recs->push_back({i, phases, o.joint});
            }
            st.n = blk.end - blk.begin;
        });

        for (std::size_t j = 0; j < w1 - w0; ++j) {
            result.runs[blocks[w0 + j].run] += block_stats[j];
            if (record && sink != nullptr)
                sink->consume(block_records[j]);
        }
    }

    for (const auto& r : result.runs)
        result.pooled += r;
    return result;
}

} // namespace

unsigned resolve_workers(unsigned requested)
{
    if (requested != 0)
        return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

void EnsembleConfig::validate() const
{
    if (n_samples < 1)
        throw ValidationError("n_samples must be >= 1");
    if (n_runs < 1)
        throw ValidationError("n_runs must be >= 1");
    if (n_samples > std::numeric_limits<std::uint64_t>::max() / n_runs)
        throw ValidationError("n_samples * n_runs overflows");
    thresholds.validate();
}

std::uint64_t EnsembleConfig::total_samples() const
{
    return n_samples * n_runs;
}

double EnsembleStats::rate(std::uint64_t count) const
{
    if (n == 0)
        throw UndefinedError("rate of an empty ensemble");
    return static_cast<double>(count) / static_cast<double>(n);
}

double EnsembleStats::std_err(std::uint64_t count) const
{
    const double p = rate(count);
    return std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

EnsembleStats& EnsembleStats::operator+=(const EnsembleStats& other)
{
    n += other.n;
    joint_count += other.joint_count;
    side_III_count += other.side_III_count;
    side_IV_count += other.side_IV_count;
    either_side_count += other.either_side_count;
    return *this;
}

double EnsembleResult::joint_run_scatter() const
{
    if (runs.size() < 2)
        return 0.0;
    double mean = 0.0;
    for (const auto& r : runs)
        mean += r.p_joint();
    mean /= static_cast<double>(runs.size());
    double ss = 0.0;
    for (const auto& r : runs)
        ss += (r.p_joint() - mean) * (r.p_joint() - mean);
    return std::sqrt(ss / static_cast<double>(runs.size() - 1));
}

void MemoryLambdaSink::consume(std::span<const LambdaRecord> batch)
{
    records_.insert(records_.end(), batch.begin(), batch.end());
}

EnsembleResult run_ensemble(const EnsembleConfig& cfg, LambdaSink* sink)
{
    cfg.validate();
    if (cfg.record_lambdas) {
        if (sink == nullptr)
            throw ValidationError("record_lambdas requires a sink");
        if (cfg.total_samples() > cfg.max_records)
            throw ResourceError("lambda recording of " + std::to_string(cfg.total_samples()) +
                                " samples exceeds the record budget of " +
                                std::to_string(cfg.max_records));
    }
    const std::vector<Settings> per_run(cfg.n_runs, cfg.settings);
    return run_with_settings(cfg, per_run, sink);
}

std::vector<std::uint32_t> joint_masks(const EnsembleConfig& cfg, std::span<const Settings> settings)
{
    cfg.validate();
    if (settings.empty() || settings.size() > 32)
        throw ValidationError("joint_masks takes between 1 and 32 settings");
    if (cfg.total_samples() > cfg.max_records)
        throw ResourceError("mask buffer exceeds the record budget");

    std::vector<Propagator<double>> props;
    for (const auto& s : settings)
        props.emplace_back(cfg.gain, s);

    const std::uint64_t total = cfg.total_samples();
    std::vector<std::uint32_t> masks(total, 0u);
    const std::size_t n_blocks = (total + block_size - 1) / block_size;
    parallel_for(n_blocks, resolve_workers(cfg.workers), [&](std::size_t b) {
        const std::uint64_t begin = b * block_size;
        const std::uint64_t end = std::min(begin + block_size, total);
        HiddenPhases phases;
        for (std::uint64_t i = begin; i < end; ++i) {
            const ModeVectord in = seed_field(cfg.master_seed, i, phases);
            std::uint32_t m = 0;
            for (std::size_t k = 0; k < props.size(); ++k)
                if (detect(props[k](in), cfg.thresholds, cfg.side_rule).joint)
                    m |= std::uint32_t{1} << k;
            masks[i] = m;
        }
    });
    return masks;
}

std::vector<SweepPoint> phase_sum_grid(std::size_t points, double alpha)
{
    if (points == 0)
        throw ValidationError("grid needs at least one point");
    std::vector<SweepPoint> grid;
    grid.reserve(points);
    for (std::size_t k = 0; k < points; ++k) {
        const double sum = points == 1 ? 0.0
                                       : two_pi * static_cast<double>(k) / static_cast<double>(points - 1);
        grid.push_back({Settings(alpha, sum - alpha), sum});
    }
    return grid;
}

std::vector<SweepResult> sweep(std::span<const SweepPoint> points, const EnsembleConfig& tmpl,
                               SweepOptions options)
{
    if (points.empty())
        throw ValidationError("sweep needs at least one settings point");
    if (tmpl.record_lambdas)
        throw ValidationError("sweep does not stream lambda records; use run_ensemble");
    tmpl.validate();

    std::vector<SweepResult> out;
    out.reserve(points.size());
    for (std::size_t k = 0; k < points.size(); ++k) {
        EnsembleConfig cfg = tmpl;
        cfg.master_seed = derive_seed(tmpl.master_seed, k);
        cfg.settings = points[k].settings;

        std::vector<Settings> per_run(cfg.n_runs, cfg.settings);
        if (options.mixed_alpha) {
            for (std::uint64_t r = (cfg.n_runs + 1) / 2; r < cfg.n_runs; ++r) {
                const auto bits = random_block({cfg.master_seed, r}, Stream::alpha);
                const double a = uniform_angle(bits[0], bits[1]);
                per_run[r] = Settings(a, points[k].phase_sum - a);
            }
        }
        out.push_back({points[k], run_with_settings(cfg, per_run, nullptr)});
    }
    return out;
}

std::vector<SweepResult> sweep(std::span<const Settings> settings, const EnsembleConfig& tmpl,
                               SweepOptions options)
{
    std::vector<SweepPoint> points;
    points.reserve(settings.size());
    for (const auto& s : settings)
        points.push_back({s, s.phase_sum()});
    return sweep(points, tmpl, options);
}

} // namespace postsel

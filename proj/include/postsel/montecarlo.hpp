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

#pragma once

// Ensemble runner: sample lambda -> propagate -> detect, over many seeds.
//
// Every sample is a pure function of (master_seed, sample_index), and the
// reduction is an integer sum, so counts are bit-identical for any worker
// count. Run r of an ensemble owns sample indices [r*n, (r+1)*n).

#include <cstdint>
#include <span>
#include <vector>

#include "postsel/detection.hpp"
#include "postsel/field.hpp"
#include "postsel/sampling.hpp"

namespace postsel {

struct EnsembleConfig {
    std::uint64_t n_samples = 1'000'000;
    std::uint64_t n_runs = 10;
    std::uint64_t master_seed = 0;
    Gain gain{};
    Settings settings{};
    DetectionThresholds thresholds{};
    SideRule side_rule = SideRule::any_mode;
    bool record_lambdas = false;
    unsigned workers = 0; // 0: one per hardware thread
    std::uint64_t max_records = 50'000'000;

    void validate() const;
    std::uint64_t total_samples() const;
};

struct EnsembleStats {
    Settings settings{};
    std::uint64_t n = 0;
    std::uint64_t joint_count = 0;
    std::uint64_t side_III_count = 0;
    std::uint64_t side_IV_count = 0;
    std::uint64_t either_side_count = 0;

    double p_joint() const { return rate(joint_count); }
    double p_marginal_III() const { return rate(side_III_count); }
    double p_marginal_IV() const { return rate(side_IV_count); }
    double p_either() const { return rate(either_side_count); }

    double std_err_joint() const { return std_err(joint_count); }
    double std_err(std::uint64_t count) const;
    double rate(std::uint64_t count) const;

    EnsembleStats& operator+=(const EnsembleStats& other);
    friend bool operator==(const EnsembleStats&, const EnsembleStats&) = default;
};

struct EnsembleResult {
    EnsembleStats pooled;
    std::vector<EnsembleStats> runs;

    // Sample standard deviation of per-run p_joint (0 with fewer than two runs).
    double joint_run_scatter() const;
};

struct LambdaRecord {
    std::uint64_t sample_index = 0;
    HiddenPhases phases;
    bool joint = false;
};

// Receives records in ascending sample_index order, in batches.
class LambdaSink {
public:
    virtual ~LambdaSink() = default;
    virtual void consume(std::span<const LambdaRecord> batch) = 0;
};

class MemoryLambdaSink final : public LambdaSink {
public:
    void consume(std::span<const LambdaRecord> batch) override;
    const std::vector<LambdaRecord>& records() const { return records_; }

private:
    std::vector<LambdaRecord> records_;
};

EnsembleResult run_ensemble(const EnsembleConfig& cfg, LambdaSink* sink = nullptr);

// Joint-detection bitmask per sample, one bit per entry of `settings`, all
// evaluated on the same lambda stream (master_seed, 0..total_samples).
// Holding lambda fixed while the settings vary is what the SI diagnostics need.
std::vector<std::uint32_t> joint_masks(const EnsembleConfig& cfg, std::span<const Settings> settings);

struct SweepPoint {
    Settings settings;
    double phase_sum = 0.0; // nominal alpha+beta, not reduced (2pi stays 2pi)
};

struct SweepOptions {
    // Second half of the runs at each point use a random alpha, with beta
    // set so that alpha+beta stays on the grid value.
    bool mixed_alpha = false;
};

struct SweepResult {
    SweepPoint point;
    EnsembleResult result;
};

// `points` evenly spaced phase sums over [0, 2pi], endpoints included.
std::vector<SweepPoint> phase_sum_grid(std::size_t points, double alpha = 0.0);

// One ensemble per point; point k uses master seed derive_seed(master_seed, k).
std::vector<SweepResult> sweep(std::span<const SweepPoint> points, const EnsembleConfig& tmpl,
                               SweepOptions options = {});
std::vector<SweepResult> sweep(std::span<const Settings> settings, const EnsembleConfig& tmpl,
                               SweepOptions options = {});

unsigned resolve_workers(unsigned requested);

} // namespace postsel

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

// Run manifests and result serialization.
//
// CSV is the plotting format: one ensemble per row, fixed columns, 17
// significant digits, LF endings. JSON is the regression format: it embeds
// the manifest and keeps counts as integers so they survive a round trip.

#include <array>
#include <cstdint>
#include <cstdio>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "postsel/analysis.hpp"
#include "postsel/montecarlo.hpp"
#include "postsel/toymodel.hpp"

namespace postsel {

inline constexpr const char* tool_version = "0.1.0";

enum class Command { sweep, marginals, chsh, si_overlap, cset_check, toy_coin, toy_polarizer };
enum class OutputFormat { csv, json };

std::string to_string(Command c);
Command command_from_string(const std::string& s);

struct RunManifest {
    Command command = Command::sweep;

    double gain = Gain::default_value;
    std::uint64_t samples = 1'000'000;
    std::uint64_t runs = 10;
    std::uint64_t seed = 0;
    double alpha = 0.0; // radians
    double beta = 0.0;
    std::size_t points = 17;
    double threshold_lower = 1.0;
    double threshold_upper = 1.4142135623730951;
    SideRule side_rule = SideRule::any_mode;
    bool mixed_alpha = false;
    unsigned workers = 0;

    ChshQuad quad{0.0, 1.5707963267948966, -0.78539816339744828, 0.78539816339744828};
    std::array<double, 2> set_m{0.0, 0.78539816339744828};
    std::array<double, 2> set_mprime{0.0, 2.3561944901923448};

    std::string keep_rule = "alpha-eq-B";
    double polarizer_angle_m = 0.0;
    double polarizer_angle_mprime = 0.78539816339744828;
    bool polarizer_sampled = false;

    std::string out_path; // empty: stdout
    OutputFormat format = OutputFormat::csv;
    std::string lambdas_path;

    std::string version = tool_version;
    std::string timestamp;

    EnsembleConfig ensemble_config() const;
    void validate() const; // throws ValidationError
};

nlohmann::json to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);

std::string utc_timestamp();

// Decimal with 17 significant digits: enough to round-trip any double.
std::string format_double(double v);

struct EnsembleRow {
    double alpha = 0.0;
    double beta = 0.0;
    double phase_sum = 0.0;
    EnsembleStats stats;
};

inline constexpr const char* csv_header = "alpha,beta,phase_sum,p_joint,std_err,p_marg_III,p_marg_IV,p_either,n";

std::vector<EnsembleRow> rows_from_sweep(std::span<const SweepResult> sweep);

void emit_csv(std::span<const EnsembleRow> rows, std::ostream& os);
std::string emit_csv(std::span<const EnsembleRow> rows);

nlohmann::json to_json(const EnsembleStats& s);
nlohmann::json to_json(const EnsembleRow& r);
nlohmann::json to_json(const CurveFit& f);
nlohmann::json to_json(const NormalizedProbability& p);
nlohmann::json to_json(const CHSHResult& r);
nlohmann::json to_json(const SIOverlapReport& r);
nlohmann::json to_json(const CSetCheckReport& r);
nlohmann::json to_json(const CoinToyStats& s);
nlohmann::json to_json(const PolarizerReport& r);

EnsembleStats stats_from_json(const nlohmann::json& j);

// Pretty-printed JSON with a trailing newline.
std::string dump_json(const nlohmann::json& j);

// Writes the whole file or throws IoError.
void write_file(const std::string& path, const std::string& content);

// Streams lambda records as CSV: sample_index,delta1,delta2,delta3,delta4,joint
class CsvLambdaSink final : public LambdaSink {
public:
    explicit CsvLambdaSink(const std::string& path);
    ~CsvLambdaSink() override;
    CsvLambdaSink(const CsvLambdaSink&) = delete;
    CsvLambdaSink& operator=(const CsvLambdaSink&) = delete;
    void consume(std::span<const LambdaRecord> batch) override;

private:
    std::FILE* file_ = nullptr;
    std::string path_;
};

} // namespace postsel

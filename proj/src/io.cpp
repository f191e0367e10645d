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

#include "postsel/io.hpp"

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>
#include <ostream>
#include <sstream>

#include "postsel/error.hpp"

namespace postsel {

using nlohmann::json;

namespace {

const char* side_rule_name(SideRule r)
{
    return r == SideRule::both_modes ? "both" : "any";
}

SideRule side_rule_from(const std::string& s)
{
    if (s == "any")
        return SideRule::any_mode;
    if (s == "both")
        return SideRule::both_modes;
    throw ValidationError("unknown side rule: " + s);
}

// JSON has no infinity; an open upper band is written as null.
json finite_or_null(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

json nan_or_value(double v)
{
    return std::isnan(v) ? json(nullptr) : json(v);
}

} // namespace

std::string to_string(Command c)
{
    switch (c) {
    case Command::sweep: return "sweep";
    case Command::marginals: return "marginals";
    case Command::chsh: return "chsh";
    case Command::si_overlap: return "si-overlap";
    case Command::cset_check: return "cset-check";
    case Command::toy_coin: return "toy coin";
    case Command::toy_polarizer: return "toy polarizer";
    }
    return "?";
}

Command command_from_string(const std::string& s)
{
    for (Command c : {Command::sweep, Command::marginals, Command::chsh, Command::si_overlap, Command::cset_check,
                      Command::toy_coin, Command::toy_polarizer})
        if (to_string(c) == s)
            return c;
    throw ValidationError("unknown command: " + s);
}

EnsembleConfig RunManifest::ensemble_config() const
{
    EnsembleConfig cfg;
    cfg.n_samples = samples;
    cfg.n_runs = runs;
    cfg.master_seed = seed;
    cfg.gain = Gain(gain);
    cfg.settings = Settings(alpha, beta);
    cfg.thresholds = {threshold_lower, threshold_upper};
    cfg.side_rule = side_rule;
    cfg.workers = workers;
    return cfg;
}

void RunManifest::validate() const
{
    if (!std::isfinite(gain) || gain < 0.0)
        throw ValidationError("--gain must be finite and >= 0");
    if (samples < 1)
        throw ValidationError("--samples must be >= 1");
    if (runs < 1)
        throw ValidationError("--runs must be >= 1");
    if (points < 1)
        throw ValidationError("--points must be >= 1");
    DetectionThresholds{threshold_lower, threshold_upper}.validate();
    for (double a : {alpha, beta, quad.a, quad.a_prime, quad.b, quad.b_prime, set_m[0], set_m[1], set_mprime[0],
                     set_mprime[1], polarizer_angle_m, polarizer_angle_mprime})
        if (!std::isfinite(a))
            throw ValidationError("angles must be finite");
    if (keep_rule != "always" && keep_rule != "alpha-eq-B" && keep_rule != "chsh")
        throw ValidationError("unknown keep rule: " + keep_rule);
    ensemble_config().validate();
}

json to_json(const RunManifest& m)
{
    return json{
        {"command", to_string(m.command)},
        {"gain", m.gain},
        {"samples", m.samples},
        {"runs", m.runs},
        {"seed", m.seed},
        {"alpha", m.alpha},
        {"beta", m.beta},
        {"points", m.points},
        {"threshold_lower", m.threshold_lower},
        {"threshold_upper", finite_or_null(m.threshold_upper)},
        {"side_rule", side_rule_name(m.side_rule)},
        {"mixed_alpha", m.mixed_alpha},
        {"quad", {m.quad.a, m.quad.a_prime, m.quad.b, m.quad.b_prime}},
        {"set_m", m.set_m},
        {"set_mprime", m.set_mprime},
        {"keep_rule", m.keep_rule},
        {"polarizer_angle_m", m.polarizer_angle_m},
        {"polarizer_angle_mprime", m.polarizer_angle_mprime},
        {"polarizer_sampled", m.polarizer_sampled},
        {"version", m.version},
        {"timestamp", m.timestamp},
    };
}

RunManifest manifest_from_json(const json& j)
{
    RunManifest m;
    try {
        m.command = command_from_string(j.at("command").get<std::string>());
        m.gain = j.at("gain").get<double>();
        m.samples = j.at("samples").get<std::uint64_t>();
        m.runs = j.at("runs").get<std::uint64_t>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.alpha = j.at("alpha").get<double>();
        m.beta = j.at("beta").get<double>();
        m.points = j.at("points").get<std::size_t>();
        m.threshold_lower = j.at("threshold_lower").get<double>();
        m.threshold_upper = j.at("threshold_upper").is_null() ? INFINITY : j.at("threshold_upper").get<double>();
        m.side_rule = side_rule_from(j.at("side_rule").get<std::string>());
        m.mixed_alpha = j.at("mixed_alpha").get<bool>();
        const auto q = j.at("quad").get<std::array<double, 4>>();
        m.quad = {q[0], q[1], q[2], q[3]};
        m.set_m = j.at("set_m").get<std::array<double, 2>>();
        m.set_mprime = j.at("set_mprime").get<std::array<double, 2>>();
        m.keep_rule = j.at("keep_rule").get<std::string>();
        m.polarizer_angle_m = j.at("polarizer_angle_m").get<double>();
        m.polarizer_angle_mprime = j.at("polarizer_angle_mprime").get<double>();
        m.polarizer_sampled = j.at("polarizer_sampled").get<bool>();
        m.version = j.at("version").get<std::string>();
        m.timestamp = j.at("timestamp").get<std::string>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed manifest: ") + e.what());
    }
    return m;
}

std::string utc_timestamp()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<EnsembleRow> rows_from_sweep(std::span<const SweepResult> sweep)
{
    std::vector<EnsembleRow> rows;
    rows.reserve(sweep.size());
    for (const auto& r : sweep)
        rows.push_back({r.point.settings.alpha(), r.point.settings.beta(), r.point.phase_sum, r.result.pooled});
    return rows;
}

void emit_csv(std::span<const EnsembleRow> rows, std::ostream& os)
{
    os << csv_header << '\n';
    for (const auto& r : rows) {
        const auto& s = r.stats;
        os << format_double(r.alpha) << ',' << format_double(r.beta) << ',' << format_double(r.phase_sum) << ','
           << format_double(s.p_joint()) << ',' << format_double(s.std_err_joint()) << ','
           << format_double(s.p_marginal_III()) << ',' << format_double(s.p_marginal_IV()) << ','
           << format_double(s.p_either()) << ',' << s.n << '\n';
    }
}

std::string emit_csv(std::span<const EnsembleRow> rows)
{
    std::ostringstream os;
    emit_csv(rows, os);
    return os.str();
}

json to_json(const EnsembleStats& s)
{
    return json{
        {"alpha", s.settings.alpha()},
        {"beta", s.settings.beta()},
        {"n", s.n},
        {"joint_count", s.joint_count},
        {"side_III_count", s.side_III_count},
        {"side_IV_count", s.side_IV_count},
        {"either_side_count", s.either_side_count},
        {"p_joint", s.p_joint()},
        {"p_marginal_III", s.p_marginal_III()},
        {"p_marginal_IV", s.p_marginal_IV()},
        {"p_either", s.p_either()},
        {"std_err_joint", s.std_err_joint()},
    };
}

EnsembleStats stats_from_json(const json& j)
{
    EnsembleStats s;
    s.settings = Settings(j.at("alpha").get<double>(), j.at("beta").get<double>());
    s.n = j.at("n").get<std::uint64_t>();
    s.joint_count = j.at("joint_count").get<std::uint64_t>();
    s.side_III_count = j.at("side_III_count").get<std::uint64_t>();
    s.side_IV_count = j.at("side_IV_count").get<std::uint64_t>();
    s.either_side_count = j.at("either_side_count").get<std::uint64_t>();
    return s;
}

json to_json(const EnsembleRow& r)
{
    json j = to_json(r.stats);
    j["alpha"] = r.alpha;
    j["beta"] = r.beta;
    j["phase_sum"] = r.phase_sum;
    return j;
}

json to_json(const CurveFit& f)
{
    return json{
        {"amplitude_A", f.amplitude_A},   {"offset", f.offset},
        {"residual_rms", f.residual_rms}, {"amplitude_err", f.amplitude_err},
        {"offset_err", f.offset_err},     {"raw_offset", f.raw_offset},
        {"offset_clamped", f.offset_clamped}, {"weighted", f.weighted},
    };
}

json to_json(const NormalizedProbability& p)
{
    return json{{"numerator_rate", p.numerator_rate}, {"partition_Z", p.partition_Z}, {"p", p.p}};
}

json to_json(const CHSHResult& r)
{
    return json{
        {"quad", {r.quad.a, r.quad.a_prime, r.quad.b, r.quad.b_prime}},
        {"correlators", r.correlators},
        {"correlator_errs", r.correlator_errs},
        {"S", r.S},
        {"S_err", r.S_err},
    };
}

namespace {

json members_json(const ComplementarySet& s)
{
    json arr = json::array();
    for (const auto& m : s.members)
        arr.push_back({m.alpha(), m.beta()});
    return arr;
}

} // namespace

json to_json(const SIOverlapReport& r)
{
    json fm = json::array(), fmp = json::array();
    for (std::size_t k = 0; k < 4; ++k) {
        fm.push_back(r.member_count_M[k] ? json(r.member_fraction_M(k)) : json(nullptr));
        fmp.push_back(r.member_count_Mprime[k] ? json(r.member_fraction_Mprime(k)) : json(nullptr));
    }
    return json{
        {"set_M", members_json(r.set_M)},
        {"set_Mprime", members_json(r.set_Mprime)},
        {"n", r.n},
        {"lambdas_M", r.lambdas_M},
        {"lambdas_Mprime", r.lambdas_Mprime},
        {"lambdas_both", r.lambdas_both},
        {"overlap_fraction", r.overlap_fraction},
        {"reverse_fraction", r.reverse_fraction},
        {"member_count_M", r.member_count_M},
        {"member_overlap_M", r.member_overlap_M},
        {"member_fraction_M", fm},
        {"member_count_Mprime", r.member_count_Mprime},
        {"member_overlap_Mprime", r.member_overlap_Mprime},
        {"member_fraction_Mprime", fmp},
    };
}

json to_json(const CSetCheckReport& r)
{
    return json{
        {"n", r.n},
        {"histogram_M", r.histogram_M},
        {"histogram_Mprime", r.histogram_Mprime},
        {"disagreements", r.disagreements},
        {"disagreement_fraction", r.disagreement_fraction},
    };
}

json to_json(const CoinToyStats& s)
{
    json ek = json::array(), ea = json::array(), pk = json::array(), pa = json::array();
    for (std::size_t k = 0; k < 4; ++k) {
        ek.push_back(nan_or_value(s.correlators_kept[k]));
        ea.push_back(nan_or_value(s.correlators_all[k]));
    }
    for (std::size_t a = 0; a < 2; ++a) {
        pk.push_back(nan_or_value(s.p_B_given_alpha_kept[a]));
        pa.push_back(nan_or_value(s.p_B_given_alpha_all[a]));
    }
    return json{
        {"n", s.n},
        {"kept", s.kept},
        {"keep_rate", s.keep_rate},
        {"p_alpha_eq_B_kept", s.p_alpha_eq_B_kept},
        {"p_alpha_eq_B_all", s.p_alpha_eq_B_all},
        {"correlators_kept", ek},
        {"correlators_all", ea},
        {"correlator_errs_all", s.correlator_errs_all},
        {"pair_counts_kept", s.pair_counts_kept},
        {"pair_counts_all", s.pair_counts_all},
        {"S_kept", nan_or_value(s.S_kept)},
        {"S_all", s.S_all},
        {"p_B_given_alpha_kept", pk},
        {"p_B_given_alpha_all", pa},
    };
}

json to_json(const PolarizerReport& r)
{
    return json{
        {"n", r.n},
        {"max_abs_sum_diff", r.max_abs_sum_diff},
        {"max_abs_sum_dev", r.max_abs_sum_dev},
        {"disagreements", r.disagreements},
        {"disagreement_fraction", r.disagreement_fraction},
        {"sampled_counts_M", r.sampled_counts_M},
        {"sampled_counts_Mprime", r.sampled_counts_Mprime},
        {"sampled_detected_M", r.sampled_detected_M},
        {"sampled_detected_Mprime", r.sampled_detected_Mprime},
    };
}

std::string dump_json(const json& j)
{
    return j.dump(2) + "\n";
}

void write_file(const std::string& path, const std::string& content)
{
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw IoError("cannot open " + path + " for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    f.close();
    if (!f)
        throw IoError("write to " + path + " failed");
}

CsvLambdaSink::CsvLambdaSink(const std::string& path) : path_(path)
{
    file_ = std::fopen(path.c_str(), "wb");
    if (!file_)
        throw IoError("cannot open " + path + ": " + std::strerror(errno));
    std::fputs("sample_index,delta1,delta2,delta3,delta4,joint\n", file_);
}

CsvLambdaSink::~CsvLambdaSink()
{
    if (file_)
        std::fclose(file_);
}

void CsvLambdaSink::consume(std::span<const LambdaRecord> batch)
{
    for (const auto& r : batch) {
        const auto& d = r.phases.delta;
        if (std::fprintf(file_, "%llu,%.17g,%.17g,%.17g,%.17g,%d\n", static_cast<unsigned long long>(r.sample_index),
                         d[0], d[1], d[2], d[3], r.joint ? 1 : 0) < 0)
            throw IoError("write to " + path_ + " failed");
    }
}

} // namespace postsel

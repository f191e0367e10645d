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

#include "postsel/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "CLI11.hpp"

#include "postsel/analysis.hpp"
#include "postsel/montecarlo.hpp"
#include "postsel/toymodel.hpp"

namespace postsel {

using nlohmann::json;

namespace {

struct Flags {
    double gain = Gain::default_value;
    std::int64_t samples = 1'000'000;
    std::int64_t runs = 10;
    std::uint64_t seed = 0;
    double alpha = 0.0;
    double beta = 0.0;
    std::int64_t points = 17;
    double threshold_lower = 1.0;
    double threshold_upper = std::sqrt(2.0);
    std::string side_rule = "any";
    bool degrees = false;
    std::string out;
    std::string format = "csv";
    std::int64_t workers = 0;
    bool mixed_alpha = false;
    std::string quad;
    std::string set_m;
    std::string set_mprime;
    std::string keep_rule = "alpha-eq-B";
    double angle_m = 0.0;
    double angle_mprime = std::numbers::pi / 4.0;
    bool sampled = false;
    std::string lambdas;
    std::string manifest_path;
};

std::vector<double> parse_list(const std::string& text, std::size_t expected, const char* flag)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size())
            throw UsageError(std::string(flag) + ": '" + item + "' is not a number\n");
        out.push_back(v);
    }
    if (out.size() != expected)
        throw UsageError(std::string(flag) + " expects " + std::to_string(expected) + " comma-separated values\n");
    return out;
}

void add_output_flags(CLI::App* sub, Flags& f)
{
    sub->add_option("--out", f.out, "Output path (default: stdout)");
    sub->add_option("--format", f.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
}

void add_common(CLI::App* sub, Flags& f)
{
    sub->add_option("--gain", f.gain, "Crystal gain g (>= 0)");
    sub->add_option("--samples", f.samples, "Seeds per run");
    sub->add_option("--runs", f.runs, "Independent runs per settings point");
    sub->add_option("--seed", f.seed, "Master seed");
    sub->add_option("--alpha", f.alpha, "Phase plate alpha");
    sub->add_option("--beta", f.beta, "Phase plate beta");
    sub->add_option("--points", f.points, "Grid points");
    sub->add_option("--threshold-lower", f.threshold_lower, "Lower detection amplitude (inclusive)");
    sub->add_option("--threshold-upper", f.threshold_upper, "Upper detection amplitude (exclusive)");
    sub->add_option("--side-rule", f.side_rule, "Per-side detection: any or both modes")
        ->check(CLI::IsMember({"any", "both"}));
    sub->add_option("--workers", f.workers, "Worker threads (0: all cores)");
    sub->add_flag("--degrees", f.degrees, "Angles are given in degrees");
    add_output_flags(sub, f);
}

RunManifest to_manifest(Command cmd, const Flags& f, bool points_given)
{
    if (f.samples < 1)
        throw ValidationError("--samples must be >= 1");
    if (f.runs < 1)
        throw ValidationError("--runs must be >= 1");
    if (f.points < 1)
        throw ValidationError("--points must be >= 1");
    if (f.workers < 0)
        throw ValidationError("--workers must be >= 0");

    const double unit = f.degrees ? std::numbers::pi / 180.0 : 1.0;
    RunManifest m;
    m.command = cmd;
    m.gain = f.gain;
    m.samples = static_cast<std::uint64_t>(f.samples);
    m.runs = static_cast<std::uint64_t>(f.runs);
    m.seed = f.seed;
    m.alpha = f.alpha * unit;
    m.beta = f.beta * unit;
    m.points = static_cast<std::size_t>(f.points);
    if (cmd == Command::marginals && !points_given)
        m.points = 4;
    m.threshold_lower = f.threshold_lower;
    m.threshold_upper = f.threshold_upper;
    m.side_rule = f.side_rule == "both" ? SideRule::both_modes : SideRule::any_mode;
    m.mixed_alpha = f.mixed_alpha;
    m.workers = static_cast<unsigned>(f.workers);
    if (!f.quad.empty()) {
        const auto q = parse_list(f.quad, 4, "--quad");
        m.quad = {q[0] * unit, q[1] * unit, q[2] * unit, q[3] * unit};
    }
    if (!f.set_m.empty()) {
        const auto s = parse_list(f.set_m, 2, "--set-m");
        m.set_m = {s[0] * unit, s[1] * unit};
    }
    if (!f.set_mprime.empty()) {
        const auto s = parse_list(f.set_mprime, 2, "--set-mprime");
        m.set_mprime = {s[0] * unit, s[1] * unit};
    }
    m.keep_rule = f.keep_rule;
    m.polarizer_angle_m = f.angle_m * unit;
    m.polarizer_angle_mprime = f.angle_mprime * unit;
    m.polarizer_sampled = f.sampled;
    m.out_path = f.out;
    m.format = f.format == "json" ? OutputFormat::json : OutputFormat::csv;
    m.lambdas_path = f.lambdas;
    m.validate();
    return m;
}

RunManifest load_manifest(const Flags& f)
{
    std::ifstream in(f.manifest_path);
    if (!in)
        throw IoError("cannot read manifest " + f.manifest_path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("manifest is not valid JSON: ") + e.what());
    }
    RunManifest m = manifest_from_json(j.contains("manifest") ? j.at("manifest") : j);
    m.out_path = f.out;
    m.format = f.format == "json" ? OutputFormat::json : OutputFormat::csv;
    m.validate();
    return m;
}

// ---------------------------------------------------------------------------

void flatten(const json& j, const std::string& prefix, std::string& out)
{
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it)
            flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i)
            flatten(j[i], prefix + "[" + std::to_string(i) + "]", out);
    } else {
        out += prefix + ",";
        if (j.is_number_float())
            out += format_double(j.get<double>());
        else if (j.is_string())
            out += j.get<std::string>();
        else if (!j.is_null())
            out += j.dump();
        out += "\n";
    }
}

std::string metric_csv(const json& result)
{
    std::string out = "metric,value\n";
    flatten(result, "", out);
    return out;
}

void deliver(const RunManifest& m, const std::string& body, std::ostream& out)
{
    if (m.out_path.empty()) {
        out << body;
        return;
    }
    write_file(m.out_path, body);
    if (m.format == OutputFormat::csv)
        write_file(m.out_path + ".manifest.json", dump_json(to_json(m)));
}

void finish(const RunManifest& m, const json& result, const std::string& csv_body, std::ostream& out)
{
    if (m.format == OutputFormat::json)
        deliver(m, dump_json(json{{"manifest", to_json(m)}, {"result", result}}), out);
    else
        deliver(m, csv_body, out);
}

json fit_or_null(std::span<const SweepResult> results, json& result)
{
    try {
        return to_json(fit_cosine(joint_curve(results)));
    } catch (const Error& e) {
        result["fit_error"] = e.what();
        return nullptr;
    }
}

void cmd_sweep(const RunManifest& m, std::ostream& out)
{
    const auto grid = phase_sum_grid(m.points, m.alpha);
    const auto results = sweep(grid, m.ensemble_config(), {m.mixed_alpha});
    const auto rows = rows_from_sweep(results);

    json result;
    json jrows = json::array();
    for (std::size_t k = 0; k < rows.size(); ++k) {
        json row = to_json(rows[k]);
        json per_run = json::array();
        for (const auto& r : results[k].result.runs)
            per_run.push_back(r.p_joint());
        row["run_p_joint"] = per_run;
        row["run_scatter_joint"] = results[k].result.joint_run_scatter();
        jrows.push_back(row);
    }
    result["rows"] = jrows;
    result["fit"] = fit_or_null(results, result);
    finish(m, result, emit_csv(rows), out);
}

void cmd_marginals(const RunManifest& m, std::ostream& out)
{
    std::vector<Settings> grid;
    const double step = two_pi / static_cast<double>(m.points);
    for (std::size_t i = 0; i < m.points; ++i)
        for (std::size_t j = 0; j < m.points; ++j)
            grid.emplace_back(m.alpha + step * static_cast<double>(i), m.beta + step * static_cast<double>(j));

    const EnsembleConfig cfg = m.ensemble_config();
    const auto results = sweep(std::span<const Settings>(grid), cfg);
    const auto rows = rows_from_sweep(results);

    json result;
    json jrows = json::array();
    double lo3 = 1.0, hi3 = 0.0, lo4 = 1.0, hi4 = 0.0;
    EnsembleStats pooled;
    for (const auto& row : rows) {
        json jr = to_json(row);
        try {
            jr["either_side_normalization"] = to_json(normalize_either_side(row.stats));
        } catch (const UndefinedError&) {
            jr["either_side_normalization"] = nullptr;
        }
        jrows.push_back(jr);
        lo3 = std::min(lo3, row.stats.p_marginal_III());
        hi3 = std::max(hi3, row.stats.p_marginal_III());
        lo4 = std::min(lo4, row.stats.p_marginal_IV());
        hi4 = std::max(hi4, row.stats.p_marginal_IV());
        pooled += row.stats;
    }
    result["rows"] = jrows;
    result["summary"] = {
        {"p_marginal_III", pooled.p_marginal_III()}, {"p_marginal_IV", pooled.p_marginal_IV()},
        {"range_III", hi3 - lo3},                    {"range_IV", hi4 - lo4},
        {"n_total", pooled.n},
    };

    if (!m.lambdas_path.empty()) {
        EnsembleConfig rec = cfg;
        rec.record_lambdas = true;
        CsvLambdaSink sink(m.lambdas_path);
        run_ensemble(rec, &sink);
        result["lambdas_path"] = m.lambdas_path;
    }
    finish(m, result, emit_csv(rows), out);
}

void cmd_chsh(const RunManifest& m, std::ostream& out)
{
    const auto settings = chsh_settings(m.quad);
    const auto results = sweep(std::span<const Settings>(settings), m.ensemble_config());
    std::array<RateEstimate, 16> rates;
    for (std::size_t k = 0; k < 16; ++k)
        rates[k] = {results[k].result.pooled.p_joint(), results[k].result.pooled.std_err_joint()};
    const CHSHResult res = chsh(m.quad, rates);

    json result = to_json(res);
    json members = json::array();
    for (const auto& r : results)
        members.push_back(to_json(r.result.pooled));
    result["members"] = members;
    finish(m, result, emit_csv(rows_from_sweep(results)), out);
}

std::pair<ComplementarySet, ComplementarySet> sets_of(const RunManifest& m)
{
    return {complementary_set(Settings(m.set_m[0], m.set_m[1])),
            complementary_set(Settings(m.set_mprime[0], m.set_mprime[1]))};
}

void cmd_si_overlap(const RunManifest& m, std::ostream& out)
{
    const auto [M, Mp] = sets_of(m);
    const json result = to_json(si_overlap(M, Mp, m.ensemble_config()));
    finish(m, result, metric_csv(result), out);
}

void cmd_cset_check(const RunManifest& m, std::ostream& out)
{
    const auto [M, Mp] = sets_of(m);
    const json result = to_json(cset_condition_check(M, Mp, m.ensemble_config()));
    finish(m, result, metric_csv(result), out);
}

void cmd_toy_coin(const RunManifest& m, std::ostream& out)
{
    KeepRule rule;
    json result;
    if (m.keep_rule == "always") {
        rule = keep_always();
    } else if (m.keep_rule == "alpha-eq-B") {
        rule = keep_alpha_equals_B();
    } else {
        const ChshKeepRule derived = derive_chsh_keep_rule();
        rule = PatternRule{derived.keep_mask};
        result["keep_mask"] = derived.keep_mask;
        result["expected_S"] = derived.S;
    }
    result["stats"] = to_json(run_coin_toy(m.samples, rule, m.seed));
    finish(m, result, metric_csv(result), out);
}

void cmd_toy_polarizer(const RunManifest& m, std::ostream& out)
{
    PolarizerConfig cfg;
    cfg.n = m.samples;
    cfg.seed = m.seed;
    cfg.angle_M = m.polarizer_angle_m;
    cfg.angle_Mprime = m.polarizer_angle_mprime;
    cfg.sampled = m.polarizer_sampled;
    const json result = to_json(run_polarizer_demo(cfg));
    finish(m, result, metric_csv(result), out);
}

} // namespace

RunManifest parse_args(const std::vector<std::string>& args)
{
    CLI::App app{"Classical four-crystal postselection model", "postsel"};
    app.require_subcommand(1);
    app.set_version_flag("--version", tool_version);

    Flags f;
    auto* sweep_cmd = app.add_subcommand("sweep", "Joint detection rate over a grid of alpha+beta");
    add_common(sweep_cmd, f);
    sweep_cmd->add_flag("--mixed-alpha", f.mixed_alpha, "Second half of runs use random alpha at fixed alpha+beta");

    auto* marg_cmd = app.add_subcommand("marginals", "Per-side detection rates over an (alpha, beta) grid");
    add_common(marg_cmd, f);
    marg_cmd->add_option("--lambdas", f.lambdas, "Also write lambda records at (alpha, beta) to this CSV");

    auto* chsh_cmd = app.add_subcommand("chsh", "CHSH on complementary-set normalized joint rates");
    add_common(chsh_cmd, f);
    chsh_cmd->add_option("--quad", f.quad, "a,a',b,b'");

    auto* si_cmd = app.add_subcommand("si-overlap", "Lambda overlap between two complementary sets");
    add_common(si_cmd, f);
    auto* cset_cmd = app.add_subcommand("cset-check", "Per-lambda member detection histograms for two sets");
    add_common(cset_cmd, f);
    for (auto* sub : {si_cmd, cset_cmd}) {
        sub->add_option("--set-m", f.set_m, "alpha,beta of the first set's base");
        sub->add_option("--set-mprime", f.set_mprime, "alpha,beta of the second set's base");
    }

    auto* toy_cmd = app.add_subcommand("toy", "Pedagogical contrast models");
    toy_cmd->require_subcommand(1);
    auto* coin_cmd = toy_cmd->add_subcommand("coin", "Coin-flip postselection toy");
    add_common(coin_cmd, f);
    coin_cmd->add_option("--keep-rule", f.keep_rule, "always, alpha-eq-B or chsh")
        ->check(CLI::IsMember({"always", "alpha-eq-B", "chsh"}));
    auto* pol_cmd = toy_cmd->add_subcommand("polarizer", "Malus's-law complementary-set demo");
    add_common(pol_cmd, f);
    pol_cmd->add_option("--angle-m", f.angle_m, "Base angle of set M");
    pol_cmd->add_option("--angle-mprime", f.angle_mprime, "Base angle of set M'");
    pol_cmd->add_flag("--sampled", f.sampled, "Also sample detections");

    auto* replay_cmd = app.add_subcommand("replay", "Re-run the configuration stored in a manifest");
    replay_cmd->add_option("manifest", f.manifest_path, "Manifest JSON (or a JSON result file)")->required();
    add_output_flags(replay_cmd, f);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::Success& e) {
        std::ostringstream o, ignored;
        app.exit(e, o, ignored);
        throw HelpRequested(o.str());
    } catch (const CLI::ParseError& e) {
        std::ostringstream o, msg;
        app.exit(e, o, msg);
        throw UsageError(msg.str());
    }

    if (*replay_cmd)
        return load_manifest(f);

    const CLI::App* used = app.get_subcommands().front();
    Command cmd{};
    if (*toy_cmd) {
        cmd = *coin_cmd ? Command::toy_coin : Command::toy_polarizer;
        used = *coin_cmd ? coin_cmd : pol_cmd;
    } else {
        cmd = command_from_string(used->get_name());
    }
    return to_manifest(cmd, f, used->count("--points") > 0);
}

void run_command(const RunManifest& m, std::ostream& out)
{
    switch (m.command) {
    case Command::sweep: return cmd_sweep(m, out);
    case Command::marginals: return cmd_marginals(m, out);
    case Command::chsh: return cmd_chsh(m, out);
    case Command::si_overlap: return cmd_si_overlap(m, out);
    case Command::cset_check: return cmd_cset_check(m, out);
    case Command::toy_coin: return cmd_toy_coin(m, out);
    case Command::toy_polarizer: return cmd_toy_polarizer(m, out);
    }
}

int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        RunManifest m = parse_args(args);
        m.timestamp = utc_timestamp();
        run_command(m, out);
        return exit_ok;
    } catch (const HelpRequested& h) {
        out << h.what();
        return exit_ok;
    } catch (const UsageError& e) {
        err << e.what();
        return exit_usage;
    } catch (const IoError& e) {
        err << "postsel: " << e.what() << '\n';
        return exit_io;
    } catch (const Error& e) {
        err << "postsel: " << e.what() << '\n';
        return exit_validation;
    }
}

} // namespace postsel

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

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "postsel/cli.hpp"

namespace postsel {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Invocation {
    int code = 0;
    std::string out;
    std::string err;
};

Invocation invoke(std::vector<std::string> args)
{
    args.insert(args.begin(), "postsel");
    std::vector<char*> argv;
    for (auto& a : args)
        argv.push_back(a.data());
    std::ostringstream out, err;
    const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json without_timestamp(json j)
{
    j["manifest"].erase("timestamp");
    return j;
}

const std::vector<std::string> quick{"--samples", "4000", "--runs", "2"};

std::vector<std::string> with_quick(std::vector<std::string> args)
{
    args.insert(args.end(), quick.begin(), quick.end());
    return args;
}

TEST(ParseArgs, Defaults)
{
    const RunManifest m = parse_args({"sweep"});
    EXPECT_EQ(m.command, Command::sweep);
    EXPECT_EQ(m.gain, 0.25);
    EXPECT_EQ(m.samples, 1'000'000u);
    EXPECT_EQ(m.runs, 10u);
    EXPECT_EQ(m.seed, 0u);
    EXPECT_EQ(m.points, 17u);
    EXPECT_EQ(m.threshold_lower, 1.0);
    EXPECT_EQ(m.threshold_upper, std::sqrt(2.0));
    EXPECT_EQ(m.format, OutputFormat::csv);
    EXPECT_EQ(parse_args({"marginals"}).points, 4u);
    EXPECT_EQ(parse_args({"marginals", "--points", "3"}).points, 3u);
}

TEST(ParseArgs, Subcommands)
{
    EXPECT_EQ(parse_args({"toy", "coin"}).command, Command::toy_coin);
    EXPECT_EQ(parse_args({"toy", "polarizer"}).command, Command::toy_polarizer);
    EXPECT_EQ(parse_args({"si-overlap"}).command, Command::si_overlap);
    EXPECT_EQ(parse_args({"cset-check"}).command, Command::cset_check);
    EXPECT_EQ(parse_args({"chsh"}).command, Command::chsh);
}

TEST(ParseArgs, QuadAndDegrees)
{
    const RunManifest m = parse_args({"chsh", "--quad", "0,1.5707963,-0.7853982,0.7853982"});
    EXPECT_NEAR(m.quad.a_prime, std::numbers::pi / 2, 1e-7);
    EXPECT_NEAR(m.quad.b, -std::numbers::pi / 4, 1e-7);
    const RunManifest d = parse_args({"chsh", "--degrees", "--quad", "0,90,-45,45", "--alpha", "180"});
    EXPECT_NEAR(d.quad.b_prime, std::numbers::pi / 4, 1e-15);
    EXPECT_NEAR(d.alpha, std::numbers::pi, 1e-15);
    const RunManifest s = parse_args({"si-overlap", "--set-m", "0,0.5", "--set-mprime", "1,2"});
    EXPECT_EQ(s.set_m[1], 0.5);
    EXPECT_EQ(s.set_mprime[0], 1.0);
}

TEST(ExitCodes, Usage)
{
    EXPECT_EQ(invoke({}).code, exit_usage);
    EXPECT_EQ(invoke({"sweep", "--bogus"}).code, exit_usage);
    EXPECT_EQ(invoke({"sweep", "--format", "xml"}).code, exit_usage);
    EXPECT_EQ(invoke({"sweep", "--gain", "abc"}).code, exit_usage);
    EXPECT_EQ(invoke({"toy"}).code, exit_usage);
    EXPECT_EQ(invoke({"chsh", "--quad", "1,2"}).code, exit_usage);
    const auto r = invoke({"sweep", "--bogus"});
    EXPECT_FALSE(r.err.empty());
}

TEST(ExitCodes, Help)
{
    const auto r = invoke({"--help"});
    EXPECT_EQ(r.code, exit_ok);
    EXPECT_NE(r.out.find("sweep"), std::string::npos);
    const auto s = invoke({"sweep", "--help"});
    EXPECT_EQ(s.code, exit_ok);
    EXPECT_NE(s.out.find("--gain"), std::string::npos);
}

TEST(ExitCodes, Validation)
{
    EXPECT_EQ(invoke({"sweep", "--gain", "-0.1"}).code, exit_validation);
    EXPECT_EQ(invoke({"sweep", "--samples", "0"}).code, exit_validation);
    EXPECT_EQ(invoke({"sweep", "--runs", "-3"}).code, exit_validation);
    EXPECT_EQ(invoke({"sweep", "--threshold-lower", "2", "--threshold-upper", "1"}).code, exit_validation);
    EXPECT_EQ(invoke({"sweep", "--alpha", "inf"}).code, exit_validation);
    // a single phase sum cannot be fitted, but the sweep itself still succeeds
    EXPECT_EQ(invoke(with_quick({"sweep", "--points", "1"})).code, exit_ok);
}

TEST(ExitCodes, Io)
{
    EXPECT_EQ(invoke(with_quick({"sweep", "--points", "2", "--out", "/nonexistent-dir/x.csv"})).code, exit_io);
    EXPECT_EQ(invoke({"replay", "/nonexistent-dir/m.json"}).code, exit_io);
}

TEST(Output, SweepCsvShape)
{
    const auto r = invoke(with_quick({"sweep", "--points", "17"}));
    ASSERT_EQ(r.code, exit_ok) << r.err;
    std::stringstream ss(r.out);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(ss, line))
        lines.push_back(line);
    ASSERT_EQ(lines.size(), 18u);
    EXPECT_EQ(lines[0], "alpha,beta,phase_sum,p_joint,std_err,p_marg_III,p_marg_IV,p_either,n");
    EXPECT_EQ(r.out.find('\r'), std::string::npos);

    const auto one = invoke(with_quick({"sweep", "--points", "1"}));
    EXPECT_EQ(std::count(one.out.begin(), one.out.end(), '\n'), 2);
}

TEST(Output, CsvMatchesJson)
{
    const auto c = invoke(with_quick({"sweep", "--points", "5"}));
    const auto j = invoke(with_quick({"sweep", "--points", "5", "--format", "json"}));
    ASSERT_EQ(c.code, 0);
    ASSERT_EQ(j.code, 0);
    const json doc = json::parse(j.out);
    std::stringstream ss(c.out);
    std::string line;
    std::getline(ss, line);
    for (const auto& row : doc.at("result").at("rows")) {
        ASSERT_TRUE(std::getline(ss, line));
        std::vector<double> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ','))
            cells.push_back(std::stod(cell));
        ASSERT_EQ(cells.size(), 9u);
        EXPECT_EQ(cells[3], row.at("p_joint").get<double>());
        EXPECT_EQ(cells[4], row.at("std_err_joint").get<double>());
        EXPECT_EQ(cells[5], row.at("p_marginal_III").get<double>());
        EXPECT_EQ(cells[8], row.at("n").get<double>());
    }
}

TEST(Output, RepeatedJsonIsIdenticalApartFromTimestamp)
{
    for (auto cmd : std::vector<std::vector<std::string>>{{"sweep", "--points", "5"},
                                                          {"marginals", "--points", "2"},
                                                          {"chsh"},
                                                          {"si-overlap"},
                                                          {"cset-check"},
                                                          {"toy", "coin"},
                                                          {"toy", "polarizer"}}) {
        auto args = with_quick(cmd);
        args.insert(args.end(), {"--format", "json"});
        const auto a = invoke(args);
        const auto b = invoke(args);
        ASSERT_EQ(a.code, 0) << cmd[0] << a.err;
        EXPECT_EQ(without_timestamp(json::parse(a.out)).dump(), without_timestamp(json::parse(b.out)).dump())
            << cmd[0];
    }
}

TEST(Output, WorkerCountDoesNotChangeOutput)
{
    const auto a = invoke(with_quick({"sweep", "--points", "3", "--workers", "1"}));
    const auto b = invoke(with_quick({"sweep", "--points", "3", "--workers", "7"}));
    EXPECT_EQ(a.out, b.out);
}

TEST(Output, FileAndManifestSidecar)
{
    const fs::path dir = fs::temp_directory_path() / "postsel_cli_test";
    fs::create_directories(dir);
    const fs::path csv = dir / "sweep.csv";
    const auto r = invoke(with_quick({"sweep", "--points", "3", "--seed", "5", "--out", csv.string()}));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(r.out.empty());
    const fs::path sidecar = dir / "sweep.csv.manifest.json";
    ASSERT_TRUE(fs::exists(sidecar));
    const json manifest = json::parse(slurp(sidecar));
    EXPECT_EQ(manifest.at("seed"), 5);
    EXPECT_EQ(manifest.at("command"), "sweep");

    // the manifest alone reproduces the run
    const fs::path again = dir / "again.csv";
    const auto rep = invoke({"replay", sidecar.string(), "--out", again.string()});
    ASSERT_EQ(rep.code, 0) << rep.err;
    EXPECT_EQ(slurp(csv), slurp(again));
    fs::remove_all(dir);
}

TEST(Output, ReplayFromJsonResult)
{
    const fs::path dir = fs::temp_directory_path() / "postsel_cli_replay";
    fs::create_directories(dir);
    const fs::path first = dir / "chsh.json";
    ASSERT_EQ(invoke(with_quick({"chsh", "--format", "json", "--seed", "3", "--out", first.string()})).code, 0);
    const auto rep = invoke({"replay", first.string(), "--format", "json"});
    ASSERT_EQ(rep.code, 0) << rep.err;
    EXPECT_EQ(without_timestamp(json::parse(slurp(first))).dump(), without_timestamp(json::parse(rep.out)).dump());
    fs::remove_all(dir);
}

TEST(Output, MarginalsLambdaFile)
{
    const fs::path lam = fs::temp_directory_path() / "postsel_lambdas.csv";
    const auto r = invoke({"marginals", "--samples", "1000", "--runs", "1", "--points", "1", "--lambdas", lam.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const std::string body = slurp(lam);
    EXPECT_EQ(std::count(body.begin(), body.end(), '\n'), 1001);
    fs::remove(lam);
}

TEST(Output, MetricCsvForReports)
{
    const auto r = invoke(with_quick({"si-overlap"}));
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(r.out.rfind("metric,value\n", 0), 0u);
    EXPECT_NE(r.out.find("overlap_fraction,"), std::string::npos);
}

#ifdef POSTSEL_CLI_PATH
TEST(Binary, ExitCodesFromProcess)
{
    const std::string cli = POSTSEL_CLI_PATH;
    auto status = [&](const std::string& args) {
        const int raw = std::system((cli + " " + args + " >/dev/null 2>&1").c_str());
        return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    };
    EXPECT_EQ(status("toy polarizer --samples 100"), 0);
    EXPECT_EQ(status("sweep --nope"), 2);
    EXPECT_EQ(status("sweep --gain -1"), 3);
    EXPECT_EQ(status("toy coin --samples 10 --out /nonexistent-dir/f.csv"), 4);
}
#endif

} // namespace
} // namespace postsel

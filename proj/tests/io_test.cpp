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
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "postsel/io.hpp"

namespace postsel {
namespace {

namespace fs = std::filesystem;

std::vector<std::string> lines_of(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string line;
    while (std::getline(ss, line))
        out.push_back(line);
    return out;
}

EnsembleRow sample_row()
{
    EnsembleStats s;
    s.settings = Settings(0.1, 0.2);
    s.n = 1'000'000;
    s.joint_count = 45'937;
    s.side_III_count = 206'111;
    s.side_IV_count = 205'999;
    s.either_side_count = 322'500;
    return {0.1, 0.2, 0.30000000000000004, s};
}

TEST(Csv, EmptyIsHeaderOnly)
{
    EXPECT_EQ(emit_csv(std::span<const EnsembleRow>()), std::string(csv_header) + "\n");
}

TEST(Csv, SinglePointIsTwoLines)
{
    const std::vector<EnsembleRow> rows{sample_row()};
    const std::string csv = emit_csv(rows);
    EXPECT_EQ(csv.find('\r'), std::string::npos);
    const auto lines = lines_of(csv);
    ASSERT_EQ(lines.size(), 2u);
    EXPECT_EQ(lines[0], csv_header);
    EXPECT_EQ(lines[1], "0.10000000000000001,0.20000000000000001,0.30000000000000004,0.045936999999999999,"
                        "0.00020934849421717845,0.20611099999999999,0.20599899999999999,0.32250000000000001,"
                        "1000000");
}

TEST(Csv, SeventeenSignificantDigits)
{
    EXPECT_EQ(format_double(0.1), "0.10000000000000001");
    EXPECT_EQ(format_double(1.0), "1");
    for (double v : {0.045937, 1.0 / 3.0, 2.0 * std::acos(-1.0), 1e-300})
        EXPECT_EQ(std::stod(format_double(v)), v);
}

TEST(Json, StatsRoundTrip)
{
    const auto s = sample_row().stats;
    const auto j = nlohmann::json::parse(to_json(s).dump());
    const auto back = stats_from_json(j);
    EXPECT_EQ(back, s);
    EXPECT_EQ(j.at("p_joint").get<double>(), s.p_joint());
    EXPECT_EQ(j.at("std_err_joint").get<double>(), s.std_err_joint());
}

TEST(Json, ManifestRoundTrip)
{
    RunManifest m;
    m.command = Command::si_overlap;
    m.gain = 0.4;
    m.samples = 12345;
    m.seed = 0xFFFFFFFFFFFFFFFFull;
    m.alpha = 0.1;
    m.threshold_upper = std::numeric_limits<double>::infinity();
    m.side_rule = SideRule::both_modes;
    m.timestamp = "2026-01-01T00:00:00Z";
    const auto j = nlohmann::json::parse(dump_json(to_json(m)));
    const RunManifest back = manifest_from_json(j);
    EXPECT_EQ(dump_json(to_json(back)), dump_json(to_json(m)));
    EXPECT_EQ(back.seed, m.seed);
    EXPECT_TRUE(std::isinf(back.threshold_upper));
    EXPECT_EQ(back.side_rule, SideRule::both_modes);
}

TEST(Json, MalformedManifest)
{
    EXPECT_THROW(manifest_from_json(nlohmann::json{{"command", "sweep"}}), ValidationError);
    EXPECT_THROW(command_from_string("toy"), ValidationError);
}

TEST(Json, CommandNames)
{
    for (auto c : {Command::sweep, Command::marginals, Command::chsh, Command::si_overlap, Command::cset_check,
                   Command::toy_coin, Command::toy_polarizer})
        EXPECT_EQ(command_from_string(to_string(c)), c);
    EXPECT_EQ(to_string(Command::toy_polarizer), "toy polarizer");
}

TEST(Files, WriteFailureIsIoError)
{
    EXPECT_THROW(write_file("/nonexistent-dir/x.csv", "a"), IoError);
    EXPECT_THROW(CsvLambdaSink("/nonexistent-dir/l.csv"), IoError);
}

TEST(Files, LambdaSinkWritesRecords)
{
    const fs::path p = fs::temp_directory_path() / "postsel_lambda_sink.csv";
    {
        CsvLambdaSink sink(p.string());
        const std::vector<LambdaRecord> recs{{0, {{0.5, 1.0, 1.5, 2.0}}, true}, {1, {{0.25, 0, 0, 0}}, false}};
        sink.consume(recs);
    }
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    const auto lines = lines_of(ss.str());
    ASSERT_EQ(lines.size(), 3u);
    EXPECT_EQ(lines[1], "0,0.5,1,1.5,2,1");
    EXPECT_EQ(lines[2], "1,0.25,0,0,0,0");
    fs::remove(p);
}

} // namespace
} // namespace postsel

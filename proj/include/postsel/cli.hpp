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

#include <iosfwd>
#include <string>
#include <vector>

#include "postsel/error.hpp"
#include "postsel/io.hpp"

namespace postsel {

// Exit codes of the command-line tool.
inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 2;
inline constexpr int exit_validation = 3;
inline constexpr int exit_io = 4;

// --help / --version was requested; what() holds the text to print.
class HelpRequested : public Error {
public:
    using Error::Error;
};

// Parses argv (without the program name). Throws UsageError for malformed
// or unknown flags, ValidationError for out-of-range values, HelpRequested
// for --help. The returned manifest has angles in radians and no timestamp.
RunManifest parse_args(const std::vector<std::string>& args);

// Executes a manifest. Writes to manifest.out_path, or to `out` when the
// path is empty. Library exceptions propagate.
void run_command(const RunManifest& manifest, std::ostream& out);

// Full tool: parse, run, map exceptions to exit codes.
int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err);

} // namespace postsel

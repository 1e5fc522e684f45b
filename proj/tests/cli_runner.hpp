/*
Copyright 2026 The earbench Authors
Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
you may obtain a copy of the License at

                http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#ifndef EARBENCH_TEST_CLI_RUNNER_HPP
#define EARBENCH_TEST_CLI_RUNNER_HPP

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace earbench::fixtures {

struct RunResult {
    int status = -1;
    std::string out;
    std::string err;
};

inline std::string shell_quote(const std::string& s) {
    std::string q = "'";
    for (char c : s)
        q += c == '\'' ? std::string("'\\''") : std::string(1, c);
    return q + "'";
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Runs the CLI binary with `args`; stdout/stderr are captured via files in
// `scratch`. `env` is prepended verbatim (e.g. "EARBENCH_THREADS=4").
inline RunResult run_cli(const std::string& binary, const std::vector<std::string>& args,
                         const std::filesystem::path& scratch, const std::string& env = {}) {
    std::filesystem::create_directories(scratch);
    const auto out = scratch / "stdout.txt", err = scratch / "stderr.txt";
    std::string cmd = env.empty() ? std::string() : env + " ";
    cmd += shell_quote(binary);
    for (const auto& a : args)
        cmd += " " + shell_quote(a);
    cmd += " >" + shell_quote(out.string()) + " 2>" + shell_quote(err.string());
    const int raw = std::system(cmd.c_str());
    RunResult r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

} // namespace earbench::fixtures

#endif

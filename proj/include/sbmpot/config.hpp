#pragma once

#include <map>
#include <string>

namespace sbm {

// Flat key-value configuration: `key = value` lines, one nesting level via
// dots, '#' comments. Flags override file keys; every consumed key lands in
// the emitted manifest together with the defaults that filled the gaps.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_config_file(const std::string& path);

// Executes the configured command. Returns the process exit code:
// 0 success / all suites pass, 1 suite or estimator failure, 2 usage error
// (malformed configuration; diagnostics on stderr).
int run_command(const KeyValues& kv);

}  // namespace sbm

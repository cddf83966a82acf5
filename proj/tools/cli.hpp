#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace rectflow::cli {

// args excludes the program name. Exit codes: 0 success, 1 tolerance missed, 2 usage or domain
// error, 3 numerical failure. Errors are written to err as {"error": code, "message": text}.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rectflow::cli

#pragma once

#include <string>
#include <vector>

#include "rectflow/wishart_sim.hpp"

namespace rectflow {

// Header `t,lambda_1,...,lambda_n`; each comment line is emitted as "# <line>" first.
std::string path_to_csv(const EigenPath& path, const std::vector<std::string>& comments = {});
EigenPath path_from_csv(const std::string& text);

// Little-endian: uint64 n, uint64 rows, rows * (1 + n) float64 (t, lambda_1..lambda_n),
// then uint64 trailer length and that many bytes of trailer text (may be 0).
std::string path_to_binary(const EigenPath& path, const std::string& trailer = {});
EigenPath path_from_binary(const std::string& bytes, std::string* trailer = nullptr);

}  // namespace rectflow

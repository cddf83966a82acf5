#pragma once

#include <string>
#include <vector>

namespace rectflow::acceptance {

struct CriterionResult {
  std::string id;
  std::string title;
  bool passed = false;
  double metric = 0.0;     // worst observed value of the gated quantity
  double threshold = 0.0;  // gate for metric (metric <= threshold unless the detail says otherwise)
  double seconds = 0.0;
  double time_limit = 0.0;
  std::string detail;
};

std::vector<std::string> criterion_ids();
// DomainError("unknown_criterion") for ids outside A1..A10.
CriterionResult run(const std::string& id);

// One line: "PASS A3 <title>: metric=... threshold=... time=...s (limit ...s) | detail".
std::string format_line(const CriterionResult& r);

CriterionResult run_A1();
CriterionResult run_A2();
CriterionResult run_A3();
CriterionResult run_A4();
CriterionResult run_A5();
CriterionResult run_A6();
CriterionResult run_A7();
CriterionResult run_A8();
CriterionResult run_A9();
CriterionResult run_A10();

}  // namespace rectflow::acceptance

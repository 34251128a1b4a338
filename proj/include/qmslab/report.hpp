#pragma once

#include <string>
#include <vector>

namespace qmslab {

struct Tolerance {
  double abs = 1e-9;
  double rel = 1e-9;
};

// One machine-checked inequality lhs <= rhs.
struct InequalityReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  bool pass = true;
  Tolerance tol;
  long sample_id = -1;
  std::string witness;
  bool informational = false;  // reported, never a hard failure
};

InequalityReport make_report(std::string name, double lhs, double rhs, Tolerance tol = {},
                             long sample_id = -1, std::string witness = {});

struct ReportSummary {
  std::size_t total = 0;
  std::size_t failed = 0;
  double worst_slack = 0.0;
  long worst_id = -1;
};

ReportSummary summarize(const std::vector<InequalityReport>& reports);

}  // namespace qmslab

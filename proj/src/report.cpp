#include "qmslab/report.hpp"

#include <cmath>
#include <limits>

namespace qmslab {

InequalityReport make_report(std::string name, double lhs, double rhs, Tolerance tol, long sample_id,
                             std::string witness) {
  InequalityReport r;
  r.name = std::move(name);
  r.lhs = lhs;
  r.rhs = rhs;
  r.slack = rhs - lhs;
  r.tol = tol;
  r.pass = std::isfinite(r.slack) && r.slack >= -tol.abs - tol.rel * std::abs(rhs);
  r.sample_id = sample_id;
  r.witness = std::move(witness);
  return r;
}

ReportSummary summarize(const std::vector<InequalityReport>& reports) {
  ReportSummary s;
  s.worst_slack = std::numeric_limits<double>::infinity();
  for (const auto& r : reports) {
    ++s.total;
    if (!r.pass && !r.informational) ++s.failed;
    if (r.slack < s.worst_slack) {
      s.worst_slack = r.slack;
      s.worst_id = r.sample_id;
    }
  }
  if (reports.empty()) s.worst_slack = 0.0;
  return s;
}

}  // namespace qmslab

#ifndef NFLOW_FLOW_STATS_HPP_
#define NFLOW_FLOW_STATS_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "flow.hpp"

namespace nflow {

struct FlowStats {
  Flow flow;
  std::uint64_t occurrences = 0;
  std::uint64_t distinct_users = 0;
  double user_coverage = 0.0;  // distinct_users / total_users

  bool operator==(const FlowStats&) const = default;
};

/// Ranking order: occurrences desc, distinct users desc, canonical text asc.
inline bool ranks_before(const FlowStats& a, const FlowStats& b) {
  if (a.occurrences != b.occurrences) return a.occurrences > b.occurrences;
  if (a.distinct_users != b.distinct_users) return a.distinct_users > b.distinct_users;
  return a.flow.text() < b.flow.text();
}

/// Ranked flows of one length n.
struct RankedFlows {
  std::size_t n = 0;
  std::vector<FlowStats> flows;

  std::size_t size() const noexcept { return flows.size(); }
  bool operator==(const RankedFlows&) const = default;
};

}  // namespace nflow

#endif  // NFLOW_FLOW_STATS_HPP_

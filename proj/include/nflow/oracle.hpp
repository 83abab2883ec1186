#ifndef NFLOW_ORACLE_HPP_
#define NFLOW_ORACLE_HPP_

// Exhaustive reference miner. Shares no counting code with flow_table.hpp or
// tks.hpp: it walks every admissible position tuple of every session with
// plain strings and a std::map.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "flow_stats.hpp"
#include "ingest.hpp"

namespace nflow {

namespace oracle_detail {

struct Tally {
  std::uint64_t occurrences = 0;
  std::set<std::string> users;
};

inline void enumerate(const Session& s, std::size_t n, std::size_t max_gap, std::vector<std::size_t>& positions,
                      std::map<std::vector<std::string>, Tally>& tally) {
  if (positions.size() == n) {
    std::vector<std::string> tools;
    for (auto p : positions) tools.push_back(s.events[p].tool_id);
    auto& t = tally[tools];
    ++t.occurrences;
    t.users.insert(s.user_id);
    return;
  }
  std::size_t lo = 0, hi = s.events.size();
  if (!positions.empty()) {
    lo = positions.back() + 1;
    hi = std::min(s.events.size(), positions.back() + max_gap + 2);
  }
  for (std::size_t p = lo; p < hi; ++p) {
    positions.push_back(p);
    enumerate(s, n, max_gap, positions, tally);
    positions.pop_back();
  }
}

inline std::string join(const std::vector<std::string>& tools) {
  std::string out;
  for (std::size_t i = 0; i < tools.size(); ++i) out += (i ? "/" : "") + tools[i];
  return out;
}

}  // namespace oracle_detail

/// Ground-truth top-k of length-n flows under the max_gap constraint.
/// Intended for small inputs only.
inline RankedFlows oracle_topk(std::span<const Session> sessions, std::size_t n, std::size_t k, std::size_t max_gap) {
  std::map<std::vector<std::string>, oracle_detail::Tally> tally;
  std::set<std::string> all_users;
  std::vector<std::size_t> positions;
  for (const auto& s : sessions) {
    if (s.events.empty()) continue;
    all_users.insert(s.user_id);
    if (n == 0) continue;
    oracle_detail::enumerate(s, n, max_gap, positions, tally);
  }

  struct Row {
    std::string text;
    std::vector<std::string> tools;
    std::uint64_t occurrences;
    std::uint64_t users;
  };
  std::vector<Row> rows;
  for (auto& [tools, t] : tally) rows.push_back({oracle_detail::join(tools), tools, t.occurrences, t.users.size()});
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.occurrences != b.occurrences) return a.occurrences > b.occurrences;
    if (a.users != b.users) return a.users > b.users;
    return a.text < b.text;
  });
  if (rows.size() > k) rows.resize(k);

  RankedFlows out{n, {}};
  for (auto& r : rows) {
    out.flows.push_back(FlowStats{Flow(std::move(r.tools)), r.occurrences, r.users,
                                  static_cast<double>(r.users) / static_cast<double>(all_users.size())});
  }
  return out;
}

}  // namespace nflow

#endif  // NFLOW_ORACLE_HPP_

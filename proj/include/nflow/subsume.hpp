#ifndef NFLOW_SUBSUME_HPP_
#define NFLOW_SUBSUME_HPP_

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "flow_stats.hpp"

namespace nflow {

/// Drops every n-flow that sits contiguously inside an (n+1)-flow of the
/// input occurring at least theta times as often. Parents are judged on the
/// unfiltered lists, so a chain such as A/B < B/A/B < A/B/A/B collapses to
/// its longest member. Input lists must have consecutive, ascending n.
inline std::vector<RankedFlows> filter_subsumed(std::vector<RankedFlows> ranked, double theta) {
  if (!(theta > 0.0 && theta <= 1.0)) throw std::invalid_argument("theta must lie in (0, 1]");
  for (std::size_t i = 1; i < ranked.size(); ++i) {
    if (ranked[i].n != ranked[i - 1].n + 1) throw std::invalid_argument("ranked lists must cover consecutive n");
  }
  if (ranked.size() < 2) return ranked;

  // Ascending order leaves ranked[i + 1] untouched while ranked[i] is filtered.
  for (std::size_t i = 0; i + 1 < ranked.size(); ++i) {
    // Largest count among parents that contain each child.
    std::unordered_map<std::string, std::uint64_t> parent_count;
    for (const auto& parent : ranked[i + 1].flows) {
      const auto& tools = parent.flow.tools();
      for (std::size_t off = 0; off < 2 && off + ranked[i].n <= tools.size(); ++off) {
        std::vector<std::string> inner(tools.begin() + static_cast<std::ptrdiff_t>(off),
                                       tools.begin() + static_cast<std::ptrdiff_t>(off + ranked[i].n));
        auto& best = parent_count[Flow(std::move(inner)).text()];
        best = std::max(best, parent.occurrences);
      }
    }
    auto& flows = ranked[i].flows;
    std::erase_if(flows, [&](const FlowStats& child) {
      auto it = parent_count.find(child.flow.text());
      return it != parent_count.end() &&
             static_cast<long double>(it->second) >= static_cast<long double>(theta) * static_cast<long double>(child.occurrences);
    });
  }
  return ranked;
}

}  // namespace nflow

#endif  // NFLOW_SUBSUME_HPP_

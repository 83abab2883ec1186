#ifndef NFLOW_FLOW_TSV_HPP_
#define NFLOW_FLOW_TSV_HPP_

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "flow_stats.hpp"

namespace nflow {

inline constexpr std::string_view kFlowTsvHeader = "n\tflow\toccurrences\tdistinct_users\tuser_coverage";

/// Fixed-point text with `digits` decimals, locale independent.
inline std::string format_fixed(double value, int digits) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, digits);
  if (ec != std::errc{}) throw std::runtime_error("cannot format number");
  return std::string(buf, ptr);
}

/// Writes ranked lists as the flow-table TSV, rows ordered by n then rank.
inline void write_flow_tsv(std::ostream& out, const std::vector<RankedFlows>& ranked) {
  out << kFlowTsvHeader << '\n';
  std::vector<const RankedFlows*> lists;
  for (const auto& r : ranked) lists.push_back(&r);
  std::stable_sort(lists.begin(), lists.end(), [](auto* a, auto* b) { return a->n < b->n; });
  for (const auto* list : lists) {
    for (const auto& f : list->flows) {
      out << list->n << '\t' << f.flow.text() << '\t' << f.occurrences << '\t' << f.distinct_users << '\t'
          << format_fixed(f.user_coverage, 6) << '\n';
    }
  }
}

class FlowTsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads a flow-table TSV back into one ranked list per n present in the file.
inline std::vector<RankedFlows> read_flow_tsv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw FlowTsvError("empty flow table");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kFlowTsvHeader) throw FlowTsvError("bad flow table header");

  auto fail = [&](const std::string& why) { throw FlowTsvError("flow table line " + std::to_string(line_no) + ": " + why); };
  auto to_u64 = [&](std::string_view s) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || s.empty()) fail("bad integer '" + std::string(s) + "'");
    return v;
  };

  std::map<std::size_t, RankedFlows> by_n;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string_view> cols;
    std::string_view rest(line);
    while (true) {
      auto tab = rest.find('\t');
      cols.push_back(rest.substr(0, tab));
      if (tab == std::string_view::npos) break;
      rest.remove_prefix(tab + 1);
    }
    if (cols.size() != 5) fail("expected 5 columns");
    FlowStats stats;
    const auto n = static_cast<std::size_t>(to_u64(cols[0]));
    try {
      stats.flow = Flow::parse(cols[1]);
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
    if (stats.flow.size() != n) fail("flow length does not match n");
    stats.occurrences = to_u64(cols[2]);
    stats.distinct_users = to_u64(cols[3]);
    double cov = 0;
    auto [p, ec] = std::from_chars(cols[4].data(), cols[4].data() + cols[4].size(), cov);
    if (ec != std::errc{} || p != cols[4].data() + cols[4].size()) fail("bad coverage");
    stats.user_coverage = cov;
    auto& list = by_n[n];
    list.n = n;
    list.flows.push_back(std::move(stats));
  }
  std::vector<RankedFlows> out;
  for (auto& [n, list] : by_n) out.push_back(std::move(list));
  return out;
}

}  // namespace nflow

#endif  // NFLOW_FLOW_TSV_HPP_

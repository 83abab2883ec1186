#ifndef NFLOW_TKS_HPP_
#define NFLOW_TKS_HPP_

// Top-K sequential flow mining over vertical occurrence indexes.
//
// Every pattern carries the list of places it ends at, (session, position,
// tuple count). Growing a pattern by one tool only visits the positions
// reachable from those ends, so sessions are scanned once, for the 1-flows.
// The k best patterns of each length are kept in a bounded set whose worst
// member fixes an internal minimum support; a prefix is expanded only while
// the best support any of its extensions could reach stays at or above that
// floor.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <set>
#include <span>
#include <vector>

#include "flow_stats.hpp"
#include "flow_table.hpp"
#include "mining_config.hpp"
#include "session_corpus.hpp"

namespace nflow {

namespace tks_detail {

struct Occurrence {
  std::uint32_t session;
  std::uint32_t end;
  std::uint64_t tuples;  // number of position tuples of the pattern ending here
};

struct Candidate {
  FlowKey pattern;
  std::vector<Occurrence> index;  // sorted by (session, end), unique
  std::uint64_t support = 0;
};

inline std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) {
  return a > std::numeric_limits<std::uint64_t>::max() - b ? std::numeric_limits<std::uint64_t>::max() : a + b;
}

inline std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
  if (a == 0 || b == 0) return 0;
  return a > std::numeric_limits<std::uint64_t>::max() / b ? std::numeric_limits<std::uint64_t>::max() : a * b;
}

/// paths(r, d): number of ways to place r more positions after a position
/// that has d positions after it, with at most max_gap skipped in each step.
class PathCounts {
 public:
  PathCounts(std::size_t max_steps, std::size_t max_remaining, std::size_t max_gap)
      : width_(max_remaining + 1), table_((max_steps + 1) * width_, 0) {
    for (std::size_t d = 0; d < width_; ++d) table_[d] = 1;
    for (std::size_t r = 1; r <= max_steps; ++r) {
      for (std::size_t d = 0; d < width_; ++d) {
        std::uint64_t sum = 0;
        for (std::size_t j = 1; j <= max_gap + 1 && j <= d; ++j) sum = sat_add(sum, at(r - 1, d - j));
        table_[r * width_ + d] = sum;
      }
    }
  }

  std::uint64_t at(std::size_t r, std::size_t d) const { return table_[r * width_ + d]; }

 private:
  std::size_t width_;
  std::vector<std::uint64_t> table_;
};

struct Result {
  FlowKey pattern;
  std::uint64_t occurrences;
  std::uint64_t users;
};

/// The current k best patterns of one length.
class BestK {
 public:
  BestK(std::size_t k, const Dictionary& dict) : k_(k), set_(Order{&dict}) {}

  std::uint64_t min_support() const { return set_.size() < k_ ? 0 : std::prev(set_.end())->occurrences; }

  void offer(Result r) {
    if (set_.size() == k_) {
      if (!set_.key_comp()(r, *std::prev(set_.end()))) return;
      set_.erase(std::prev(set_.end()));
    }
    set_.insert(std::move(r));
  }

  const auto& results() const { return set_; }

 private:
  struct Order {
    const Dictionary* dict;
    bool operator()(const Result& a, const Result& b) const {
      if (a.occurrences != b.occurrences) return a.occurrences > b.occurrences;
      if (a.users != b.users) return a.users > b.users;
      return dict->compare_text(a.pattern, b.pattern) < 0;
    }
  };

  std::size_t k_;
  std::set<Result, Order> set_;
};

}  // namespace tks_detail

/// Mines the top-k flows of every length in [n_min, n_max]. With max_gap
/// equal to 0 the result equals count_nflows followed by top_k.
inline std::vector<RankedFlows> mine_tks(const SessionCorpus& corpus, const MiningConfig& config) {
  using namespace tks_detail;
  config.validate();

  const auto& dict = corpus.dictionary();
  const auto& sessions = corpus.sessions();
  const std::size_t n_min = config.n_min;
  const std::size_t n_max = config.n_max;
  const std::size_t gap = config.max_gap;

  std::size_t longest = 0;
  for (const auto& s : sessions) longest = std::max(longest, s.tools.size());
  const PathCounts paths(n_max, longest, gap);

  std::vector<BestK> best;
  best.reserve(n_max + 1);
  for (std::size_t n = 0; n <= n_max; ++n) best.emplace_back(config.k, dict);

  auto distinct_users = [&](const std::vector<Occurrence>& index) {
    std::uint64_t count = 0;
    std::size_t last = std::numeric_limits<std::size_t>::max();
    for (const auto& o : index) {
      auto u = sessions[o.session].user;
      if (u != last) {
        ++count;
        last = u;
      }
    }
    return count;
  };

  // Worth expanding while some reachable length could still enter its top-k.
  auto promising = [&](const Candidate& c) {
    const std::size_t len = c.pattern.size();
    for (std::size_t n = std::max(len + 1, n_min); n <= n_max; ++n) {
      const auto floor = std::max<std::uint64_t>(best[n].min_support(), 1);
      std::uint64_t bound = 0;
      for (const auto& o : c.index) {
        const std::size_t after = sessions[o.session].tools.size() - 1 - o.end;
        bound = sat_add(bound, sat_mul(o.tuples, paths.at(n - len, after)));
        if (bound >= floor) return true;
      }
    }
    return false;
  };

  auto report = [&](const Candidate& c) {
    const std::size_t len = c.pattern.size();
    if (len < n_min || len > n_max) return;
    if (c.support < best[len].min_support()) return;
    best[len].offer(Result{c.pattern, c.support, distinct_users(c.index)});
  };

  // Frontier ordered as a max-heap on support, so strong prefixes raise the
  // floors early.
  std::vector<Candidate> frontier;
  auto heap_less = [](const Candidate& a, const Candidate& b) { return a.support < b.support; };
  auto push = [&](Candidate c) {
    report(c);
    if (c.pattern.size() < n_max && promising(c)) {
      frontier.push_back(std::move(c));
      std::push_heap(frontier.begin(), frontier.end(), heap_less);
    }
  };

  // 1-flows: one scan over the sessions.
  {
    std::vector<std::vector<Occurrence>> by_tool(dict.tool_count());
    for (std::size_t s = 0; s < sessions.size(); ++s) {
      const auto& seq = sessions[s].tools;
      for (std::size_t p = 0; p < seq.size(); ++p) {
        by_tool[seq[p]].push_back({static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(p), 1});
      }
    }
    for (std::size_t t = 0; t < by_tool.size(); ++t) {
      if (by_tool[t].empty()) continue;
      Candidate c;
      c.pattern = {static_cast<ToolId>(t)};
      c.support = by_tool[t].size();
      c.index = std::move(by_tool[t]);
      push(std::move(c));
    }
  }

  struct Step {
    ToolId tool;
    std::uint32_t session;
    std::uint32_t end;
    std::uint64_t tuples;
  };
  std::vector<Step> steps;

  while (!frontier.empty()) {
    std::pop_heap(frontier.begin(), frontier.end(), heap_less);
    Candidate parent = std::move(frontier.back());
    frontier.pop_back();
    // Floors may have risen since this prefix was queued.
    if (!promising(parent)) continue;

    steps.clear();
    for (const auto& o : parent.index) {
      const auto& seq = sessions[o.session].tools;
      const std::size_t stop = std::min<std::size_t>(seq.size(), o.end + gap + 2);
      for (std::size_t q = o.end + 1; q < stop; ++q) {
        steps.push_back({seq[q], o.session, static_cast<std::uint32_t>(q), o.tuples});
      }
    }
    std::sort(steps.begin(), steps.end(), [](const Step& a, const Step& b) {
      if (a.tool != b.tool) return a.tool < b.tool;
      if (a.session != b.session) return a.session < b.session;
      return a.end < b.end;
    });

    for (std::size_t i = 0; i < steps.size();) {
      Candidate child;
      child.pattern = parent.pattern;
      child.pattern.push_back(steps[i].tool);
      const ToolId tool = steps[i].tool;
      for (; i < steps.size() && steps[i].tool == tool; ++i) {
        const auto& st = steps[i];
        child.support = sat_add(child.support, st.tuples);
        if (!child.index.empty() && child.index.back().session == st.session && child.index.back().end == st.end) {
          child.index.back().tuples = sat_add(child.index.back().tuples, st.tuples);
        } else {
          child.index.push_back({st.session, st.end, st.tuples});
        }
      }
      push(std::move(child));
    }
  }

  std::vector<RankedFlows> out;
  for (std::size_t n = n_min; n <= n_max; ++n) {
    RankedFlows ranked{n, {}};
    const auto total = corpus.user_count();
    for (const auto& r : best[n].results()) {
      ranked.flows.push_back(FlowStats{dict.decode(r.pattern), r.occurrences, r.users,
                                       total ? static_cast<double>(r.users) / static_cast<double>(total) : 0.0});
    }
    out.push_back(std::move(ranked));
  }
  return out;
}

/// The exact-count route: count_nflows + top_k for every n in the config.
/// Only contiguous windows are counted, so max_gap must be 0.
inline std::vector<RankedFlows> mine_counts(const SessionCorpus& corpus, const MiningConfig& config, std::size_t threads = 1) {
  config.validate();
  if (config.max_gap != 0) throw std::invalid_argument("the count engine only mines contiguous flows (max_gap = 0)");
  std::vector<RankedFlows> out;
  for (std::size_t n = config.n_min; n <= config.n_max; ++n) {
    out.push_back(top_k(count_nflows_parallel(corpus, n, threads), config.k));
  }
  return out;
}

}  // namespace nflow

#endif  // NFLOW_TKS_HPP_

#ifndef NFLOW_FLOW_TABLE_HPP_
#define NFLOW_FLOW_TABLE_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <thread>
#include <unordered_map>
#include <vector>

#include "flow_stats.hpp"
#include "session_corpus.hpp"

namespace nflow {

using FlowKey = std::vector<ToolId>;

struct FlowKeyHash {
  std::size_t operator()(std::span<const ToolId> key) const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto id : key) {
      h ^= id;
      h *= 0x100000001b3ULL;
      h ^= h >> 29;
    }
    return static_cast<std::size_t>(h);
  }
  std::size_t operator()(const FlowKey& key) const noexcept { return (*this)(std::span<const ToolId>(key)); }
};

struct FlowEntry {
  std::uint64_t occurrences = 0;
  std::vector<UserIndex> users;  // sorted, unique

  void add_user(UserIndex u) {
    if (users.empty() || users.back() < u) {
      users.push_back(u);
    } else if (users.back() != u) {
      auto it = std::lower_bound(users.begin(), users.end(), u);
      if (it == users.end() || *it != u) users.insert(it, u);
    }
  }
};

/// Occurrence counts of all n-flows of one length, keyed by encoded flow.
class FlowTable {
 public:
  using Map = std::unordered_map<FlowKey, FlowEntry, FlowKeyHash>;

  FlowTable(std::size_t n, std::shared_ptr<const Dictionary> dict) : n_(n), dict_(std::move(dict)) {
    if (n_ < 1) throw std::invalid_argument("flow length n must be >= 1");
  }

  std::size_t n() const noexcept { return n_; }
  std::size_t total_users() const noexcept { return dict_->user_count(); }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const Map& entries() const noexcept { return entries_; }
  const Dictionary& dictionary() const noexcept { return *dict_; }
  const std::shared_ptr<const Dictionary>& shared_dictionary() const noexcept { return dict_; }

  void add(std::span<const ToolId> key, UserIndex user, std::uint64_t count = 1) {
    auto it = entries_.find(FlowKey(key.begin(), key.end()));
    if (it == entries_.end()) it = entries_.emplace(FlowKey(key.begin(), key.end()), FlowEntry{}).first;
    it->second.occurrences += count;
    it->second.add_user(user);
  }

  /// Stats for `flow`, or nullopt when it never occurred.
  std::optional<FlowStats> find(const Flow& flow) const {
    if (flow.size() != n_) return std::nullopt;
    FlowKey key;
    for (const auto& t : flow.tools()) {
      auto id = dict_->find_tool(t);
      if (!id) return std::nullopt;
      key.push_back(*id);
    }
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return stats_of(it->first, it->second);
  }

  FlowStats stats_of(const FlowKey& key, const FlowEntry& e) const {
    const auto users = e.users.size();
    return FlowStats{dict_->decode(key), e.occurrences, users,
                     total_users() ? static_cast<double>(users) / static_cast<double>(total_users()) : 0.0};
  }

  Map& mutable_entries() noexcept { return entries_; }

 private:
  std::size_t n_;
  std::shared_ptr<const Dictionary> dict_;
  Map entries_;
};

/// Counts every contiguous window of length n in the sessions [first, last).
inline FlowTable count_nflows(const SessionCorpus& corpus, std::size_t n, std::size_t first, std::size_t last) {
  FlowTable table(n, corpus.shared_dictionary());
  const auto& sessions = corpus.sessions();
  auto& map = table.mutable_entries();
  FlowKey probe(n);
  for (std::size_t s = first; s < last && s < sessions.size(); ++s) {
    const auto& seq = sessions[s].tools;
    if (seq.size() < n) continue;
    for (std::size_t i = 0; i + n <= seq.size(); ++i) {
      std::copy_n(seq.begin() + static_cast<std::ptrdiff_t>(i), n, probe.begin());
      auto it = map.find(probe);
      if (it == map.end()) it = map.emplace(probe, FlowEntry{}).first;
      ++it->second.occurrences;
      it->second.add_user(sessions[s].user);
    }
  }
  return table;
}

inline FlowTable count_nflows(const SessionCorpus& corpus, std::size_t n) {
  return count_nflows(corpus, n, 0, corpus.sessions().size());
}

/// Adds counts and unions contributing users. Both tables must cover the
/// same n over the same dictionary.
inline FlowTable merge_tables(const FlowTable& a, const FlowTable& b) {
  if (a.n() != b.n()) throw std::invalid_argument("cannot merge flow tables of different n");
  if (a.shared_dictionary() != b.shared_dictionary()) throw std::invalid_argument("cannot merge flow tables over different dictionaries");
  const FlowTable& big = a.size() >= b.size() ? a : b;
  const FlowTable& small = a.size() >= b.size() ? b : a;
  FlowTable out = big;
  auto& map = out.mutable_entries();
  for (const auto& [key, entry] : small.entries()) {
    auto [it, inserted] = map.try_emplace(key, entry);
    if (inserted) continue;
    auto& dst = it->second;
    dst.occurrences += entry.occurrences;
    std::vector<UserIndex> merged;
    merged.reserve(dst.users.size() + entry.users.size());
    std::set_union(dst.users.begin(), dst.users.end(), entry.users.begin(), entry.users.end(), std::back_inserter(merged));
    dst.users = std::move(merged);
  }
  return out;
}

/// Sharded count over `threads` workers, merged in shard order. The result
/// is identical to the single-threaded count.
inline FlowTable count_nflows_parallel(const SessionCorpus& corpus, std::size_t n, std::size_t threads) {
  const auto total = corpus.sessions().size();
  if (threads <= 1 || total < 2) return count_nflows(corpus, n);
  threads = std::min(threads, total);
  std::vector<FlowTable> shards(threads, FlowTable(n, corpus.shared_dictionary()));
  std::vector<std::thread> workers;
  for (std::size_t t = 0; t < threads; ++t) {
    workers.emplace_back([&, t] {
      shards[t] = count_nflows(corpus, n, total * t / threads, total * (t + 1) / threads);
    });
  }
  for (auto& w : workers) w.join();
  FlowTable out = std::move(shards[0]);
  for (std::size_t t = 1; t < threads; ++t) out = merge_tables(out, shards[t]);
  return out;
}

/// One FlowStats per present flow, in ranking order.
inline std::vector<FlowStats> compute_stats(const FlowTable& table) {
  if (table.total_users() == 0) throw std::invalid_argument("compute_stats needs total_users > 0");
  std::vector<FlowStats> out;
  out.reserve(table.size());
  for (const auto& [key, entry] : table.entries()) out.push_back(table.stats_of(key, entry));
  std::sort(out.begin(), out.end(), ranks_before);
  return out;
}

/// The k best flows of the table under the ranking order.
inline RankedFlows top_k(const FlowTable& table, std::size_t k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  using Item = const FlowTable::Map::value_type*;
  std::vector<Item> items;
  items.reserve(table.size());
  for (const auto& kv : table.entries()) items.push_back(&kv);
  const auto& dict = table.dictionary();
  auto before = [&dict](Item a, Item b) {
    if (a->second.occurrences != b->second.occurrences) return a->second.occurrences > b->second.occurrences;
    if (a->second.users.size() != b->second.users.size()) return a->second.users.size() > b->second.users.size();
    return dict.compare_text(a->first, b->first) < 0;
  };
  const auto keep = std::min(k, items.size());
  std::partial_sort(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(keep), items.end(), before);
  RankedFlows out{table.n(), {}};
  out.flows.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) out.flows.push_back(table.stats_of(items[i]->first, items[i]->second));
  return out;
}

}  // namespace nflow

#endif  // NFLOW_FLOW_TABLE_HPP_

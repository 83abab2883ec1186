#ifndef NFLOW_RECOMMEND_HPP_
#define NFLOW_RECOMMEND_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "flow.hpp"
#include "flow_stats.hpp"
#include "ingest.hpp"

namespace nflow {

/// One user's occurrence counts over the retained flow vocabulary.
struct UserProfile {
  std::string user_id;
  std::unordered_map<Flow, std::uint64_t> flow_counts;  // absent means 0
  std::uint64_t total_events = 0;

  std::uint64_t count(const Flow& f) const {
    auto it = flow_counts.find(f);
    return it == flow_counts.end() ? 0 : it->second;
  }
};

enum class RecommendMethod { popular, cf };

inline std::string_view to_string(RecommendMethod m) { return m == RecommendMethod::popular ? "popular" : "cf"; }

struct Recommendation {
  Flow flow;
  double score = 0.0;
  std::size_t rank = 0;  // 1-based
  RecommendMethod method = RecommendMethod::popular;

  bool operator==(const Recommendation&) const = default;
};

struct RecommendConfig {
  std::size_t count = 10;
  RecommendMethod method = RecommendMethod::popular;
  std::size_t neighbors_m = 10;
  std::uint64_t usage_threshold = 1;

  void validate() const {
    if (count < 1) throw std::invalid_argument("count must be >= 1");
    if (neighbors_m < 1) throw std::invalid_argument("neighbors must be >= 1");
    if (usage_threshold < 1) throw std::invalid_argument("usage threshold must be >= 1");
  }
};

class UnknownUserError : public std::out_of_range {
 public:
  explicit UnknownUserError(const std::string& user) : std::out_of_range("unknown user: " + user), user_(user) {}
  const std::string& user() const noexcept { return user_; }

 private:
  std::string user_;
};

/// Counts, per user, the contiguous occurrences of each vocabulary flow.
/// Every user with at least one event gets a profile; profiles come back
/// sorted by user id.
inline std::vector<UserProfile> build_profiles(std::span<const Session> sessions, std::span<const Flow> vocabulary) {
  if (vocabulary.empty()) throw std::invalid_argument("flow vocabulary is empty");
  std::unordered_map<std::string, const Flow*> by_text;
  std::vector<std::size_t> lengths;
  for (const auto& f : vocabulary) {
    by_text.emplace(f.text(), &f);
    lengths.push_back(f.size());
  }
  std::sort(lengths.begin(), lengths.end());
  lengths.erase(std::unique(lengths.begin(), lengths.end()), lengths.end());

  std::map<std::string, UserProfile> profiles;
  std::string window;
  for (const auto& s : sessions) {
    if (s.events.empty()) continue;
    auto& p = profiles[s.user_id];
    p.user_id = s.user_id;
    p.total_events += s.events.size();
    for (auto n : lengths) {
      for (std::size_t i = 0; i + n <= s.events.size(); ++i) {
        window.clear();
        for (std::size_t j = 0; j < n; ++j) {
          if (j) window += kFlowSeparator;
          window += s.events[i + j].tool_id;
        }
        auto it = by_text.find(window);
        if (it != by_text.end()) ++p.flow_counts[*it->second];
      }
    }
  }
  std::vector<UserProfile> out;
  out.reserve(profiles.size());
  for (auto& [id, p] : profiles) out.push_back(std::move(p));
  return out;
}

inline const UserProfile& find_profile(std::span<const UserProfile> profiles, std::string_view user_id) {
  auto it = std::find_if(profiles.begin(), profiles.end(), [&](const UserProfile& p) { return p.user_id == user_id; });
  if (it == profiles.end()) throw UnknownUserError(std::string(user_id));
  return *it;
}

/// Most popular flows the user does not use yet, by number of users.
inline std::vector<Recommendation> recommend_popular(std::span<const UserProfile> profiles, std::span<const FlowStats> stats,
                                                     std::string_view user_id, const RecommendConfig& config) {
  config.validate();
  const auto& target = find_profile(profiles, user_id);
  std::vector<const FlowStats*> candidates;
  for (const auto& s : stats) {
    if (target.count(s.flow) < config.usage_threshold) candidates.push_back(&s);
  }
  std::sort(candidates.begin(), candidates.end(), [](const FlowStats* a, const FlowStats* b) {
    if (a->distinct_users != b->distinct_users) return a->distinct_users > b->distinct_users;
    if (a->occurrences != b->occurrences) return a->occurrences > b->occurrences;
    return a->flow.text() < b->flow.text();
  });
  std::vector<Recommendation> out;
  for (std::size_t i = 0; i < candidates.size() && out.size() < config.count; ++i) {
    out.push_back({candidates[i]->flow, static_cast<double>(candidates[i]->distinct_users), out.size() + 1, RecommendMethod::popular});
  }
  return out;
}

/// Cosine of the angle between two flow-count vectors; 0 when either is zero.
inline double cosine_similarity(const UserProfile& a, const UserProfile& b) {
  // Integer dot product and norms keep the result exactly symmetric.
  unsigned __int128 dot = 0, na = 0, nb = 0;
  for (const auto& [f, c] : a.flow_counts) {
    na += static_cast<unsigned __int128>(c) * c;
    auto it = b.flow_counts.find(f);
    if (it != b.flow_counts.end()) dot += static_cast<unsigned __int128>(c) * it->second;
  }
  for (const auto& [f, c] : b.flow_counts) nb += static_cast<unsigned __int128>(c) * c;
  if (na == 0 || nb == 0) return 0.0;
  const double sim = static_cast<double>(dot) / std::sqrt(static_cast<double>(na) * static_cast<double>(nb));
  return std::clamp(sim, 0.0, 1.0);
}

/// User-based collaborative filtering: each of the neighbors_m most similar
/// users votes, with its similarity, for the flows it uses and the target
/// does not.
inline std::vector<Recommendation> recommend_cf(std::span<const UserProfile> profiles, std::string_view user_id,
                                                const RecommendConfig& config) {
  config.validate();
  const auto& target = find_profile(profiles, user_id);
  if (profiles.size() < 2) throw std::invalid_argument("collaborative filtering needs at least one other user");

  struct Neighbor {
    const UserProfile* profile;
    double similarity;
  };
  std::vector<Neighbor> neighbors;
  for (const auto& p : profiles) {
    if (&p == &target) continue;
    neighbors.push_back({&p, cosine_similarity(target, p)});
  }
  std::sort(neighbors.begin(), neighbors.end(), [](const Neighbor& a, const Neighbor& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.profile->user_id < b.profile->user_id;
  });
  neighbors.resize(std::min(neighbors.size(), config.neighbors_m));

  std::map<std::string, std::pair<const Flow*, double>> scores;  // keyed by canonical text
  for (const auto& nb : neighbors) {
    if (nb.similarity <= 0.0) continue;
    for (const auto& [flow, c] : nb.profile->flow_counts) {
      if (c < config.usage_threshold || target.count(flow) >= config.usage_threshold) continue;
      auto& slot = scores[flow.text()];
      slot.first = &flow;
      slot.second += nb.similarity;
    }
  }
  std::vector<std::pair<std::string, std::pair<const Flow*, double>>> ranked(scores.begin(), scores.end());
  std::erase_if(ranked, [](const auto& r) { return r.second.second <= 0.0; });
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second.second > b.second.second; });

  std::vector<Recommendation> out;
  for (std::size_t i = 0; i < ranked.size() && out.size() < config.count; ++i) {
    out.push_back({*ranked[i].second.first, ranked[i].second.second, out.size() + 1, RecommendMethod::cf});
  }
  return out;
}

inline std::vector<Recommendation> recommend(std::span<const UserProfile> profiles, std::span<const FlowStats> stats,
                                             std::string_view user_id, const RecommendConfig& config) {
  return config.method == RecommendMethod::popular ? recommend_popular(profiles, stats, user_id, config)
                                                   : recommend_cf(profiles, user_id, config);
}

}  // namespace nflow

#endif  // NFLOW_RECOMMEND_HPP_

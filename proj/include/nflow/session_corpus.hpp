#ifndef NFLOW_SESSION_CORPUS_HPP_
#define NFLOW_SESSION_CORPUS_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "flow.hpp"
#include "ingest.hpp"

namespace nflow {

using ToolId = std::uint32_t;
using UserIndex = std::uint32_t;

/// Interned tool and user names. Ids follow ascending name order.
class Dictionary {
 public:
  Dictionary(std::vector<std::string> tools, std::vector<std::string> users)
      : tools_(std::move(tools)), users_(std::move(users)) {
    tool_index_.reserve(tools_.size());
    for (std::size_t i = 0; i < tools_.size(); ++i) tool_index_.emplace(tools_[i], static_cast<ToolId>(i));
  }

  std::size_t tool_count() const noexcept { return tools_.size(); }
  std::size_t user_count() const noexcept { return users_.size(); }
  const std::string& tool(ToolId id) const { return tools_.at(id); }
  const std::string& user(UserIndex id) const { return users_.at(id); }
  const std::vector<std::string>& users() const noexcept { return users_; }

  std::optional<ToolId> find_tool(const std::string& name) const {
    auto it = tool_index_.find(name);
    if (it == tool_index_.end()) return std::nullopt;
    return it->second;
  }

  Flow decode(std::span<const ToolId> key) const {
    std::vector<std::string> names;
    names.reserve(key.size());
    for (auto id : key) names.push_back(tools_.at(id));
    return Flow(std::move(names));
  }

  /// Three-way comparison of the canonical texts of two encoded flows,
  /// without materializing them.
  int compare_text(std::span<const ToolId> a, std::span<const ToolId> b) const {
    std::size_t ai = 0, bi = 0;  // tool index
    std::size_t ac = 0, bc = 0;  // char offset within tool, == size means separator
    while (true) {
      bool a_end = ai == a.size();
      bool b_end = bi == b.size();
      if (a_end || b_end) return a_end == b_end ? 0 : (a_end ? -1 : 1);
      const auto& as = tools_[a[ai]];
      const auto& bs = tools_[b[bi]];
      auto ch = [](const std::string& s, std::size_t off, bool last) -> int {
        if (off < s.size()) return static_cast<unsigned char>(s[off]);
        return last ? -1 : static_cast<unsigned char>(kFlowSeparator);
      };
      int x = ch(as, ac, ai + 1 == a.size());
      int y = ch(bs, bc, bi + 1 == b.size());
      if (x != y) return x < y ? -1 : 1;
      if (x == -1) return 0;  // both ended on their last tool together
      if (ac == as.size()) {
        ++ai;
        ac = 0;
      } else {
        ++ac;
      }
      if (bc == bs.size()) {
        ++bi;
        bc = 0;
      } else {
        ++bc;
      }
    }
  }

 private:
  std::vector<std::string> tools_;
  std::vector<std::string> users_;
  std::unordered_map<std::string, ToolId> tool_index_;
};

struct EncodedSession {
  UserIndex user = 0;
  std::vector<ToolId> tools;
};

/// Sessions with tools and users interned, ordered by user. This is the
/// input of the counting and TKS miners.
class SessionCorpus {
 public:
  SessionCorpus() : dict_(std::make_shared<Dictionary>(std::vector<std::string>{}, std::vector<std::string>{})) {}

  static SessionCorpus from_sessions(std::span<const Session> sessions) {
    std::vector<std::string> tools, users;
    for (const auto& s : sessions) {
      if (s.events.empty()) continue;
      users.push_back(s.user_id);
      for (const auto& e : s.events) tools.push_back(e.tool_id);
    }
    auto sort_unique = [](std::vector<std::string>& v) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    sort_unique(tools);
    sort_unique(users);

    std::unordered_map<std::string_view, UserIndex> user_index;
    for (std::size_t i = 0; i < users.size(); ++i) user_index.emplace(users[i], static_cast<UserIndex>(i));

    SessionCorpus out;
    out.dict_ = std::make_shared<Dictionary>(std::move(tools), std::move(users));
    out.sessions_.reserve(sessions.size());
    for (const auto& s : sessions) {
      if (s.events.empty()) continue;
      EncodedSession enc;
      enc.user = user_index.at(s.user_id);
      enc.tools.reserve(s.events.size());
      for (const auto& e : s.events) enc.tools.push_back(*out.dict_->find_tool(e.tool_id));
      out.sessions_.push_back(std::move(enc));
    }
    std::stable_sort(out.sessions_.begin(), out.sessions_.end(),
                     [](const EncodedSession& a, const EncodedSession& b) { return a.user < b.user; });
    return out;
  }

  const std::vector<EncodedSession>& sessions() const noexcept { return sessions_; }
  std::size_t user_count() const noexcept { return dict_->user_count(); }
  std::size_t event_count() const noexcept {
    std::size_t n = 0;
    for (const auto& s : sessions_) n += s.tools.size();
    return n;
  }
  const Dictionary& dictionary() const noexcept { return *dict_; }
  std::shared_ptr<const Dictionary> shared_dictionary() const noexcept { return dict_; }

 private:
  std::shared_ptr<const Dictionary> dict_;
  std::vector<EncodedSession> sessions_;
};

}  // namespace nflow

#endif  // NFLOW_SESSION_CORPUS_HPP_

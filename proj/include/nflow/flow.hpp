#ifndef NFLOW_FLOW_HPP_
#define NFLOW_FLOW_HPP_

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace nflow {

/// Separator of the canonical flow text ("Copy/Paste").
inline constexpr char kFlowSeparator = '/';

/// True when `id` may be used as a user or tool identifier: non-empty, and
/// free of newline, carriage return, comma and the flow separator.
inline bool valid_identifier(std::string_view id) noexcept {
  if (id.empty()) return false;
  for (char c : id) {
    if (c == '\n' || c == '\r' || c == ',' || c == kFlowSeparator) return false;
  }
  return true;
}

/// An n-flow: tools used one after another by one user.
///
/// Flows mined from repeat-compressed sessions never hold two equal adjacent
/// tools; the type itself admits them so that uncompressed logs can be mined
/// and inspected (see has_adjacent_repeat()).
class Flow {
 public:
  Flow() = default;

  explicit Flow(std::vector<std::string> tools) : tools_(std::move(tools)) {
    if (tools_.empty()) throw std::invalid_argument("flow must hold at least one tool");
    for (const auto& t : tools_) {
      if (!valid_identifier(t)) throw std::invalid_argument("invalid tool identifier in flow: '" + t + "'");
    }
  }

  Flow(std::initializer_list<std::string> tools) : Flow(std::vector<std::string>(tools)) {}

  /// Parses the canonical "/"-joined form.
  static Flow parse(std::string_view text) {
    std::vector<std::string> tools;
    std::size_t start = 0;
    while (true) {
      auto pos = text.find(kFlowSeparator, start);
      tools.emplace_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
      if (pos == std::string_view::npos) break;
      start = pos + 1;
    }
    return Flow(std::move(tools));
  }

  std::size_t size() const noexcept { return tools_.size(); }
  bool empty() const noexcept { return tools_.empty(); }
  const std::vector<std::string>& tools() const noexcept { return tools_; }
  const std::string& operator[](std::size_t i) const { return tools_[i]; }

  std::string text() const {
    std::string out;
    for (std::size_t i = 0; i < tools_.size(); ++i) {
      if (i) out += kFlowSeparator;
      out += tools_[i];
    }
    return out;
  }

  bool has_adjacent_repeat() const noexcept {
    for (std::size_t i = 1; i < tools_.size(); ++i) {
      if (tools_[i] == tools_[i - 1]) return true;
    }
    return false;
  }

  /// True for n >= 2 flows made of a single tool ("Save/Save/Save").
  bool is_constant() const noexcept {
    if (tools_.size() < 2) return false;
    for (const auto& t : tools_) {
      if (t != tools_.front()) return false;
    }
    return true;
  }

  /// True when `inner` occurs in this flow as a contiguous run.
  bool contains_contiguous(const Flow& inner) const {
    if (inner.size() > size()) return false;
    for (std::size_t off = 0; off + inner.size() <= size(); ++off) {
      bool match = true;
      for (std::size_t i = 0; i < inner.size() && match; ++i) match = tools_[off + i] == inner.tools_[i];
      if (match) return true;
    }
    return false;
  }

  bool operator==(const Flow&) const = default;

  /// Orders flows by their canonical text, the ranking tie-break.
  std::strong_ordering operator<=>(const Flow& other) const { return text() <=> other.text(); }

 private:
  std::vector<std::string> tools_;
};

}  // namespace nflow

template <>
struct std::hash<nflow::Flow> {
  std::size_t operator()(const nflow::Flow& f) const noexcept {
    std::size_t h = 0xcbf29ce484222325ULL;
    for (const auto& t : f.tools()) {
      h ^= std::hash<std::string>{}(t) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
  }
};

#endif  // NFLOW_FLOW_HPP_

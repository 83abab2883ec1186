#ifndef NFLOW_INGEST_HPP_
#define NFLOW_INGEST_HPP_

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "flow.hpp"

namespace nflow {

/// One time-stamped tool invocation by one user.
struct ToolEvent {
  std::string user_id;
  std::string tool_id;
  std::int64_t timestamp_ms = 0;

  bool operator==(const ToolEvent&) const = default;
};

/// A gap-bounded, time-ordered run of one user's events.
struct Session {
  std::string user_id;
  std::vector<ToolEvent> events;

  std::size_t size() const noexcept { return events.size(); }
  bool operator==(const Session&) const = default;
};

enum class LogFormat { csv, jsonl };

inline constexpr std::string_view kCsvHeader = "user_id,tool_id,timestamp_ms";

struct IngestConfig {
  std::int64_t session_gap_ms = 300000;
  bool strict_mode = false;
  LogFormat format = LogFormat::csv;

  void validate() const {
    if (session_gap_ms <= 0) throw std::invalid_argument("session_gap_ms must be positive");
  }
};

struct Rejection {
  std::size_t line = 0;  // 1-based line number in the input
  std::string reason;
};

struct IngestReport {
  static constexpr std::size_t kMaxSamples = 10;

  std::size_t events_accepted = 0;
  std::size_t lines_rejected = 0;
  std::vector<Rejection> rejection_samples;
};

/// Raised for a malformed header, and for any malformed line in strict mode.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& reason)
      : std::runtime_error("line " + std::to_string(line) + ": " + reason), line_(line), reason_(reason) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::size_t line_;
  std::string reason_;
};

struct ParsedLog {
  std::vector<ToolEvent> events;
  IngestReport report;
};

namespace detail {

inline bool valid_utf8(std::string_view s) noexcept {
  std::size_t i = 0;
  const auto n = s.size();
  while (i < n) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len;
    std::uint32_t cp;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > n) return false;
    for (std::size_t j = 1; j < len; ++j) {
      const auto cc = static_cast<unsigned char>(s[i + j]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // overlong forms, surrogates, out of range
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000)) return false;
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
    i += len;
  }
  return true;
}

inline bool parse_timestamp(std::string_view text, std::int64_t& out) noexcept {
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size() && out >= 0;
}

/// Returns an empty string on success, otherwise the rejection reason.
inline std::string parse_csv_line(std::string_view line, ToolEvent& ev) {
  std::string_view fields[3];
  std::size_t count = 0;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    if (count < 3) fields[count] = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    ++count;
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  if (count != 3) return "wrong field count";
  if (fields[0].empty() || fields[1].empty()) return "empty identifier";
  if (!valid_identifier(fields[0]) || !valid_identifier(fields[1])) return "forbidden character in identifier";
  std::int64_t ts = 0;
  if (!parse_timestamp(fields[2], ts)) return "invalid timestamp";
  ev.user_id.assign(fields[0]);
  ev.tool_id.assign(fields[1]);
  ev.timestamp_ms = ts;
  return {};
}

inline std::string parse_json_line(std::string_view line, ToolEvent& ev) {
  auto obj = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (obj.is_discarded() || !obj.is_object()) return "malformed JSON";
  auto user = obj.find("user_id");
  auto tool = obj.find("tool_id");
  auto ts = obj.find("timestamp_ms");
  if (user == obj.end() || tool == obj.end() || ts == obj.end()) return "missing field";
  if (!user->is_string() || !tool->is_string()) return "identifier is not a string";
  const auto& u = user->get_ref<const std::string&>();
  const auto& t = tool->get_ref<const std::string&>();
  if (u.empty() || t.empty()) return "empty identifier";
  if (!valid_identifier(u) || !valid_identifier(t)) return "forbidden character in identifier";
  std::int64_t value = 0;
  if (ts->is_number_unsigned()) {
    auto v = ts->get<std::uint64_t>();
    if (v > static_cast<std::uint64_t>(INT64_MAX)) return "invalid timestamp";
    value = static_cast<std::int64_t>(v);
  } else if (ts->is_number_integer()) {
    value = ts->get<std::int64_t>();
    if (value < 0) return "invalid timestamp";
  } else {
    return "invalid timestamp";
  }
  ev.user_id = u;
  ev.tool_id = t;
  ev.timestamp_ms = value;
  return {};
}

}  // namespace detail

/// Reads a CSV or JSON-lines event log.
///
/// Events come back in input order. Lenient mode skips malformed lines and
/// tallies them in the report; strict mode throws ParseError on the first
/// one. A malformed CSV header always throws. A zero-byte input is an empty
/// log. Every non-header line, blank ones included, is either accepted or
/// rejected.
inline ParsedLog parse_events(std::istream& in, const IngestConfig& config) {
  config.validate();
  ParsedLog out;
  std::string raw;
  std::size_t line_no = 0;
  bool header_pending = config.format == LogFormat::csv;

  auto reject = [&](std::size_t line, std::string reason) {
    if (config.strict_mode) throw ParseError(line, reason);
    ++out.report.lines_rejected;
    if (out.report.rejection_samples.size() < IngestReport::kMaxSamples) {
      out.report.rejection_samples.push_back({line, std::move(reason)});
    }
  };

  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line(raw);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.remove_prefix(3);

    if (header_pending) {
      header_pending = false;
      if (line != kCsvHeader) throw ParseError(line_no, "malformed header");
      continue;
    }
    if (!detail::valid_utf8(line)) {
      reject(line_no, "invalid UTF-8");
      continue;
    }
    if (line.empty()) {
      reject(line_no, "empty line");
      continue;
    }
    ToolEvent ev;
    std::string reason = config.format == LogFormat::csv ? detail::parse_csv_line(line, ev) : detail::parse_json_line(line, ev);
    if (!reason.empty()) {
      reject(line_no, std::move(reason));
      continue;
    }
    out.events.push_back(std::move(ev));
    ++out.report.events_accepted;
  }
  return out;
}

inline ParsedLog parse_events(std::string_view text, const IngestConfig& config) {
  std::istringstream in{std::string(text)};
  return parse_events(in, config);
}

/// Groups events per user (users in ascending id order), orders each user's
/// events by timestamp keeping input order on ties, and splits wherever two
/// consecutive events are more than session_gap_ms apart.
inline std::vector<Session> segment_sessions(std::vector<ToolEvent> events, const IngestConfig& config) {
  config.validate();
  std::stable_sort(events.begin(), events.end(), [](const ToolEvent& a, const ToolEvent& b) {
    if (a.user_id != b.user_id) return a.user_id < b.user_id;
    return a.timestamp_ms < b.timestamp_ms;
  });
  std::vector<Session> sessions;
  for (auto& ev : events) {
    bool fresh = sessions.empty() || sessions.back().user_id != ev.user_id ||
                 ev.timestamp_ms - sessions.back().events.back().timestamp_ms > config.session_gap_ms;
    if (fresh) sessions.push_back(Session{ev.user_id, {}});
    sessions.back().events.push_back(std::move(ev));
  }
  return sessions;
}

/// Collapses each maximal run of equal consecutive tools to its first event.
inline Session compress_repeats(Session session) {
  auto& ev = session.events;
  auto last = std::unique(ev.begin(), ev.end(), [](const ToolEvent& a, const ToolEvent& b) { return a.tool_id == b.tool_id; });
  ev.erase(last, ev.end());
  return session;
}

inline std::vector<Session> compress_repeats(std::vector<Session> sessions) {
  for (auto& s : sessions) s = compress_repeats(std::move(s));
  return sessions;
}

}  // namespace nflow

#endif  // NFLOW_INGEST_HPP_

#ifndef NFLOW_CORPUS_HPP_
#define NFLOW_CORPUS_HPP_

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "flow.hpp"
#include "ingest.hpp"

namespace nflow {

struct CountRange {
  std::size_t min = 1;
  std::size_t max = 1;
};

struct PlantedFlow {
  Flow flow;
  double rate = 0.0;  // per-step injection probability
};

/// Shape of a synthetic event log.
struct CorpusSpec {
  std::size_t users = 100;
  CountRange sessions_per_user{1, 3};
  CountRange session_length{20, 60};  // minimum events per session
  std::size_t background_vocab = 200;
  std::vector<PlantedFlow> planted;
  double repeat_noise_rate = 0.0;
  std::uint64_t seed = 42;
  std::int64_t session_gap_ms = 300000;
  std::int64_t start_ms = 0;

  double injection_rate() const {
    double total = 0;
    for (const auto& p : planted) total += p.rate;
    return total;
  }

  void validate() const {
    if (users < 1) throw std::invalid_argument("corpus needs at least one user");
    if (sessions_per_user.min < 1 || sessions_per_user.min > sessions_per_user.max)
      throw std::invalid_argument("sessions per user must be a range with 1 <= min <= max");
    if (session_length.min < 1 || session_length.min > session_length.max)
      throw std::invalid_argument("session length must be a range with 1 <= min <= max");
    if (background_vocab < 1) throw std::invalid_argument("background vocabulary must hold at least one tool");
    if (!(repeat_noise_rate >= 0.0 && repeat_noise_rate <= 1.0)) throw std::invalid_argument("repeat noise rate must lie in [0, 1]");
    for (const auto& p : planted) {
      if (p.flow.empty()) throw std::invalid_argument("planted flow is empty");
      if (!(p.rate >= 0.0 && p.rate <= 1.0)) throw std::invalid_argument("planted rate must lie in [0, 1]");
    }
    if (injection_rate() > 1.0 + 1e-12) throw std::invalid_argument("planted rates sum above 1");
    if (session_gap_ms <= 0) throw std::invalid_argument("session gap must be positive");
    if (start_ms < 0) throw std::invalid_argument("start time must be non-negative");
  }
};

/// Copy/Paste, Paste/Copy/Paste and Copy/Paste/Copy/Paste, the commonest
/// editing flows of IDE telemetry, at synthetic rates.
inline std::vector<PlantedFlow> default_planted_flows() {
  return {
      {Flow{"Copy", "Paste"}, 0.05},
      {Flow{"Paste", "Copy", "Paste"}, 0.02},
      {Flow{"Copy", "Paste", "Copy", "Paste"}, 0.01},
  };
}

inline std::string background_tool_name(std::size_t i, std::size_t vocab) {
  auto digits = std::to_string(vocab > 0 ? vocab - 1 : 0).size();
  auto num = std::to_string(i);
  return "tool" + std::string(digits > num.size() ? digits - num.size() : 0, '0') + num;
}

inline std::string user_name(std::size_t i, std::size_t users) {
  auto digits = std::to_string(users > 0 ? users - 1 : 0).size();
  auto num = std::to_string(i);
  return "u" + std::string(digits > num.size() ? digits - num.size() : 0, '0') + num;
}

/// Generates events user by user and session by session.
///
/// Each step emits, with probability equal to the summed planted rates, one
/// planted flow (chosen in proportion to its rate) as consecutive events;
/// otherwise one uniformly drawn background tool, repeated once more with
/// probability repeat_noise_rate. A session ends once it holds at least its
/// drawn length. Events are 1000 ms apart within a session and sessions are
/// 2 * session_gap_ms apart.
inline std::vector<ToolEvent> generate_corpus(const CorpusSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<std::size_t> pick_sessions(spec.sessions_per_user.min, spec.sessions_per_user.max);
  std::uniform_int_distribution<std::size_t> pick_length(spec.session_length.min, spec.session_length.max);
  std::uniform_int_distribution<std::size_t> pick_tool(0, spec.background_vocab - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<std::string> background;
  background.reserve(spec.background_vocab);
  for (std::size_t i = 0; i < spec.background_vocab; ++i) background.push_back(background_tool_name(i, spec.background_vocab));
  const double inject = spec.injection_rate();

  std::vector<ToolEvent> events;
  for (std::size_t u = 0; u < spec.users; ++u) {
    const auto user = user_name(u, spec.users);
    std::int64_t t = spec.start_ms;
    const auto session_count = pick_sessions(rng);
    for (std::size_t s = 0; s < session_count; ++s) {
      if (s > 0) t += 2 * spec.session_gap_ms;
      const auto length = pick_length(rng);
      std::size_t emitted = 0;
      bool first = true;
      auto emit = [&](const std::string& tool) {
        if (!first) t += 1000;
        first = false;
        events.push_back({user, tool, t});
        ++emitted;
      };
      while (emitted < length) {
        const double draw = spec.planted.empty() ? 1.0 : unit(rng);
        if (draw < inject) {
          double acc = 0;
          const PlantedFlow* chosen = &spec.planted.back();
          for (const auto& p : spec.planted) {
            acc += p.rate;
            if (draw < acc) {
              chosen = &p;
              break;
            }
          }
          for (const auto& tool : chosen->flow.tools()) emit(tool);
        } else {
          const auto& tool = background[pick_tool(rng)];
          emit(tool);
          if (spec.repeat_noise_rate > 0.0 && unit(rng) < spec.repeat_noise_rate) emit(tool);
        }
      }
    }
  }
  return events;
}

/// Writes events as the canonical CSV log.
inline void write_csv(std::ostream& out, const std::vector<ToolEvent>& events) {
  out << kCsvHeader << '\n';
  for (const auto& e : events) out << e.user_id << ',' << e.tool_id << ',' << e.timestamp_ms << '\n';
}

}  // namespace nflow

#endif  // NFLOW_CORPUS_HPP_

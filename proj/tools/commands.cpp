#include "commands.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "nflow/nflow.hpp"

#ifndef NFLOW_VERSION
#define NFLOW_VERSION "0.0.0"
#endif

namespace nflow::cli {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

class CliFailure : public std::runtime_error {
 public:
  CliFailure(int code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  int code() const noexcept { return code_; }

 private:
  int code_;
};

class StageTimer {
 public:
  void start(std::string stage) {
    stage_ = std::move(stage);
    begin_ = Clock::now();
  }
  void stop() {
    timings_[stage_] = std::chrono::duration<double, std::milli>(Clock::now() - begin_).count();
  }
  json to_json() const {
    json j = json::object();
    for (const auto& [k, v] : timings_) j[k] = v;
    return j;
  }

 private:
  std::string stage_;
  Clock::time_point begin_;
  std::map<std::string, double> timings_;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliFailure(kUnreadableInput, "cannot read input file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw CliFailure(kUnreadableInput, "error while reading: " + path);
  return buf.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CliFailure(kUnreadableInput, "cannot write output file: " + path);
  out << bytes;
  if (!out) throw CliFailure(kUnreadableInput, "error while writing: " + path);
}

void write_manifest(const std::string& out_path, json manifest) {
  manifest["tool_version"] = NFLOW_VERSION;
  write_file(out_path + ".manifest.json", manifest.dump(2) + "\n");
}

// "3" or "2:4"
std::pair<std::size_t, std::size_t> parse_span(const std::string& text, const char* what) {
  auto to_size = [&](const std::string& s) {
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || s.empty())
      throw CliFailure(kInvalidFlags, std::string("invalid ") + what + ": " + text);
    return v;
  };
  auto colon = text.find(':');
  if (colon == std::string::npos) {
    auto v = to_size(text);
    return {v, v};
  }
  return {to_size(text.substr(0, colon)), to_size(text.substr(colon + 1))};
}

struct IngestOptions {
  std::string input;
  std::string log_format = "csv";
  std::int64_t session_gap_ms = 300000;
  bool strict = false;

  void add_to(CLI::App& cmd, bool input_required = true) {
    auto* opt = cmd.add_option("--input,-i", input, "Event log (CSV or JSON-lines)");
    if (input_required) opt->required();
    cmd.add_option("--log-format", log_format, "Event log format")->check(CLI::IsMember({"csv", "jsonl"}));
    cmd.add_option("--session-gap", session_gap_ms, "Session gap threshold in milliseconds");
    cmd.add_flag("--strict", strict, "Abort on the first malformed line");
  }

  IngestConfig config() const {
    IngestConfig c;
    c.session_gap_ms = session_gap_ms;
    c.strict_mode = strict;
    c.format = log_format == "jsonl" ? LogFormat::jsonl : LogFormat::csv;
    if (session_gap_ms <= 0) throw CliFailure(kInvalidFlags, "--session-gap must be positive");
    return c;
  }

  json to_json() const {
    return {{"input", input}, {"log_format", log_format}, {"session_gap_ms", session_gap_ms}, {"strict", strict}};
  }
};

struct LoadedLog {
  std::string digest;
  ParsedLog parsed;
  std::vector<Session> raw_sessions;
  std::vector<Session> sessions;  // repeat-compressed
};

LoadedLog load_log(const IngestOptions& opts, StageTimer& timer) {
  const auto config = opts.config();
  LoadedLog log;
  timer.start("read");
  const auto bytes = read_file(opts.input);
  log.digest = sha256_hex(bytes);
  timer.stop();

  timer.start("parse");
  try {
    log.parsed = parse_events(std::string_view(bytes), config);
  } catch (const ParseError& e) {
    throw CliFailure(kStrictParseFailure, std::string("parse error: ") + e.what());
  }
  timer.stop();

  timer.start("segment");
  log.raw_sessions = segment_sessions(log.parsed.events, config);
  timer.stop();

  timer.start("compress");
  log.sessions = compress_repeats(log.raw_sessions);
  timer.stop();
  return log;
}

json report_json(const IngestReport& r) {
  json samples = json::array();
  for (const auto& s : r.rejection_samples) samples.push_back({{"line", s.line}, {"reason", s.reason}});
  return {{"events_accepted", r.events_accepted}, {"lines_rejected", r.lines_rejected}, {"rejection_samples", samples}};
}

void write_flow_jsonl(std::ostream& out, const std::vector<RankedFlows>& ranked) {
  for (const auto& list : ranked) {
    for (const auto& f : list.flows) {
      out << json{{"n", list.n},
                  {"flow", f.flow.text()},
                  {"occurrences", f.occurrences},
                  {"distinct_users", f.distinct_users},
                  {"user_coverage", f.user_coverage}}
                 .dump()
          << '\n';
    }
  }
}

std::vector<RankedFlows> read_flow_file(const std::string& path) {
  std::istringstream in(read_file(path));
  if (in.peek() != '{') return read_flow_tsv(in);
  std::map<std::size_t, RankedFlows> by_n;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = json::parse(line);
    FlowStats f{Flow::parse(j.at("flow").get<std::string>()), j.at("occurrences").get<std::uint64_t>(),
                j.at("distinct_users").get<std::uint64_t>(), j.at("user_coverage").get<double>()};
    auto n = j.at("n").get<std::size_t>();
    by_n[n].n = n;
    by_n[n].flows.push_back(std::move(f));
  }
  std::vector<RankedFlows> out;
  for (auto& [n, l] : by_n) out.push_back(std::move(l));
  return out;
}

// ---------------------------------------------------------------- generate

struct GenerateCmd {
  CorpusSpec spec;
  std::string sessions = "1:3";
  std::string length = "20:60";
  std::vector<std::string> planted;
  bool no_planted = false;
  std::string out_path;

  void setup(CLI::App& app) {
    auto* cmd = app.add_subcommand("generate", "Write a synthetic event log with planted flows");
    cmd->add_option("--users", spec.users, "Number of users");
    cmd->add_option("--sessions", sessions, "Sessions per user, N or MIN:MAX");
    cmd->add_option("--session-length", length, "Minimum events per session, N or MIN:MAX");
    cmd->add_option("--vocab", spec.background_vocab, "Background tool vocabulary size");
    cmd->add_option("--planted", planted, "Planted flow as FLOW:RATE, e.g. Copy/Paste:0.2 (repeatable)");
    cmd->add_flag("--no-planted", no_planted, "Plant nothing");
    cmd->add_option("--repeat-noise", spec.repeat_noise_rate, "Probability a background event is duplicated");
    cmd->add_option("--seed", spec.seed, "RNG seed");
    cmd->add_option("--session-gap", spec.session_gap_ms, "Session gap in milliseconds");
    cmd->add_option("--out,-o", out_path, "Output CSV (stdout when omitted)");
  }

  int run(std::ostream& out) {
    auto [smin, smax] = parse_span(sessions, "--sessions");
    auto [lmin, lmax] = parse_span(length, "--session-length");
    spec.sessions_per_user = {smin, smax};
    spec.session_length = {lmin, lmax};
    if (no_planted && !planted.empty()) throw CliFailure(kInvalidFlags, "--planted and --no-planted are exclusive");
    if (no_planted) {
      spec.planted.clear();
    } else if (planted.empty()) {
      spec.planted = default_planted_flows();
    } else {
      for (const auto& p : planted) {
        auto colon = p.rfind(':');
        if (colon == std::string::npos) throw CliFailure(kInvalidFlags, "--planted expects FLOW:RATE, got " + p);
        double rate = 0;
        auto rs = p.substr(colon + 1);
        auto [ptr, ec] = std::from_chars(rs.data(), rs.data() + rs.size(), rate);
        if (ec != std::errc{} || ptr != rs.data() + rs.size()) throw CliFailure(kInvalidFlags, "bad planted rate in " + p);
        spec.planted.push_back({Flow::parse(p.substr(0, colon)), rate});
      }
    }
    spec.validate();

    StageTimer timer;
    timer.start("generate");
    std::ostringstream csv;
    write_csv(csv, generate_corpus(spec));
    timer.stop();
    const auto bytes = csv.str();
    if (out_path.empty()) {
      out << bytes;
      return kOk;
    }
    timer.start("write");
    write_file(out_path, bytes);
    timer.stop();

    json planted_json = json::array();
    for (const auto& p : spec.planted) planted_json.push_back({{"flow", p.flow.text()}, {"rate", p.rate}});
    write_manifest(out_path, {{"command", "generate"},
                              {"output", out_path},
                              {"output_sha256", sha256_hex(bytes)},
                              {"config",
                               {{"users", spec.users},
                                {"sessions_per_user", {spec.sessions_per_user.min, spec.sessions_per_user.max}},
                                {"session_length", {spec.session_length.min, spec.session_length.max}},
                                {"background_vocab", spec.background_vocab},
                                {"planted", planted_json},
                                {"repeat_noise_rate", spec.repeat_noise_rate},
                                {"seed", spec.seed},
                                {"session_gap_ms", spec.session_gap_ms}}},
                              {"timings_ms", timer.to_json()}});
    return kOk;
  }
};

// ------------------------------------------------------------------- stats

struct StatsCmd {
  IngestOptions ingest;
  std::string format = "tsv";

  void setup(CLI::App& app) {
    auto* cmd = app.add_subcommand("stats", "Summarize an event log");
    ingest.add_to(*cmd);
    cmd->add_option("--format", format, "Output format")->check(CLI::IsMember({"tsv", "jsonl"}));
  }

  int run(std::ostream& out) {
    StageTimer timer;
    auto log = load_log(ingest, timer);
    std::set<std::string_view> users, tools;
    for (const auto& e : log.parsed.events) {
      users.insert(e.user_id);
      tools.insert(e.tool_id);
    }
    std::size_t kept = 0;
    for (const auto& s : log.sessions) kept += s.events.size();
    const std::size_t total = log.parsed.events.size();
    std::vector<std::pair<std::string, std::size_t>> rows = {
        {"events", total},
        {"users", users.size()},
        {"tools", tools.size()},
        {"sessions", log.sessions.size()},
        {"removed_by_compression", total - kept},
        {"lines_rejected", log.parsed.report.lines_rejected},
    };
    if (format == "jsonl") {
      json j = json::object();
      for (const auto& [k, v] : rows) j[k] = v;
      out << j.dump() << '\n';
    } else {
      for (const auto& [k, v] : rows) out << k << '\t' << v << '\n';
    }
    return kOk;
  }
};

// -------------------------------------------------------------------- mine

struct MineCmd {
  IngestOptions ingest;
  MiningConfig config;
  std::string n_range = "2:4";
  std::string engine = "count";
  bool no_subsume = false;
  std::size_t threads = 1;
  std::string out_path;
  std::string format = "tsv";

  void setup(CLI::App& app) {
    auto* cmd = app.add_subcommand("mine", "Mine the top-k n-flows of an event log");
    ingest.add_to(*cmd);
    cmd->add_option("--n", n_range, "Flow lengths, N or MIN:MAX");
    cmd->add_option("--top-k", config.k, "Flows kept per length");
    cmd->add_option("--engine", engine, "count: exact window counts; tks: top-k miner")->check(CLI::IsMember({"count", "tks"}));
    cmd->add_option("--max-gap", config.max_gap, "Events allowed between consecutive flow tools (tks engine)");
    cmd->add_option("--theta", config.theta, "Subsumption threshold in (0, 1]");
    cmd->add_flag("--no-subsume", no_subsume, "Keep flows contained in frequent longer flows");
    cmd->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--out,-o", out_path, "Output flow table")->required();
    cmd->add_option("--format", format, "Output format")->check(CLI::IsMember({"tsv", "jsonl"}));
  }

  int run(std::ostream&) {
    auto [lo, hi] = parse_span(n_range, "--n");
    config.n_min = lo;
    config.n_max = hi;
    try {
      config.validate();
    } catch (const std::invalid_argument& e) {
      throw CliFailure(kInvalidFlags, e.what());
    }
    if (engine == "count" && config.max_gap != 0) throw CliFailure(kInvalidFlags, "--max-gap needs --engine tks");

    StageTimer timer;
    auto log = load_log(ingest, timer);

    timer.start("encode");
    const auto corpus = SessionCorpus::from_sessions(log.sessions);
    timer.stop();

    timer.start("mine");
    std::vector<RankedFlows> ranked;
    if (engine == "count") {
      ranked = mine_counts(corpus, config, threads);
    } else {
      ranked = mine_tks_threaded(corpus);
    }
    timer.stop();

    if (!no_subsume) {
      timer.start("subsume");
      ranked = filter_subsumed(std::move(ranked), config.theta);
      timer.stop();
    }

    timer.start("write");
    std::ostringstream table;
    if (format == "jsonl") {
      write_flow_jsonl(table, ranked);
    } else {
      write_flow_tsv(table, ranked);
    }
    write_file(out_path, table.str());
    timer.stop();

    json manifest = {{"command", "mine"},
                     {"input_sha256", log.digest},
                     {"output", out_path},
                     {"config",
                      {{"ingest", ingest.to_json()},
                       {"n_min", config.n_min},
                       {"n_max", config.n_max},
                       {"top_k", config.k},
                       {"engine", engine},
                       {"max_gap", config.max_gap},
                       {"theta", config.theta},
                       {"subsume", !no_subsume},
                       {"threads", threads},
                       {"format", format}}},
                     {"ingest_report", report_json(log.parsed.report)},
                     {"timings_ms", timer.to_json()}};
    write_manifest(out_path, std::move(manifest));
    return kOk;
  }

  // One mine_tks run per flow length, spread over the worker threads.
  std::vector<RankedFlows> mine_tks_threaded(const SessionCorpus& corpus) const {
    if (threads <= 1) return mine_tks(corpus, config);
    const std::size_t lengths = config.n_max - config.n_min + 1;
    std::vector<RankedFlows> out(lengths);
    std::vector<std::thread> workers;
    const std::size_t pool = std::min(threads, lengths);
    for (std::size_t w = 0; w < pool; ++w) {
      workers.emplace_back([&, w] {
        for (std::size_t i = w; i < lengths; i += pool) {
          MiningConfig one = config;
          one.n_min = one.n_max = config.n_min + i;
          out[i] = std::move(mine_tks(corpus, one).front());
        }
      });
    }
    for (auto& t : workers) t.join();
    return out;
  }
};

// --------------------------------------------------------------- recommend

struct RecommendCmd {
  IngestOptions ingest;
  RecommendConfig config;
  std::string flows_path;
  std::string user;
  bool all = false;
  std::string method = "popular";
  std::string out_path;
  std::string format = "tsv";

  void setup(CLI::App& app) {
    auto* cmd = app.add_subcommand("recommend", "Recommend flows to users from a mined flow table");
    ingest.add_to(*cmd);
    cmd->add_option("--flows,-f", flows_path, "Flow table written by mine")->required();
    auto* u = cmd->add_option("--user,-u", user, "Target user id");
    auto* a = cmd->add_flag("--all", all, "Recommend for every user in the log");
    u->excludes(a);
    cmd->add_option("--method", method, "Recommendation method")->check(CLI::IsMember({"popular", "cf"}));
    cmd->add_option("--count", config.count, "Recommendations per user")->check(CLI::PositiveNumber);
    cmd->add_option("--neighbors", config.neighbors_m, "Neighbors consulted by cf")->check(CLI::PositiveNumber);
    cmd->add_option("--usage-threshold", config.usage_threshold, "Occurrences at which a user counts as using a flow")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--out,-o", out_path, "Output file (stdout when omitted)");
    cmd->add_option("--format", format, "Output format")->check(CLI::IsMember({"tsv", "jsonl"}));
  }

  int run(std::ostream& out) {
    if (!all && user.empty()) throw CliFailure(kInvalidFlags, "give --user or --all");
    config.method = method == "cf" ? RecommendMethod::cf : RecommendMethod::popular;

    StageTimer timer;
    timer.start("load_flows");
    std::vector<RankedFlows> ranked;
    try {
      ranked = read_flow_file(flows_path);
    } catch (const CliFailure&) {
      throw;
    } catch (const std::exception& e) {
      throw CliFailure(kUnreadableInput, std::string("bad flow table: ") + e.what());
    }
    timer.stop();

    auto log = load_log(ingest, timer);

    std::vector<FlowStats> stats;
    std::vector<Flow> vocabulary;
    for (const auto& list : ranked) {
      for (const auto& f : list.flows) {
        stats.push_back(f);
        vocabulary.push_back(f.flow);
      }
    }
    if (vocabulary.empty()) throw CliFailure(kUnreadableInput, "flow table is empty");

    timer.start("profiles");
    const auto profiles = build_profiles(log.sessions, vocabulary);
    timer.stop();

    std::vector<std::string> targets;
    if (all) {
      for (const auto& p : profiles) targets.push_back(p.user_id);
    } else {
      find_profile(profiles, user);  // throws UnknownUserError before any output
      targets.push_back(user);
    }

    timer.start("recommend");
    std::ostringstream body;
    if (format == "tsv") body << (all ? "user_id\t" : "") << "rank\tflow\tscore\tmethod\n";
    for (const auto& target : targets) {
      for (const auto& r : nflow::recommend(profiles, stats, target, config)) {
        const auto score = format_fixed(r.score, 6);
        if (format == "jsonl") {
          json j = {{"rank", r.rank}, {"flow", r.flow.text()}, {"score", r.score}, {"method", to_string(r.method)}};
          if (all) j["user_id"] = target;
          body << j.dump() << '\n';
        } else {
          if (all) body << target << '\t';
          body << r.rank << '\t' << r.flow.text() << '\t' << score << '\t' << to_string(r.method) << '\n';
        }
      }
    }
    timer.stop();

    if (out_path.empty()) {
      out << body.str();
      return kOk;
    }
    write_file(out_path, body.str());
    write_manifest(out_path, {{"command", "recommend"},
                              {"input_sha256", log.digest},
                              {"flows_sha256", sha256_hex(read_file(flows_path))},
                              {"output", out_path},
                              {"config",
                               {{"ingest", ingest.to_json()},
                                {"flows", flows_path},
                                {"user", all ? json(nullptr) : json(user)},
                                {"all", all},
                                {"method", method},
                                {"count", config.count},
                                {"neighbors", config.neighbors_m},
                                {"usage_threshold", config.usage_threshold},
                                {"format", format}}},
                              {"timings_ms", timer.to_json()}});
    return kOk;
  }
};

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"nflow: mine common n-tool workflows from tool-usage logs and recommend them"};
  app.set_config("--config", "", "Read options from a TOML/INI file");
  app.set_version_flag("--version", NFLOW_VERSION);
  app.require_subcommand(1);

  GenerateCmd generate;
  StatsCmd stats;
  MineCmd mine;
  RecommendCmd recommend;
  generate.setup(app);
  stats.setup(app);
  mine.setup(app);
  recommend.setup(app);

  std::vector<std::string> argv_store{"nflow"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInvalidFlags;
  }

  try {
    if (app.got_subcommand("generate")) return generate.run(out);
    if (app.got_subcommand("stats")) return stats.run(out);
    if (app.got_subcommand("mine")) return mine.run(out);
    if (app.got_subcommand("recommend")) return recommend.run(out);
  } catch (const CliFailure& e) {
    err << "error: " << e.what() << '\n';
    return e.code();
  } catch (const UnknownUserError& e) {
    err << "error: " << e.what() << '\n';
    return kUnknownUser;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kStrictParseFailure;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidFlags;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUnreadableInput;
  }
  return kInvalidFlags;
}

}  // namespace nflow::cli

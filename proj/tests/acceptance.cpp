// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure.

#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "nflow/nflow.hpp"

namespace {

using namespace nflow;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

class ScratchDir {
 public:
  ScratchDir() : path_(std::filesystem::temp_directory_path() / ("nflow_acceptance_" + std::to_string(::getpid()))) {
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

int run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = cli::run(args, out, err);
  if (code != 0) std::cerr << "  cli error (" << code << "): " << err.str();
  return code;
}

std::vector<Session> pipeline_sessions(const std::vector<ToolEvent>& events, bool compress = true) {
  auto sessions = segment_sessions(events, IngestConfig{});
  return compress ? compress_repeats(std::move(sessions)) : sessions;
}

/// Random small corpus spec for the oracle and recommendation criteria.
CorpusSpec random_spec(std::mt19937_64& rng, std::size_t max_users, CountRange sessions, CountRange length) {
  CorpusSpec spec;
  spec.users = 1 + rng() % max_users;
  spec.sessions_per_user = sessions;
  spec.session_length = length;
  spec.background_vocab = 2 + rng() % 6;
  spec.repeat_noise_rate = static_cast<double>(rng() % 40) / 100.0;
  spec.seed = rng();
  const char* tools[] = {"Copy", "Paste", "Cut", "Save", "Delete"};
  const auto planted = rng() % 3;
  for (std::size_t i = 0; i < planted; ++i) {
    std::vector<std::string> flow;
    const auto len = 2 + rng() % 3;
    for (std::size_t j = 0; j < len; ++j) flow.push_back(tools[rng() % 5]);
    spec.planted.push_back({Flow(flow), 0.05 + static_cast<double>(rng() % 10) / 100.0});
  }
  return spec;
}

// 1. mine_tks(max_gap = 0) and count_nflows + top_k both equal the oracle.
Verdict oracle_contiguous() {
  Verdict v;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  std::size_t corpora = 0;
  for (; corpora < 120; ++corpora) {
    // <= 20 users, <= 4 sessions of at most 45 (+3 planted overshoot) events: <= 200 events per user
    auto spec = random_spec(rng, 20, {1, 4}, {5, 45});
    auto events = generate_corpus(spec);
    auto sessions = pipeline_sessions(events);
    auto corpus = SessionCorpus::from_sessions(sessions);
    MiningConfig cfg;
    cfg.n_min = 1;
    cfg.n_max = 4;
    cfg.k = 10;
    auto tks = mine_tks(corpus, cfg);
    auto counted = mine_counts(corpus, cfg);
    for (std::size_t n = 1; n <= 4; ++n) {
      auto truth = oracle_topk(sessions, n, 10, 0);
      if (!(tks[n - 1] == truth)) v.fail("tks differs from oracle, corpus " + std::to_string(corpora) + " n=" + std::to_string(n));
      if (!(counted[n - 1] == truth)) v.fail("count differs from oracle, corpus " + std::to_string(corpora) + " n=" + std::to_string(n));
    }
  }
  const double secs = seconds_since(t0);
  if (secs >= 60.0) v.fail("runtime " + std::to_string(secs) + " s >= 60 s");
  if (v.pass) v.detail = std::to_string(corpora) + " corpora, n=1..4, k=10, exact, " + format_fixed(secs, 2) + " s";
  return v;
}

// 2. Gapped mining equals the oracle for max_gap in {1, 2}.
Verdict oracle_gapped() {
  Verdict v;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(77001);
  std::size_t corpora = 0;
  for (; corpora < 60; ++corpora) {
    // <= 10 sessions in total, each <= 30 events
    auto spec = random_spec(rng, 5, {1, 2}, {3, 27});
    auto sessions = pipeline_sessions(generate_corpus(spec));
    for (auto& s : sessions) {
      if (s.events.size() > 30) s.events.resize(30);
    }
    auto corpus = SessionCorpus::from_sessions(sessions);
    for (std::size_t gap : {1u, 2u}) {
      MiningConfig cfg;
      cfg.n_min = 1;
      cfg.n_max = 4;
      cfg.k = 10;
      cfg.max_gap = gap;
      auto tks = mine_tks(corpus, cfg);
      for (std::size_t n = 1; n <= 4; ++n) {
        if (!(tks[n - 1] == oracle_topk(sessions, n, 10, gap)))
          v.fail("corpus " + std::to_string(corpora) + " gap " + std::to_string(gap) + " n=" + std::to_string(n));
      }
    }
  }
  const double secs = seconds_since(t0);
  if (secs >= 60.0) v.fail("runtime " + std::to_string(secs) + " s >= 60 s");
  if (v.pass) v.detail = std::to_string(corpora) + " corpora, max_gap 1 and 2, n=1..4, exact, " + format_fixed(secs, 2) + " s";
  return v;
}

// 3. Repeat noise dominates uncompressed top-5 lists and vanishes after compression.
Verdict repeat_pruning() {
  Verdict v;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    CorpusSpec spec;
    spec.users = 50;
    spec.sessions_per_user = {1, 2};
    spec.session_length = {40, 80};
    spec.background_vocab = 5;
    spec.repeat_noise_rate = 0.5;
    spec.seed = seed;
    auto events = generate_corpus(spec);
    auto raw = SessionCorpus::from_sessions(pipeline_sessions(events, false));
    auto compressed = SessionCorpus::from_sessions(pipeline_sessions(events, true));
    for (std::size_t n = 2; n <= 4; ++n) {
      auto top5 = top_k(count_nflows(raw, n), 5);
      bool any_constant = false;
      for (const auto& f : top5.flows) any_constant |= f.flow.is_constant();
      if (!any_constant) v.fail("seed " + std::to_string(seed) + ": no constant flow in uncompressed top-5, n=" + std::to_string(n));
      for (const auto& [key, entry] : count_nflows(compressed, n).entries()) {
        if (compressed.dictionary().decode(key).is_constant()) v.fail("constant flow after compression, seed " + std::to_string(seed));
      }
    }
  }
  if (v.pass) v.detail = "20 seeds, n=2..4: constant flow in every uncompressed top-5, none after compression";
  return v;
}

// 4. A planted 3-flow at rate 0.05 ranks first among 3-flows.
Verdict planted_recovery() {
  Verdict v;
  int hits = 0;
  const Flow planted{"Organize Imports", "Format", "Save All"};
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    CorpusSpec spec;
    spec.users = 500;
    spec.background_vocab = 200;
    spec.planted = {{planted, 0.05}};
    spec.seed = seed;
    auto corpus = SessionCorpus::from_sessions(pipeline_sessions(generate_corpus(spec)));
    MiningConfig cfg;
    cfg.n_min = cfg.n_max = 3;
    auto ranked = mine_tks(corpus, cfg);
    if (!ranked[0].flows.empty() && ranked[0].flows.front().flow == planted) ++hits;
  }
  if (hits < 19) v.fail("planted flow ranked #1 in " + std::to_string(hits) + "/20 seeds (< 19)");
  if (v.pass) v.detail = "planted flow ranked #1 in " + std::to_string(hits) + "/20 seeds";
  return v;
}

// 5. The Copy/Paste chain with counts 100/95/90 leaves only the 4-flow at theta 0.75.
Verdict subsumption_chain() {
  Verdict v;
  std::vector<RankedFlows> in = {{2, {{Flow::parse("Copy/Paste"), 100, 1, 1.0}}},
                                 {3, {{Flow::parse("Paste/Copy/Paste"), 95, 1, 1.0}}},
                                 {4, {{Flow::parse("Copy/Paste/Copy/Paste"), 90, 1, 1.0}}}};
  auto out = filter_subsumed(in, 0.75);
  if (out.size() != 3 || !out[0].flows.empty() || !out[1].flows.empty() || out[2].flows.size() != 1 ||
      out[2].flows[0].flow.text() != "Copy/Paste/Copy/Paste") {
    v.fail("unexpected survivors");
  }
  if (v.pass) v.detail = "only Copy/Paste/Copy/Paste survives";
  return v;
}

struct RecRow {
  std::string user, flow;
  std::size_t rank;
  double score;
};

std::vector<RecRow> read_recs(const std::string& path) {
  std::vector<RecRow> rows;
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    RecRow r;
    std::string rank, score, method;
    std::getline(ls, r.user, '\t');
    std::getline(ls, rank, '\t');
    std::getline(ls, r.flow, '\t');
    std::getline(ls, score, '\t');
    r.rank = std::stoul(rank);
    r.score = std::stod(score);
    rows.push_back(r);
  }
  return rows;
}

// 6. Recommendations exclude used flows, have non-increasing scores and are
//    deterministic across runs and thread counts.
Verdict recommendation_invariants(const ScratchDir& dir) {
  Verdict v;
  std::mt19937_64 rng(606);
  std::size_t corpora = 0, checked = 0;
  for (; corpora < 100; ++corpora) {
    auto spec = random_spec(rng, 15, {1, 3}, {10, 40});
    spec.users = std::max<std::size_t>(spec.users, 2);
    const auto events = generate_corpus(spec);
    const auto log = dir.file("rec.csv");
    {
      std::ofstream out(log);
      write_csv(out, events);
    }
    const auto f1 = dir.file("rec_t1.tsv"), f4 = dir.file("rec_t4.tsv");
    if (run_cli({"mine", "--input", log, "--n", "1:4", "--top-k", "10", "--threads", "1", "--out", f1}) != 0 ||
        run_cli({"mine", "--input", log, "--n", "1:4", "--top-k", "10", "--threads", "4", "--out", f4}) != 0) {
      v.fail("mine failed on corpus " + std::to_string(corpora));
      continue;
    }
    if (slurp(f1) != slurp(f4)) v.fail("threads 1 vs 4 flow tables differ, corpus " + std::to_string(corpora));

    std::ifstream tin(f1);
    std::vector<Flow> vocab;
    for (const auto& l : read_flow_tsv(tin)) {
      for (const auto& f : l.flows) vocab.push_back(f.flow);
    }
    if (vocab.empty()) continue;
    const auto profiles = build_profiles(pipeline_sessions(events), vocab);

    for (std::string method : {"popular", "cf"}) {
      const auto r1 = dir.file("r1.tsv"), r2 = dir.file("r2.tsv"), r4 = dir.file("r4.tsv");
      if (run_cli({"recommend", "--flows", f1, "--input", log, "--all", "--method", method, "--out", r1}) != 0 ||
          run_cli({"recommend", "--flows", f1, "--input", log, "--all", "--method", method, "--out", r2}) != 0 ||
          run_cli({"recommend", "--flows", f4, "--input", log, "--all", "--method", method, "--out", r4}) != 0) {
        v.fail("recommend failed on corpus " + std::to_string(corpora));
        continue;
      }
      if (slurp(r1) != slurp(r2)) v.fail("repeated recommend runs differ, corpus " + std::to_string(corpora));
      if (slurp(r1) != slurp(r4)) v.fail("recommendations differ between thread counts, corpus " + std::to_string(corpora));
      const auto rows = read_recs(r1);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& p = find_profile(profiles, rows[i].user);
        if (p.count(Flow::parse(rows[i].flow)) >= 1) v.fail(method + " recommended a used flow to " + rows[i].user);
        if (i > 0 && rows[i].user == rows[i - 1].user) {
          if (rows[i].score > rows[i - 1].score) v.fail(method + " scores increase for " + rows[i].user);
          if (rows[i].rank != rows[i - 1].rank + 1) v.fail(method + " ranks not contiguous");
        } else if (rows[i].rank != 1) {
          v.fail(method + " ranks do not start at 1");
        }
        ++checked;
      }
    }
  }
  if (v.pass) v.detail = std::to_string(corpora) + " corpora, " + std::to_string(checked) + " recommendations checked";
  return v;
}

struct ChildRun {
  int code = -1;
  double seconds = 0;
  long max_rss_kb = 0;
};

/// Runs the CLI in a forked child so its peak memory is measured alone.
ChildRun run_measured(const std::vector<std::string>& args) {
  const auto t0 = Clock::now();
  pid_t pid = ::fork();
  if (pid == 0) {
    std::ostringstream out, err;
    int code = cli::run(args, out, err);
    std::cerr << err.str();
    std::_Exit(code);
  }
  int status = 0;
  rusage usage{};
  ::wait4(pid, &status, 0, &usage);
  ChildRun r;
  r.seconds = seconds_since(t0);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.max_rss_kb = usage.ru_maxrss;
  return r;
}

// 7. One million events mined for n = 2..4, k = 100 within 60 s and 2 GB.
Verdict scale_budget(const ScratchDir& dir) {
  Verdict v;
  const auto log = dir.file("scale.csv");
  if (run_cli({"generate", "--users", "1000", "--sessions", "10", "--session-length", "100", "--vocab", "300", "--seed", "7",
               "--out", log}) != 0) {
    v.fail("generate failed");
    return v;
  }
  std::size_t events = 0;
  {
    std::ifstream in(log);
    std::string line;
    while (std::getline(in, line)) ++events;
    --events;
  }
  if (events < 1'000'000) v.fail("corpus holds only " + std::to_string(events) + " events");

  std::ostringstream detail;
  detail << events << " events;";
  std::string reference;
  for (std::string engine : {"count", "tks"}) {
    for (std::string threads : {"1", "4"}) {
      const auto out = dir.file("scale_" + engine + "_" + threads + ".tsv");
      auto r = run_measured({"mine", "--input", log, "--n", "2:4", "--top-k", "100", "--engine", engine, "--threads", threads, "--out", out});
      if (r.code != 0) {
        v.fail(engine + " threads " + threads + " exited " + std::to_string(r.code));
        continue;
      }
      const double gb = static_cast<double>(r.max_rss_kb) / (1024.0 * 1024.0);
      if (threads == "1") {
        detail << ' ' << engine << ' ' << format_fixed(r.seconds, 2) << " s / " << format_fixed(gb, 3) << " GB;";
        if (r.seconds > 60.0) v.fail(engine + " took " + format_fixed(r.seconds, 2) + " s > 60 s");
        if (gb > 2.0) v.fail(engine + " peak memory " + format_fixed(gb, 3) + " GB > 2 GB");
      }
      const auto bytes = slurp(out);
      if (reference.empty()) reference = bytes;
      if (bytes != reference) v.fail(engine + " threads " + threads + " output differs");
    }
  }
  if (v.pass) v.detail = detail.str() + " threads 4 identical";
  return v;
}

// 8. The TSV written by mine reads back to the in-memory flow sets and counts.
Verdict tsv_round_trip(const ScratchDir& dir) {
  Verdict v;
  std::mt19937_64 rng(88);
  std::size_t corpora = 0;
  for (; corpora < 40; ++corpora) {
    auto spec = random_spec(rng, 20, {1, 3}, {10, 60});
    const auto events = generate_corpus(spec);
    const auto log = dir.file("rt.csv"), flows = dir.file("rt.tsv");
    {
      std::ofstream out(log);
      write_csv(out, events);
    }
    const bool subsume = corpora % 2 == 0;
    std::vector<std::string> args = {"mine", "--input", log, "--n", "1:4", "--top-k", "25", "--out", flows};
    if (!subsume) args.push_back("--no-subsume");
    if (run_cli(args) != 0) {
      v.fail("mine failed");
      continue;
    }
    MiningConfig cfg;
    cfg.n_min = 1;
    cfg.k = 25;
    auto expected = mine_counts(SessionCorpus::from_sessions(pipeline_sessions(events)), cfg);
    if (subsume) expected = filter_subsumed(std::move(expected), cfg.theta);
    std::erase_if(expected, [](const RankedFlows& r) { return r.flows.empty(); });

    std::ifstream in(flows);
    auto back = read_flow_tsv(in);
    bool same = back.size() == expected.size();
    for (std::size_t i = 0; same && i < back.size(); ++i) {
      same = back[i].n == expected[i].n && back[i].size() == expected[i].size();
      for (std::size_t j = 0; same && j < back[i].size(); ++j) {
        const auto& a = back[i].flows[j];
        const auto& b = expected[i].flows[j];
        same = a.flow == b.flow && a.occurrences == b.occurrences && a.distinct_users == b.distinct_users;
      }
    }
    if (!same) v.fail("round trip mismatch on corpus " + std::to_string(corpora));
    if (run_cli({"recommend", "--flows", flows, "--input", log, "--all", "--out", dir.file("rt_recs.tsv")}) != 0)
      v.fail("recommend could not consume the table of corpus " + std::to_string(corpora));
  }
  if (v.pass) v.detail = std::to_string(corpora) + " corpora, flows and counts identical after re-read";
  return v;
}

}  // namespace

int main() {
  ScratchDir dir;
  struct Criterion {
    const char* id;
    const char* name;
    std::function<Verdict()> check;
  };
  const std::vector<Criterion> criteria = {
      {"AC1", "oracle equivalence, contiguous", oracle_contiguous},
      {"AC2", "oracle equivalence, gapped", oracle_gapped},
      {"AC3", "repeat pruning removes constant flows", repeat_pruning},
      {"AC4", "planted pattern recovery", planted_recovery},
      {"AC5", "subsumption of the Copy/Paste chain", subsumption_chain},
      {"AC6", "recommendation invariants", [&] { return recommendation_invariants(dir); }},
      {"AC7", "scale budget", [&] { return scale_budget(dir); }},
      {"AC8", "flow table round trip", [&] { return tsv_round_trip(dir); }},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v.fail(std::string("exception: ") + e.what());
    }
    std::cout << (v.pass ? "[PASS] " : "[FAIL] ") << c.id << ' ' << c.name << ": " << v.detail << std::endl;
    failures += v.pass ? 0 : 1;
  }
  std::cout << (failures == 0 ? "all acceptance criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}

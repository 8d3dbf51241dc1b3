#ifndef BCTS_BENCH_HPP
#define BCTS_BENCH_HPP

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "bcts/search.hpp"

namespace bcts {

struct BenchRecord {
  std::string method;  // dfs, bfs-seq or bfs-batch
  std::size_t depth = 0;
  std::size_t actions = 0;
  double wall_ms = 0.0;  // median over repeats
  std::uint64_t batched_calls = 0;
  std::uint64_t transitions = 0;

  bool operator==(const BenchRecord&) const = default;
};

inline constexpr const char* kBenchHeader = "method,depth,actions,wall_ms,batched_calls,transitions";

inline void write_bench_csv(std::ostream& os, const std::vector<BenchRecord>& records) {
  os << kBenchHeader << '\n';
  char buf[64];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%.17g", r.wall_ms);
    os << r.method << ',' << r.depth << ',' << r.actions << ',' << buf << ',' << r.batched_calls
       << ',' << r.transitions << '\n';
  }
}

inline std::vector<BenchRecord> read_bench_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kBenchHeader) throw ConfigError("bench CSV: wrong header");
  std::vector<BenchRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string f[6];
    for (int i = 0; i < 6; ++i) {
      if (!std::getline(row, f[i], ',')) throw ConfigError("bench CSV: malformed row \"" + line + "\"");
    }
    try {
      out.push_back({f[0], std::stoull(f[1]), std::stoull(f[2]), std::stod(f[3]), std::stoull(f[4]),
                     std::stoull(f[5])});
    } catch (const std::exception&) {
      throw ConfigError("bench CSV: malformed row \"" + line + "\"");
    }
  }
  return out;
}

inline const std::vector<std::string>& bench_methods() {
  static const std::vector<std::string> m = {"dfs", "bfs-seq", "bfs-batch"};
  return m;
}

inline PlanResult run_method(const std::string& method, const ForwardModel& model,
                             const QFunction& q, StateToken root, std::size_t depth, double gamma,
                             std::uint64_t node_budget) {
  if (method == "dfs") return dfs_plan(model, q, root, depth, gamma, std::nullopt, node_budget);
  if (method == "bfs-seq") return bfs_seq_plan(model, q, root, depth, gamma, std::nullopt, node_budget);
  if (method == "bfs-batch") return batch_bfs_plan(model, q, root, depth, gamma, std::nullopt, node_budget);
  throw ConfigError("unknown bench method \"" + method + "\"");
}

struct BenchOptions {
  std::vector<std::size_t> depths = {1, 2, 3, 4};
  std::vector<std::string> methods = bench_methods();
  std::size_t repeats = 5;
  bool timing = true;  // false writes wall_ms = 0
  std::uint64_t node_budget = kDefaultNodeBudget;
};

struct BenchReport {
  std::vector<BenchRecord> records;
  std::vector<std::string> skipped;     // depth + reason
  std::vector<std::string> violations;  // failed invocation or agreement checks
};

/**
 * Times every (method, depth) pair: one warmup plan, then the median wall
 * time over `repeats`. Each record is checked against the invocation
 * contract, and all methods must choose the same action at a depth.
 * Depths over the node budget are skipped with a reason.
 */
inline BenchReport bench_search(const ForwardModel& model, const QFunction& q, StateToken root,
                                double gamma, const BenchOptions& opt) {
  if (opt.repeats < 1) throw ConfigError("bench: repeats must be >= 1");
  BenchReport rep;
  const std::size_t actions = model.action_count();
  for (std::size_t d : opt.depths) {
    std::optional<ActionId> agreed;
    for (const auto& method : opt.methods) {
      PlanResult plan;
      try {
        plan = run_method(method, model, q, root, d, gamma, opt.node_budget);
      } catch (const ResourceError& e) {
        rep.skipped.push_back("depth " + std::to_string(d) + ": " + e.what());
        break;
      }
      std::vector<double> times;
      for (std::size_t r = 0; r < opt.repeats && opt.timing; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        plan = run_method(method, model, q, root, d, gamma, opt.node_budget);
        times.push_back(
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
      }
      double median = 0.0;
      if (!times.empty()) {
        std::sort(times.begin(), times.end());
        const std::size_t n = times.size();
        median = n % 2 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
      }
      const BenchRecord rec{method, d, actions, median, plan.batched_calls, plan.transitions};
      const std::string where = method + " d=" + std::to_string(d);
      if (rec.transitions != tree_transitions(actions, d)) {
        rep.violations.push_back(where + ": transition count");
      }
      const std::uint64_t expected_calls = method == "bfs-batch" ? d : tree_transitions(actions, d);
      if (rec.batched_calls != expected_calls) rep.violations.push_back(where + ": call count");
      if (agreed && *agreed != plan.chosen_action) rep.violations.push_back(where + ": action");
      agreed = plan.chosen_action;
      rep.records.push_back(rec);
    }
  }
  return rep;
}

}  // namespace bcts

#endif  // BCTS_BENCH_HPP

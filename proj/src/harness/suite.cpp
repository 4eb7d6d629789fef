#include "oppload/harness/suite.hpp"

#include <atomic>
#include <cmath>
#include <thread>

namespace oppload::harness {

std::vector<SuiteRun> expand(const SuitePlan& plan) {
  std::vector<SuiteRun> runs;
  for (const auto& base : plan.scenarios) {
    auto clients = plan.clients.empty() ? std::vector<std::size_t>{base.clients} : plan.clients;
    auto strategies = plan.strategies.empty() ? std::vector<assignment::Strategy>{base.runtime.strategy}
                                              : plan.strategies;
    const std::size_t seeds = plan.seeds.value_or(base.seeds);
    const std::uint64_t first = plan.first_seed.value_or(base.seed);
    for (auto c : clients)
      for (auto s : strategies)
        for (std::size_t k = 0; k < seeds; ++k) {
          SuiteRun run;
          run.config = base;
          run.config.clients = c;
          run.config.runtime.strategy = s;
          run.config.seed = first + k;
          runs.push_back(std::move(run));
        }
  }
  return runs;
}

void run_suite(std::vector<SuiteRun>& runs, unsigned jobs) {
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < runs.size(); i = next++) {
      try {
        runs[i].report = run_scenario(runs[i].config);
      } catch (const std::exception& e) {
        runs[i].error = e.what();
      }
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(runs.size())));
  if (jobs == 1) {
    worker();
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned i = 0; i < jobs; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

Stat describe(const std::vector<double>& xs) {
  Stat s;
  s.n = xs.size();
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

Aggregate aggregate(const std::vector<ExperimentReport>& reports) {
  struct Acc {
    std::size_t runs = 0, workflows = 0, successes = 0;
    std::vector<double> exec, runtime, tx, total;
    std::array<std::size_t, 5> states{};
  };
  std::map<GroupKey, Acc> acc;
  Aggregate out;
  for (const auto& r : reports) {
    GroupKey key{r.scenario, r.clients, r.strategy};
    auto& a = acc[key];
    ++a.runs;
    for (const auto& w : r.workflows) {
      ++a.workflows;
      ++a.states[static_cast<std::size_t>(w.state)];
      if (w.state != FinalState::Success) continue;
      ++a.successes;
      const auto t = w.totals();
      a.exec.push_back(t.execution_s);
      a.runtime.push_back(t.runtime_s);
      a.tx.push_back(t.transmission_s);
      a.total.push_back(t.total());
    }
    auto& m = out.load[key];
    for (const auto& [caller, row] : r.selections)
      for (const auto& [worker, n] : row) m[caller][worker] += n;
  }
  for (auto& [key, a] : acc) {
    SummaryRow row;
    row.key = key;
    row.runs = a.runs;
    row.workflows = a.workflows;
    row.successes = a.successes;
    row.success_rate = a.workflows ? static_cast<double>(a.successes) / a.workflows : 0.0;
    row.execution = describe(a.exec);
    row.runtime = describe(a.runtime);
    row.transmission = describe(a.tx);
    row.total = describe(a.total);
    row.states = a.states;
    out.rows.push_back(std::move(row));
  }
  return out;
}

double selection_entropy(const LoadMatrix& m) {
  double total = 0.0, weighted = 0.0;
  for (const auto& [caller, row] : m) {
    double n_row = 0.0;
    for (const auto& [worker, n] : row) n_row += static_cast<double>(n);
    if (n_row == 0.0) continue;
    double h = 0.0;
    for (const auto& [worker, n] : row) {
      const double p = static_cast<double>(n) / n_row;
      if (p > 0) h -= p * std::log2(p);
    }
    weighted += n_row * h;
    total += n_row;
  }
  return total > 0 ? weighted / total : 0.0;
}

}  // namespace oppload::harness

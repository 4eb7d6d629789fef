// Runs every acceptance criterion and prints one PASS/FAIL line for each.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "oppload/assignment.hpp"
#include "oppload/harness/experiment.hpp"
#include "oppload/harness/output.hpp"
#include "oppload/harness/suite.hpp"

using namespace oppload;
using namespace oppload::harness;
using assignment::Strategy;

namespace {

// pinned tolerances
constexpr double kSpreadVsBestHetero = 0.15;
constexpr double kSpreadVsBestHomo = 0.05;
constexpr double kAotTransmissionTarget = 20.44;
constexpr double kAotTransmissionTolerance = 2.0;
constexpr double kFoldedTolerance = 0.005;
constexpr std::size_t kFoldedDraws = 1'000'000;
constexpr double kLoadMinShare = 0.01;
constexpr std::size_t kLoadMinWorkers = 3;
constexpr std::size_t kLoadSeeds = 100;
constexpr double kMobileGap = 0.2;
constexpr std::size_t kRingSeeds = 25;

const std::filesystem::path kScenarios = OPPLOAD_SCENARIO_DIR;

unsigned jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ScenarioConfig scenario(const char* file, std::uint64_t seed = 1) {
  auto c = load_scenario(kScenarios / file);
  c.seed = seed;
  return c;
}

std::vector<SuiteRun> suite(const ScenarioConfig& c, std::vector<Strategy> strategies, std::size_t seeds,
                            std::vector<std::size_t> clients = {}) {
  SuitePlan plan;
  plan.scenarios = {c};
  plan.strategies = std::move(strategies);
  plan.clients = std::move(clients);
  plan.seeds = seeds;
  plan.first_seed = 1;
  auto runs = expand(plan);
  run_suite(runs, jobs());
  return runs;
}

std::vector<ExperimentReport> reports(const std::vector<SuiteRun>& runs) {
  std::vector<ExperimentReport> out;
  for (const auto& r : runs)
    if (r.report) out.push_back(*r.report);
  return out;
}

std::map<std::string, SummaryRow> by_strategy(const Aggregate& agg) {
  std::map<std::string, SummaryRow> out;
  for (const auto& row : agg.rows) out[row.key.strategy] = row;
  return out;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// ---------------------------------------------------------------------------

std::vector<SuiteRun> g_hetero;  // reused by determinism and cleanup checks

Outcome strategy_ordering() {
  g_hetero = suite(scenario("ring_jit_heterogeneous.ini"), {std::begin(assignment::kAllStrategies),
                                                            std::end(assignment::kAllStrategies)},
                   kRingSeeds);
  auto rows = by_strategy(aggregate(reports(g_hetero)));
  const double recent = rows["recent"].total.mean, random = rows["random"].total.mean,
               best = rows["best"].total.mean, spread = rows["spread"].total.mean;
  const double gap = std::abs(spread - best) / best;
  bool all_ok = true;
  for (auto& [s, row] : rows) all_ok &= row.successes == row.workflows && row.workflows == kRingSeeds;
  return {all_ok && recent > random && random > best && gap <= kSpreadVsBestHetero,
          fmt("recent %.2f > random %.2f > best %.2f s; spread %.2f s, %.1f%% from best (max %.0f%%)",
              recent, random, best, spread, 100 * gap, 100 * kSpreadVsBestHetero)};
}

Outcome homogeneous_equivalence() {
  auto runs = suite(scenario("ring_jit_homogeneous.ini"), {Strategy::Best, Strategy::Spread}, kRingSeeds);
  auto rows = by_strategy(aggregate(reports(runs)));
  const double best = rows["best"].total.mean, spread = rows["spread"].total.mean;
  const double gap = std::abs(spread - best) / best;
  return {gap <= kSpreadVsBestHomo && rows["best"].successes == kRingSeeds &&
              rows["spread"].successes == kRingSeeds,
          fmt("best %.2f s, spread %.2f s, %.2f%% apart (max %.0f%%)", best, spread, 100 * gap,
              100 * kSpreadVsBestHomo)};
}

Outcome aot_transmission() {
  auto runs = suite(scenario("ring_aot.ini"), {}, kRingSeeds);
  auto rows = aggregate(reports(runs)).rows;
  if (rows.size() != 1 || rows[0].successes != kRingSeeds) return {false, "AoT runs did not all succeed"};
  const double tx = rows[0].transmission.mean;
  return {std::abs(tx - kAotTransmissionTarget) <= kAotTransmissionTolerance,
          fmt("mean transmission %.2f s over 5 tasks, target %.2f +/- %.1f s", tx,
              kAotTransmissionTarget, kAotTransmissionTolerance)};
}

Outcome folded_normal_law() {
  auto phi = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
  const double expect[3] = {2 * (phi(1) - phi(0)), 2 * (phi(2) - phi(1)), 2 * (phi(3) - phi(2))};
  const double quoted[3] = {0.6827, 0.2718, 0.0428};
  bool ok = true;
  std::string detail;
  for (std::size_t n : {4ul, 11ul}) {
    std::mt19937_64 rng(20240607 + n);
    std::vector<std::size_t> hits(n, 0);
    for (std::size_t i = 0; i < kFoldedDraws; ++i) ++hits[assignment::folded_normal_index(n, rng)];
    for (int k = 0; k < 3; ++k) {
      const double p = static_cast<double>(hits[k]) / kFoldedDraws;
      ok &= std::abs(p - expect[k]) <= kFoldedTolerance && std::abs(p - quoted[k]) <= kFoldedTolerance;
      if (n == 11) detail += fmt("%sP(%d)=%.4f", k ? " " : "", k, p);
    }
  }
  return {ok, detail + fmt(" vs %.4f/%.4f/%.4f, n in {4,11}, 1e6 draws", expect[0], expect[1], expect[2])};
}

Outcome load_distribution() {
  auto runs = suite(scenario("ring_jit_homogeneous.ini"), {Strategy::Random, Strategy::Best, Strategy::Spread},
                    kLoadSeeds);
  auto agg = aggregate(reports(runs));
  std::map<std::string, LoadMatrix> load;
  for (const auto& [key, m] : agg.load) load[key.strategy] = m;
  const auto& best = load["best"];
  const auto& spread = load["spread"];

  bool best_ok = !best.empty();
  std::map<NodeAddress, NodeAddress> top;
  for (const auto& [caller, row] : best) {
    best_ok &= row.size() == 1;
    top[caller] = row.begin()->first;
  }
  bool spread_ok = !spread.empty();
  std::size_t callers = 0, min_wide = 99;
  for (const auto& [caller, row] : spread) {
    std::uint64_t total = 0;
    for (const auto& [w, n] : row) total += n;
    if (!top.count(caller)) continue;
    ++callers;
    const std::uint64_t top_n = row.count(top[caller]) ? row.at(top[caller]) : 0;
    std::size_t wide = 0;
    for (const auto& [w, n] : row) {
      if (w != top[caller] && n >= top_n) spread_ok = false;
      wide += static_cast<double>(n) / total >= kLoadMinShare;
    }
    min_wide = std::min(min_wide, wide);
    spread_ok &= wide >= kLoadMinWorkers;
  }
  spread_ok &= callers > 0;
  const double h_random = selection_entropy(load["random"]), h_spread = selection_entropy(spread),
               h_best = selection_entropy(best);
  return {best_ok && spread_ok && h_random > h_spread,
          fmt("best single worker per caller: %s; spread plurality on best's pick with >= %zu workers "
              ">= 1%% over %zu callers: %s; entropy random %.2f > spread %.2f (best %.2f) bits",
              best_ok ? "yes" : "no", min_wide, callers, spread_ok ? "yes" : "no", h_random, h_spread,
              h_best)};
}

Outcome mobile_success() {
  auto runs = suite(scenario("mobile.ini"), {std::begin(assignment::kAllStrategies),
                                             std::end(assignment::kAllStrategies)},
                    5, {5});
  auto rows = by_strategy(aggregate(reports(runs)));
  const double recent = rows["recent"].success_rate, random = rows["random"].success_rate,
               spread = rows["spread"].success_rate, best = rows["best"].success_rate;
  std::size_t worker_errors = 0, total = 0;
  for (auto& [s, row] : rows) {
    worker_errors += row.states[static_cast<std::size_t>(FinalState::WorkerError)];
    total += row.workflows;
  }
  return {spread >= random && random >= recent && spread - recent >= kMobileGap,
          fmt("success spread %.2f, random %.2f, recent %.2f, best %.2f; gap %.2f (need %.1f); "
              "%zu of %zu workflows ended in worker errors",
              spread, random, recent, best, spread - recent, kMobileGap, worker_errors, total)};
}

// --- scripted error paths ---------------------------------------------------

std::size_t reselections(const World& w, const WorkflowId& wf, std::optional<std::uint32_t> task = {}) {
  std::size_t n = 0;
  for (const auto& e : w.telemetry().events())
    n += e.kind == TraceKind::Selected && e.detail == 1 && e.wf == wf && (!task || e.task == *task);
  return n;
}

std::size_t calling_errors(const World& w, const WorkflowId& wf) {
  std::size_t n = 0;
  for (const auto& e : w.telemetry().events())
    n += e.kind == TraceKind::ErrorSent && e.wf == wf &&
         e.detail == static_cast<std::uint8_t>(ErrorClass::WorkerCalling);
  return n;
}

void inject_fake_offer(World& w, std::uint64_t worker, const ScenarioConfig& c) {
  // a stale, far too optimistic advertisement that outlives the real ones
  w.events().schedule_at(c.offload_at_s, [&w, worker, &c] {
    for (const auto& s : c.services)
      w.node(0).core().offers().ingest(
          announce::ServiceOffer{NodeAddress(worker), s.name, s.param_count, {100, 1e6, 1e6, 1e6, {}}, 1e6},
          w.events().now());
  });
}

ScenarioConfig with_incapable(ScenarioConfig c, std::vector<std::size_t> pins) {
  c.cohorts[0].share -= static_cast<double>(pins.size());
  c.cohorts.push_back(Cohort{"incapable", static_cast<double>(pins.size()), {0.5, 128, 256, 400, {}}, pins});
  return c;
}

Outcome error_paths() {
  std::vector<std::string> failures;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  };

  // task execution error: logs and intermediate files reach the client
  {
    std::size_t failed = 0, late_failures = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      auto c = scenario("ring_jit_homogeneous.ini", seed);
      c.runtime.fault_probability = 0.3;
      World w(c);
      w.run();
      const auto wf = w.submitted().at(0);
      const auto* h = w.node(0).client().handle(wf);
      check(h && h->terminal(), "fault run did not finish");
      check(reselections(w, wf) == 0, "task execution error triggered a retry");
      if (h->status != client::HandleStatus::Failed) continue;
      ++failed;
      check(h->error && h->error->cls == ErrorClass::TaskExecution, "fault gave wrong error class");
      check(h->error_log && h->error_log->find("[task-execution]") != std::string::npos, "error log missing");
      check(h->result.has_value(), "error archive not kept");
      if (h->error->task_index >= 1) {
        ++late_failures;
        bool has_prev = false;
        for (const auto& [name, blob] : h->result->files)
          has_prev |= name.starts_with("result_" + std::to_string(h->error->task_index) + ".");
        check(has_prev, "intermediate result missing from error archive");
      }
    }
    check(failed > 0 && late_failures > 0, "no task execution failure past the first task observed");
  }

  // JiT worker calling error: one re-selection that skips the failed worker
  {
    auto c = with_incapable(scenario("ring_jit_homogeneous.ini"), {1});
    c.runtime.strategy = Strategy::Best;
    World w(c);
    inject_fake_offer(w, 2, c);
    w.run();
    const auto wf = w.submitted().at(0);
    const auto* h = w.node(0).client().handle(wf);
    check(reselections(w, wf, 0) == 1, "expected exactly one re-selection for the first task");
    check(reselections(w, wf) == calling_errors(w, wf), "not one re-selection per calling error");
    bool skipped = true, first_to_failed = false;
    for (const auto& e : w.telemetry().events()) {
      if (e.wf != wf || e.kind != TraceKind::Selected) continue;
      if (e.detail == 1) skipped &= e.peer != NodeAddress(2);
      else if (e.task == 0) first_to_failed = e.peer == NodeAddress(2);
    }
    check(first_to_failed, "fake offer was not selected first");
    check(skipped, "re-selection picked the failed worker");
    check(h && h->status == client::HandleStatus::Succeeded, "workflow did not recover after retry");
  }

  // second failure of the same task reaches the client
  {
    auto c = with_incapable(scenario("ring_jit_homogeneous.ini"), {1, 11});
    c.runtime.strategy = Strategy::Best;
    World w(c);
    inject_fake_offer(w, 2, c);
    inject_fake_offer(w, 12, c);
    w.run();
    const auto wf = w.submitted().at(0);
    const auto* h = w.node(0).client().handle(wf);
    check(reselections(w, wf) == 1 && calling_errors(w, wf) == 2, "second failure re-selected again");
    check(h && h->status == client::HandleStatus::Failed && h->error &&
              h->error->cls == ErrorClass::WorkerCalling && h->error->retried,
          "second failure not reported as a retried worker calling error");
    check(w.report().workflows.at(0).state == FinalState::WorkerError, "second failure not a worker error");
  }

  // AoT failure: straight to the client, no retry
  {
    auto c = with_incapable(scenario("ring_aot.ini"), {4});
    World w(c);
    w.run();
    const auto wf = w.submitted().at(0);
    const auto* h = w.node(0).client().handle(wf);
    check(reselections(w, wf) == 0, "AoT failure was retried");
    check(h && h->error && h->error->cls == ErrorClass::WorkerCalling && !h->error->retried,
          "AoT failure not a first-attempt worker calling error");
    bool direct = false;
    for (const auto& e : w.telemetry().events())
      if (e.wf == wf && e.kind == TraceKind::ErrorSent) direct = e.peer == NodeAddress(1) && e.node == NodeAddress(5);
    check(direct, "AoT error did not go from the worker to the client");
    check(w.report().workflows.at(0).state == FinalState::WorkerError, "AoT failure not a worker error");
  }

  // worker selection error: nobody left for the next task
  {
    auto c = scenario("ring_jit_homogeneous.ini");
    c.cohorts = {Cohort{"only", 1, {2, 1024, 4096, 1000, {}}, {6}},
                 Cohort{"incapable", 11, {0.5, 128, 256, 400, {}}, {}}};
    World w(c);
    w.run();
    const auto* h = w.node(0).client().handle(w.submitted().at(0));
    check(h && h->error && h->error->cls == ErrorClass::WorkerSelection && h->error->task_index == 1,
          "missing next worker not reported as a worker selection error");
    check(h && h->error_log && h->error_log->find("[worker-selection]") != std::string::npos,
          "worker selection error has no log");
  }

  std::string detail = failures.empty()
                           ? "task execution logs, one JiT re-selection, retried failure, AoT no-retry and "
                             "worker selection all conform"
                           : failures.front();
  if (failures.size() > 1) detail += fmt(" (+%zu more)", failures.size() - 1);
  return {failures.empty(), detail};
}

Outcome ttl_conformance() {
  std::size_t timed_out = 0, workflows = 0, late_ignored = 0;
  bool ok = true;
  for (double ttl : {15.0, 25.0, 32.0}) {
    for (auto s : assignment::kAllStrategies) {
      for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto c = scenario("ring_jit_heterogeneous.ini", seed);
        c.runtime.strategy = s;
        c.workflow_text = fmt("ttl=%.0f\n", ttl) + c.workflow_text;
        World w(c);
        w.run();
        auto r = w.report();
        ok &= r.executions_after_deadline == 0;
        ok &= r.terminal_transitions == r.workflows.size();
        for (const auto& wf : r.workflows) {
          ++workflows;
          ok &= wf.status == client::HandleStatus::TimedOut || wf.status == client::HandleStatus::Succeeded;
          if (wf.status != client::HandleStatus::TimedOut) continue;
          ++timed_out;
          ok &= wf.finished_at > wf.submitted_at + ttl;
          // a result showing up now must not flip the state
          workflow::Archive a;
          a.description = workflow::parse(c.workflow_text);
          a.description.id = wf.id;
          a.description.client = wf.id.client;
          a.description.created_at = wf.submitted_at;
          a.description.cursor = a.description.tasks.size();
          Bundle b;
          b.id = BundleId{NodeAddress(99), 1};
          b.source = NodeAddress(99);
          b.destination = wf.id.client;
          b.kind = BundleKind::ResultArchive;
          b.payload = workflow::pack(a);
          b.ttl_seconds = kInfiniteTtl;
          w.node(0).deliver(b);
          const auto* h = w.node(0).client().handle(wf.id);
          const bool still = h->status == client::HandleStatus::TimedOut;
          late_ignored += still;
          ok &= still && w.report().terminal_transitions == r.terminal_transitions;
        }
      }
    }
  }
  ok &= timed_out > 0 && late_ignored == timed_out;
  return {ok, fmt("%zu of %zu workflows timed out, 0 executions past a deadline, one terminal transition "
                  "each, %zu late results ignored",
                  timed_out, workflows, late_ignored)};
}

Outcome determinism() {
  auto c = scenario("ring_jit_heterogeneous.ini", 7);
  const bool single = report_json(run_scenario(c)) == report_json(run_scenario(c));
  auto m = scenario("mobile.ini", 3);
  const bool mobile = report_json(run_scenario(m)) == report_json(run_scenario(m));

  SuitePlan plan;
  plan.scenarios = {scenario("ring_jit_heterogeneous.ini")};
  plan.strategies = {std::begin(assignment::kAllStrategies), std::end(assignment::kAllStrategies)};
  plan.seeds = kRingSeeds;
  plan.first_seed = 1;
  auto again = expand(plan);
  run_suite(again, 1);
  const auto h1 = fnv1a(reports_json(reports(g_hetero)));
  const auto h2 = fnv1a(reports_json(reports(again)));
  return {single && mobile && h1 == h2,
          fmt("single runs identical: %s; ring suite hash %016llx vs %016llx (parallel vs serial)",
              single && mobile ? "yes" : "no", static_cast<unsigned long long>(h1),
              static_cast<unsigned long long>(h2))};
}

Outcome cleanup_completeness() {
  std::uint64_t leaks = 0, checked = 0, unreached = 0;
  for (const auto& run : g_hetero) leaks += run.report ? run.report->cleanup_leaks : 1;

  auto audit = [&](const ScenarioConfig& c) {
    World w(c);
    w.run();
    for (const auto& wf : w.submitted()) {
      const auto* h = w.node(wf.client.value() - 1).client().handle(wf);
      if (!h || !h->terminal()) continue;
      ++checked;
      for (std::size_t i = 0; i < w.size(); ++i) {
        unreached += !w.network().is_purged(i, wf);
        for (const auto& [id, b] : w.network().store(i).bundles()) leaks += b.workflow == wf;
        leaks += w.node(i).worker().holds_files(wf);
      }
    }
  };
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (const char* f : {"ring_jit_heterogeneous.ini", "ring_jit_homogeneous.ini", "ring_aot.ini"}) {
      auto c = scenario(f, seed);
      audit(c);
      c.runtime.fault_probability = 0.3;
      audit(c);
      c.runtime.fault_probability = 0.0;
      c.workflow_text = "ttl=20\n" + c.workflow_text;
      audit(c);
    }
  }
  return {leaks == 0 && unreached == 0 && checked > 0,
          fmt("%llu leftover bundles or files, %llu nodes missed by a marker, %llu terminal workflows "
              "audited plus %zu suite runs",
              static_cast<unsigned long long>(leaks), static_cast<unsigned long long>(unreached),
              static_cast<unsigned long long>(checked), g_hetero.size())};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"strategy ordering, heterogeneous ring", strategy_ordering},
      {"best and spread equivalent, homogeneous ring", homogeneous_equivalence},
      {"calibrated AoT transmission", aot_transmission},
      {"folded normal selection law", folded_normal_law},
      {"load distribution, homogeneous ring", load_distribution},
      {"mobile success-rate ordering", mobile_success},
      {"error path conformance", error_paths},
      {"TTL conformance", ttl_conformance},
      {"determinism", determinism},
      {"cleanup completeness", cleanup_completeness},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s  %2zu  %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu of %zu criteria pass\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}

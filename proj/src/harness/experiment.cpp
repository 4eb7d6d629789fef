#include "oppload/harness/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace oppload::harness {

namespace {

constexpr const char* kInputName = "input.jpg";

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(index)};
  return std::mt19937_64(seq);
}

enum StreamId : std::uint64_t { kCohorts = 1, kMobility = 2, kRuntime = 3 };

NodeAddress address_of(std::size_t index) { return NodeAddress(index + 1); }

}  // namespace

std::string_view to_string(FinalState s) {
  switch (s) {
    case FinalState::Success: return "success";
    case FinalState::WorkerError: return "worker_error";
    case FinalState::Transmission: return "transmission";
    case FinalState::Runtime: return "runtime";
    case FinalState::Execution: return "execution";
  }
  return "?";
}

std::optional<FinalState> final_state_from_string(std::string_view s) {
  for (auto f : kAllFinalStates)
    if (to_string(f) == s) return f;
  return std::nullopt;
}

TaskPhases WorkflowRecord::totals() const {
  TaskPhases t;
  for (const auto& p : tasks) {
    t.runtime_s += p.runtime_s;
    t.transmission_s += p.transmission_s;
    t.execution_s += p.execution_s;
  }
  return t;
}

WorkflowRecord account(const WorkflowId& wf, const std::vector<TraceEvent>& events,
                       std::size_t task_count, double end) {
  enum class Phase { None, Runtime, Transmission, Execution };
  WorkflowRecord rec;
  rec.id = wf;
  rec.tasks.resize(std::max<std::size_t>(task_count, 1));
  Phase phase = Phase::None;
  double since = 0.0;
  std::size_t task = 0;
  bool dropped = false;
  bool terminal = false;

  auto close = [&](double t) {
    if (phase == Phase::None) return;
    auto& p = rec.tasks[std::min(task, rec.tasks.size() - 1)];
    const double d = std::max(0.0, t - since);
    if (phase == Phase::Runtime) p.runtime_s += d;
    else if (phase == Phase::Transmission) p.transmission_s += d;
    else p.execution_s += d;
    since = t;
  };

  for (const auto& e : events) {
    if (e.wf != wf || terminal) continue;
    switch (e.kind) {
      case TraceKind::Submitted:
        phase = Phase::Runtime;
        since = rec.submitted_at = e.t;
        break;
      case TraceKind::ArchiveSent:
        close(e.t);
        phase = Phase::Transmission;
        task = e.task;
        dropped = false;
        break;
      case TraceKind::ResultSent:
      case TraceKind::ErrorSent:
        close(e.t);
        phase = Phase::Transmission;
        break;
      case TraceKind::ArchiveDelivered:
        close(e.t);
        phase = Phase::Runtime;
        task = e.task;
        break;
      case TraceKind::ResultDelivered:
      case TraceKind::ErrorDelivered:
        close(e.t);
        phase = Phase::Runtime;
        break;
      case TraceKind::ExecStart:
        close(e.t);
        phase = Phase::Execution;
        task = e.task;
        break;
      case TraceKind::ExecEnd:
        close(e.t);
        phase = Phase::Runtime;
        break;
      case TraceKind::DroppedExpired:
        dropped = true;
        break;
      case TraceKind::Terminal:
        close(e.t);
        rec.status = static_cast<client::HandleStatus>(e.detail);
        rec.finished_at = e.t;
        terminal = true;
        break;
      case TraceKind::Selected:
      case TraceKind::UnpackFailed:
        break;
    }
    if (terminal) break;
  }
  if (!terminal) {
    close(end);
    rec.finished_at = end;
  }

  if (rec.status == client::HandleStatus::Succeeded) {
    rec.state = FinalState::Success;
  } else if (rec.status == client::HandleStatus::Failed) {
    rec.state = FinalState::WorkerError;
  } else if (dropped || phase == Phase::Transmission) {
    rec.state = FinalState::Transmission;
  } else if (phase == Phase::Execution) {
    rec.state = FinalState::Execution;
  } else {
    rec.state = FinalState::Runtime;
  }
  return rec;
}

World::World(const ScenarioConfig& config) : config_(config) {
  if (auto problems = config_.validate(); !problems.empty()) throw ConfigError(std::move(problems));
  task_count_ = workflow::parse(config_.workflow_text).tasks.size();

  sim::NetworkConfig net;
  net.link = config_.link;
  net.tick_s = config_.tick_s;
  net.contacts.range_m = config_.range_m;
  if (config_.topology == Topology::Ring) net.contacts = sim::ContactModel::ring(config_.nodes);
  network_ = std::make_unique<sim::Network>(events_, net);

  const std::size_t n = config_.nodes;
  const double radius = config_.ring_spacing_m / (2.0 * std::sin(std::numbers::pi / n));
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = stream(config_.seed, kMobility, i);
    if (config_.topology == Topology::Ring) {
      const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
      network_->add_node(address_of(i),
                         sim::Walker(sim::StaticPlacement{},
                                     {radius * std::cos(a), radius * std::sin(a)}, std::move(rng)));
    } else {
      auto walker = sim::Walker::random_start(config_.waypoint, std::move(rng));
      for (double t = 0.0; t < config_.warmup_s; t += config_.tick_s) walker.step(config_.tick_s);
      network_->add_node(address_of(i), std::move(walker));
    }
  }

  // cohort placement: pinned nodes first, the rest by a seeded shuffle
  std::vector<std::size_t> workers;
  for (std::size_t i = 0; i < n; ++i)
    if (config_.clients_are_workers || i >= config_.clients) workers.push_back(i);
  auto sizes = cohort_sizes(config_, workers.size());
  std::vector<std::optional<std::size_t>> cohort(n);
  for (std::size_t c = 0; c < config_.cohorts.size(); ++c)
    for (auto i : config_.cohorts[c].pinned) cohort[i] = c;
  std::vector<std::size_t> free_nodes;
  for (auto i : workers)
    if (!cohort[i]) free_nodes.push_back(i);
  auto shuffle_rng = stream(config_.seed, kCohorts);
  std::shuffle(free_nodes.begin(), free_nodes.end(), shuffle_rng);
  std::size_t next = 0;
  for (std::size_t c = 0; c < config_.cohorts.size(); ++c) {
    const auto room = sizes[c] - std::min(sizes[c], config_.cohorts[c].pinned.size());
    for (std::size_t k = 0; k < room && next < free_nodes.size(); ++k) cohort[free_nodes[next++]] = c;
  }

  cohort_of_.resize(n);
  initial_energy_.assign(n, 0.0);
  auto runtime_config = config_.runtime;
  runtime_config.noise_seed = config_.seed;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<runtime::ServiceDefinition> services;
    announce::CapabilityVector caps;
    if (cohort[i]) {
      const auto& c = config_.cohorts[*cohort[i]];
      services = config_.services;
      caps = c.capabilities;
      cohort_of_[i] = c.name;
    } else {
      cohort_of_[i] = "client";
    }
    initial_energy_[i] = caps.energy;
    std::map<std::string, Blob> inputs;
    if (i < config_.clients && config_.input_size_bytes > 0)
      inputs.emplace(kInputName, synthetic_blob(config_.input_size_bytes));
    nodes_.push_back(std::make_unique<Node>(*network_, events_, i, telemetry_, runtime_config,
                                            stream(config_.seed, kRuntime, i), std::move(services),
                                            caps, std::move(inputs)));
  }
  network_->set_delivery_handler(
      [this](sim::NodeIndex i, const Bundle& b) { nodes_[i]->deliver(b); });
}

World::~World() = default;

void World::offload_all() {
  for (std::size_t i = 0; i < config_.clients && i < nodes_.size(); ++i)
    submitted_.push_back(nodes_[i]->client().offload(config_.workflow_text));
}

bool World::settled() const {
  if (submitted_.size() < config_.clients) return false;
  for (std::size_t i = 0; i < config_.clients; ++i)
    if (nodes_[i]->client().pending() != 0) return false;
  return true;
}

void World::run() {
  for (auto& node : nodes_) node->start();
  network_->start();
  events_.schedule_at(config_.offload_at_s, [this] { offload_all(); });
  const double step = 5.0;
  while (events_.now() < config_.duration_s) {
    events_.run_until(std::min(config_.duration_s, events_.now() + step));
    if (settled()) {
      events_.run_until(std::min(config_.duration_s, events_.now() + config_.drain_s));
      break;
    }
  }
}

ExperimentReport World::report() const {
  ExperimentReport r;
  r.scenario = config_.name;
  r.strategy = std::string(assignment::to_string(config_.runtime.strategy));
  r.seed = config_.seed;
  r.config_digest = config_.digest();
  r.clients = config_.clients;
  r.ended_at = events_.now();

  std::map<WorkflowId, std::vector<TraceEvent>> by_wf;
  std::map<WorkflowId, double> deadline;
  for (const auto& e : telemetry_.events()) {
    by_wf[e.wf].push_back(e);
    if (e.kind == TraceKind::Selected) ++r.selections[e.node][e.peer];
    if (e.kind == TraceKind::Terminal) ++r.terminal_transitions;
  }
  for (const auto& wf : submitted_) {
    const auto& node = *nodes_.at(wf.client.value() - 1);
    const auto* h = node.client().handle(wf);
    auto rec = account(wf, by_wf[wf], task_count_, r.ended_at);
    if (h && h->error) rec.error = h->error->cls;
    if (h) deadline[wf] = h->deadline();
    r.workflows.push_back(std::move(rec));
  }
  for (const auto& e : telemetry_.events())
    if (e.kind == TraceKind::ExecStart)
      if (auto it = deadline.find(e.wf); it != deadline.end() && e.t > it->second)
        ++r.executions_after_deadline;

  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& w = nodes_[i]->worker();
    if (cohort_of_[i] == "client") continue;
    r.workers.push_back(WorkerRecord{address_of(i), cohort_of_[i], initial_energy_[i], w.energy(),
                                     w.executions()});
  }

  for (const auto& wf : submitted_) {
    const auto* h = nodes_.at(wf.client.value() - 1)->client().handle(wf);
    if (!h || !h->terminal()) continue;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (!network_->is_purged(i, wf)) continue;
      for (const auto& [id, b] : network_->store(i).bundles())
        if (b.workflow && *b.workflow == wf) ++r.cleanup_leaks;
      if (nodes_[i]->worker().holds_files(wf)) ++r.cleanup_leaks;
    }
  }
  r.bundles_transferred = network_->stats().transfers_completed;
  r.transfers_aborted = network_->stats().transfers_aborted;
  return r;
}

ExperimentReport run_scenario(const ScenarioConfig& config) {
  World world(config);
  world.run();
  return world.report();
}

}  // namespace oppload::harness

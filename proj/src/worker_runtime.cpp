#include "oppload/worker_runtime.hpp"

#include <algorithm>

namespace oppload::runtime {

bool ServiceDefinition::valid() const {
  return !name.empty() && name.size() <= announce::kMaxServiceName &&
         profile.exec_seconds_mean > 0.0 && profile.exec_seconds_jitter >= 0.0 &&
         profile.energy_cost_e >= 0.0;
}

NodeCore::NodeCore(NodeAddress address, RuntimeConfig config, std::mt19937_64 rng, Environment& env)
    : address_(address),
      config_(config),
      rng_(std::move(rng)),
      env_(env),
      offers_(config.offer_expiry_s) {}

std::optional<NodeAddress> NodeCore::choose_worker(const Task& task,
                                                   const std::set<NodeAddress>& exclude) {
  if (!task.just_in_time()) return std::get<workflow::AheadOfTime>(task.worker).worker;
  auto known = offers_.lookup(task.service, env_.now());
  std::erase_if(known, [&](const announce::KnownOffer& o) {
    return o.offer.worker == address_ || exclude.count(o.offer.worker) != 0;
  });
  assignment::SelectionContext ctx{task.requirements, config_.weights, env_.position()};
  auto chosen = assignment::select(std::span<const announce::KnownOffer>(known), config_.strategy,
                                   ctx, rng_);
  if (!chosen) return std::nullopt;
  return chosen->worker;
}

void NodeCore::send_archive(BundleKind kind, NodeAddress to, const Archive& archive) {
  const double now = env_.now();
  Bundle b;
  b.id = next_bundle_id();
  b.source = address_;
  b.destination = to;
  b.kind = kind;
  b.payload = workflow::pack(archive);
  b.created_at = now;
  b.ttl_seconds = std::max(0.0, archive.description.deadline() - now);
  b.workflow = archive.description.id;
  env_.send(std::move(b));
}

void NodeCore::trace(TraceKind kind, const WorkflowId& wf, std::uint32_t task, NodeAddress peer,
                     std::uint8_t detail) {
  env_.telemetry().record(TraceEvent{env_.now(), kind, wf, task, address_, peer, detail});
}

RetryDecision decide_retry(const Task& failed_task, const WorkerError& error) {
  if (error.cls == ErrorClass::WorkerCalling && failed_task.just_in_time() && !error.retried)
    return RetryDecision::RetryOnce;
  return RetryDecision::ReportToClient;
}

Worker::Worker(NodeCore& core, std::vector<ServiceDefinition> services, CapabilityVector capabilities)
    : core_(core), caps_(capabilities) {
  for (auto& s : services) services_.emplace(s.name, std::move(s));
}

CapabilityVector Worker::live_capabilities() const {
  CapabilityVector c = caps_;
  c.position = core_.env().position();
  return c;
}

bool Worker::capable_of(const Task& task) const {
  return offers_service(task.service) && assignment::capable(caps_, task.requirements);
}

std::optional<Bundle> Worker::make_offer_bundle() {
  std::vector<announce::OfferedService> offered;
  for (const auto& [name, def] : services_) offered.push_back({name, def.param_count});
  if (offered.empty()) return std::nullopt;
  return announce::broadcast_offers(core_.address(), offered, live_capabilities(), core_.env().now(),
                                    core_.next_bundle_id(), core_.config().offer_expiry_s);
}

void Worker::start_announcing() {
  if (services_.empty()) return;
  core_.env().schedule_at(core_.env().now(), [this] { announce_tick(); });
}

void Worker::announce_tick() {
  if (auto b = make_offer_bundle()) core_.env().send(std::move(*b));
  core_.env().schedule_at(core_.env().now() + core_.config().announce_interval_s,
                          [this] { announce_tick(); });
}

void Worker::on_archive(const Bundle& bundle) {
  Archive archive;
  try {
    archive = workflow::unpack(bundle.payload);
  } catch (const workflow::UnpackError&) {
    ++unpack_failures_;
    core_.trace(TraceKind::UnpackFailed, bundle.workflow.value_or(WorkflowId{}), 0, bundle.source);
    return;
  }
  const auto& d = archive.description;
  if (d.finished()) {
    ++unpack_failures_;
    return;
  }
  const auto k = static_cast<std::uint32_t>(d.cursor);
  core_.trace(TraceKind::ArchiveDelivered, d.id, k, bundle.source);
  if (cleaned_.count(d.id)) return;
  if (d.expired(core_.env().now())) {
    core_.trace(TraceKind::DroppedExpired, d.id, k);
    return;
  }
  const Task& task = d.current();
  if (!capable_of(task)) {
    WorkerError error{ErrorClass::WorkerCalling,
                      offers_service(task.service)
                          ? "worker " + core_.address().to_string() + " is no longer capable of '" +
                                task.service + "'"
                          : "worker " + core_.address().to_string() + " does not offer '" +
                                task.service + "'",
                      k, archive.retried};
    const NodeAddress to =
        decide_retry(task, error) == RetryDecision::RetryOnce ? archive.assigner : d.client;
    core_.env().schedule_at(core_.env().now() + core_.config().preprocess_s,
                            [this, archive, error, to] { report_error(archive, error, to); });
    return;
  }
  auto& held = files_[d.id];
  for (const auto& [name, blob] : archive.files) held[name] = blob;
  queue_.push_back(Job{std::move(archive)});
  run_next();
}

void Worker::run_next() {
  if (busy_ || queue_.empty()) return;
  busy_ = true;
  Job job = std::move(queue_.front());
  queue_.pop_front();
  core_.env().schedule_at(core_.env().now() + core_.config().preprocess_s,
                          [this, job] { execute(job); });
}

void Worker::execute(Job job) {
  const auto& d = job.archive.description;
  const auto k = static_cast<std::uint32_t>(d.cursor);
  if (cleaned_.count(d.id) || d.expired(core_.env().now())) {
    if (!cleaned_.count(d.id)) core_.trace(TraceKind::DroppedExpired, d.id, k);
    busy_ = false;
    run_next();
    return;
  }
  const auto& profile = services_.at(d.current().service).profile;
  // same draws for the same workflow task whichever worker runs it
  const auto seed = core_.config().noise_seed;
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(d.id.client.value()),
                    static_cast<std::uint32_t>(d.id.client.value() >> 32), d.id.seq, k};
  std::mt19937_64 noise(seq);
  double duration = profile.exec_seconds_mean;
  if (profile.exec_seconds_jitter > 0.0) {
    std::uniform_real_distribution<double> jitter(-profile.exec_seconds_jitter,
                                                  profile.exec_seconds_jitter);
    duration = std::max(0.0, duration + jitter(noise));
  }
  bool fault = false;
  if (core_.config().fault_probability > 0.0)
    fault = std::bernoulli_distribution(core_.config().fault_probability)(noise);
  core_.trace(TraceKind::ExecStart, d.id, k);
  core_.env().schedule_at(core_.env().now() + duration,
                          [this, job, fault, duration] { complete(job, fault, duration); });
}

void Worker::complete(Job job, bool fault, double /*duration*/) {
  const auto& d = job.archive.description;
  const auto k = static_cast<std::uint32_t>(d.cursor);
  const auto& service = services_.at(d.current().service);
  core_.trace(TraceKind::ExecEnd, d.id, k);
  ++executions_;
  caps_.energy = std::max(0.0, caps_.energy - service.profile.energy_cost_e);
  busy_ = false;
  run_next();
  if (cleaned_.count(d.id)) return;

  const double post = core_.env().now() + core_.config().postprocess_s;
  if (fault) {
    WorkerError error{ErrorClass::TaskExecution,
                      "service '" + service.name + "' failed on " + core_.address().to_string() +
                          ": synthetic fault",
                      k, job.archive.retried};
    core_.env().schedule_at(post, [this, archive = job.archive, error, client = d.client] {
      report_error(archive, error, client);
    });
    return;
  }
  std::optional<std::string> result;
  if (service.profile.output_size_bytes > 0) {
    result = "result_" + std::to_string(k + 1) + "." + service.extension;
    files_[d.id][*result] = synthetic_blob(service.profile.output_size_bytes);
  }
  core_.env().schedule_at(post, [this, archive = std::move(job.archive), result] {
    forward_or_return(archive, result);
  });
}

void Worker::forward_or_return(Archive archive, std::optional<std::string> result) {
  const auto& d = archive.description;
  const auto k = static_cast<std::uint32_t>(d.cursor);
  if (cleaned_.count(d.id) || d.expired(core_.env().now())) return;

  Archive out;
  out.description = d;
  out.assigner = core_.address();
  if (result) {
    out.files[*result] = files_[d.id][*result];
  } else {
    out.files = archive.files;
  }

  if (d.last()) {
    out.description.cursor = d.tasks.size();
    core_.trace(TraceKind::ResultSent, d.id, k, d.client);
    core_.send_archive(BundleKind::ResultArchive, d.client, out);
    return;
  }

  const Task& next = d.tasks[k + 1];
  if (next.uses_result() && !result) {
    report_error(archive,
                 WorkerError{ErrorClass::TaskExecution,
                             "task " + std::to_string(k + 1) + " produced no result for task " +
                                 std::to_string(k + 2),
                             k, archive.retried},
                 d.client);
    return;
  }
  if (result) workflow::substitute_result(out.description, *result);
  out.description.cursor = k + 1;

  auto worker = core_.choose_worker(next, {});
  if (!worker) {
    report_error(out,
                 WorkerError{ErrorClass::WorkerSelection,
                             "no capable worker known for '" + next.service + "'", k + 1, false},
                 d.client);
    return;
  }
  if (next.just_in_time()) core_.trace(TraceKind::Selected, d.id, k + 1, *worker);
  core_.trace(TraceKind::ArchiveSent, d.id, k + 1, *worker);
  core_.send_archive(BundleKind::WorkflowArchive, *worker, out);
}

void Worker::on_retry_request(Archive archive, NodeAddress failed_worker) {
  const auto& d = archive.description;
  const auto k = static_cast<std::uint32_t>(d.cursor);
  if (cleaned_.count(d.id)) return;
  if (d.expired(core_.env().now())) {
    core_.trace(TraceKind::DroppedExpired, d.id, k);
    return;
  }
  core_.env().schedule_at(core_.env().now() + core_.config().postprocess_s,
                          [this, archive = std::move(archive), failed_worker] {
    const auto& desc = archive.description;
    const auto task = static_cast<std::uint32_t>(desc.cursor);
    if (cleaned_.count(desc.id) || desc.expired(core_.env().now())) return;
    Archive out = archive;
    out.error.reset();
    out.error_log.reset();
    auto worker = core_.choose_worker(desc.current(), {failed_worker});
    if (!worker) {
      report_error(out,
                   WorkerError{ErrorClass::WorkerSelection,
                               "no alternative worker for '" + desc.current().service + "' after " +
                                   failed_worker.to_string() + " failed",
                               task, true},
                   desc.client);
      return;
    }
    out.assigner = core_.address();
    out.retried = true;
    core_.trace(TraceKind::Selected, desc.id, task, *worker, 1);
    core_.trace(TraceKind::ArchiveSent, desc.id, task, *worker);
    core_.send_archive(BundleKind::WorkflowArchive, *worker, out);
  });
}

void Worker::report_error(Archive archive, WorkerError error, NodeAddress to) {
  const auto& d = archive.description;
  if (cleaned_.count(d.id)) return;
  if (auto it = files_.find(d.id); it != files_.end())
    for (const auto& [name, blob] : it->second) archive.files.emplace(name, blob);
  std::string log = "[" + std::string(to_string(error.cls)) + "] task " +
                    std::to_string(error.task_index + 1);
  if (error.task_index < d.tasks.size()) log += " (" + d.tasks[error.task_index].service + ")";
  log += " at " + core_.address().to_string() + ": " + error.message + "\n";
  archive.error_log = archive.error_log.value_or("") + log;
  archive.error = std::move(error);
  core_.trace(TraceKind::ErrorSent, d.id, archive.error->task_index, to,
              static_cast<std::uint8_t>(archive.error->cls));
  core_.send_archive(BundleKind::ErrorArchive, to, archive);
}

void Worker::on_cleanup(const WorkflowId& wf) {
  cleaned_.insert(wf);
  files_.erase(wf);
  std::erase_if(queue_, [&](const Job& j) { return j.archive.description.id == wf; });
}

}  // namespace oppload::runtime

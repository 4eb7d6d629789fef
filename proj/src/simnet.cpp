#include "oppload/simnet.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace oppload::sim {

double distance(const Position& a, const Position& b) { return std::hypot(a.x - b.x, a.y - b.y); }

double transfer_duration(const LinkModel& link, std::size_t size_bytes) {
  return link.latency_s + 8.0 * static_cast<double>(size_bytes) / link.bandwidth_bps;
}

Walker::Walker(MobilityModel model, Position start, std::mt19937_64 rng)
    : model_(model), pos_(start), target_(start), rng_(std::move(rng)) {
  if (std::holds_alternative<RandomWaypoint>(model_)) choose_leg();
}

Walker Walker::random_start(const RandomWaypoint& model, std::mt19937_64 rng) {
  std::uniform_real_distribution<double> ux(0.0, model.area_width);
  std::uniform_real_distribution<double> uy(0.0, model.area_height);
  Position start{ux(rng), uy(rng)};
  return Walker(model, start, std::move(rng));
}

void Walker::choose_leg() {
  const auto& rwp = std::get<RandomWaypoint>(model_);
  std::uniform_real_distribution<double> ux(0.0, rwp.area_width);
  std::uniform_real_distribution<double> uy(0.0, rwp.area_height);
  std::uniform_real_distribution<double> us(rwp.speed_min, rwp.speed_max);
  target_ = {ux(rng_), uy(rng_)};
  speed_ = us(rng_);
}

void Walker::step(double dt) {
  if (!std::holds_alternative<RandomWaypoint>(model_)) return;
  const auto& rwp = std::get<RandomWaypoint>(model_);
  if (pause_left_ > 0.0) {
    // Pause time left over at the end of the pause is not spent walking, so
    // displacement per step never exceeds speed * dt.
    pause_left_ -= dt;
    if (pause_left_ <= 0.0) {
      pause_left_ = 0.0;
      choose_leg();
    }
    return;
  }
  const double remaining = distance(pos_, target_);
  const double reach = speed_ * dt;
  if (reach >= remaining) {
    pos_ = target_;
    std::uniform_real_distribution<double> up(0.0, rwp.pause_max);
    pause_left_ = rwp.pause_max > 0.0 ? up(rng_) : 0.0;
    if (pause_left_ == 0.0) choose_leg();
    return;
  }
  const double f = reach / remaining;
  pos_.x += (target_.x - pos_.x) * f;
  pos_.y += (target_.y - pos_.y) * f;
  pos_.x = std::clamp(pos_.x, 0.0, rwp.area_width);
  pos_.y = std::clamp(pos_.y, 0.0, rwp.area_height);
}

ContactModel ContactModel::ring(std::size_t n) {
  ContactModel model;
  model.adjacency.emplace();
  for (std::size_t i = 0; i < n && n > 1; ++i) {
    const std::size_t j = (i + 1) % n;
    model.adjacency->insert({std::min(i, j), std::max(i, j)});
  }
  return model;
}

bool ContactModel::connected(std::size_t a, std::size_t b, const Position& pa,
                             const Position& pb) const {
  if (a == b) return false;
  if (adjacency) return adjacency->count({std::min(a, b), std::max(a, b)}) != 0;
  return distance(pa, pb) <= range_m;
}

void EventQueue::schedule_at(double t, Action action) {
  if (t < now_) t = now_;
  heap_.push(Entry{t, seq_++, std::move(action)});
}

void EventQueue::run_until(double t) {
  while (!heap_.empty() && heap_.top().t <= t) {
    Entry e = heap_.top();
    heap_.pop();
    now_ = e.t;
    ++dispatched_;
    e.action();
  }
  if (t > now_) now_ = t;
}

Network::Network(EventQueue& events, NetworkConfig config)
    : events_(events), config_(std::move(config)) {}

NodeIndex Network::add_node(NodeAddress address, Walker walker) {
  if (started_) throw std::logic_error("nodes must be added before the network starts");
  if (by_address_.count(address)) throw std::invalid_argument("duplicate node address");
  by_address_[address] = nodes_.size();
  nodes_.push_back(NodeState{address, std::move(walker), {}, {}, {}});
  return nodes_.size() - 1;
}

std::optional<NodeIndex> Network::index_of(NodeAddress address) const {
  auto it = by_address_.find(address);
  if (it == by_address_.end()) return std::nullopt;
  return it->second;
}

Network::Link& Network::link(NodeIndex a, NodeIndex b) {
  return links_[std::min(a, b) * nodes_.size() + std::max(a, b)];
}

const Network::Link& Network::link(NodeIndex a, NodeIndex b) const {
  return links_[std::min(a, b) * nodes_.size() + std::max(a, b)];
}

void Network::start() {
  if (started_) return;
  started_ = true;
  links_.assign(nodes_.size() * nodes_.size(), Link{});
  events_.schedule_at(events_.now(), [this] { tick(); });
}

bool Network::in_contact(NodeIndex a, NodeIndex b) const {
  return config_.contacts.connected(a, b, position(a), position(b));
}

bool Network::link_up(NodeIndex a, NodeIndex b) const {
  return started_ && a != b && link(a, b).up;
}

std::vector<NodeIndex> Network::neighbours(NodeIndex node) const {
  std::vector<NodeIndex> out;
  for (NodeIndex other = 0; other < nodes_.size(); ++other)
    if (link_up(node, other)) out.push_back(other);
  return out;
}

void Network::tick() {
  if (ticked_once_) {
    for (auto& n : nodes_) n.walker.step(config_.tick_s);
  }
  ticked_once_ = true;
  const std::size_t n = nodes_.size();
  std::vector<std::pair<NodeIndex, NodeIndex>> ups;
  for (NodeIndex a = 0; a < n; ++a) {
    for (NodeIndex b = a + 1; b < n; ++b) {
      const bool now_up = in_contact(a, b);
      Link& l = link(a, b);
      if (l.up && !now_up) contact_down(a, b);
      if (!l.up && now_up) ups.emplace_back(a, b);
    }
  }
  for (auto [a, b] : ups) contact_up(a, b);
  events_.schedule_after(config_.tick_s, [this] { tick(); });
}

void Network::contact_down(NodeIndex a, NodeIndex b) {
  Link& l = link(a, b);
  if (l.busy) ++stats_.transfers_aborted;
  l.up = false;
  l.busy = false;
  ++l.generation;
  l.queue.clear();
  l.queued.clear();
}

void Network::contact_up(NodeIndex a, NodeIndex b) {
  Link& l = link(a, b);
  l.up = true;
  ++stats_.contacts_up;
  // Anti-entropy: everything one side holds and the other lacks, newest
  // first, both directions sharing the link FIFO.
  std::vector<std::pair<const Bundle*, NodeIndex>> missing;
  const double now = events_.now();
  for (auto [from, to] : {std::pair{a, b}, std::pair{b, a}}) {
    nodes_[from].store.prune_expired(now);
    for (const auto& [id, bundle] : nodes_[from].store.bundles())
      if (wants(to, bundle)) missing.emplace_back(&bundle, to);
  }
  std::stable_sort(missing.begin(), missing.end(), [](const auto& x, const auto& y) {
    if (x.first->created_at != y.first->created_at)
      return x.first->created_at > y.first->created_at;
    return x.first->id < y.first->id;
  });
  for (auto [bundle, to] : missing) enqueue(to == a ? b : a, to, *bundle);
  pump(a, b);
}

bool Network::wants(NodeIndex receiver, const Bundle& bundle) const {
  const NodeState& n = nodes_[receiver];
  if (n.store.contains(bundle.id)) return false;
  if (is_expired(bundle, events_.now())) return false;
  if (bundle.workflow && n.purged.count(*bundle.workflow)) return false;
  return true;
}

void Network::enqueue(NodeIndex from, NodeIndex to, const Bundle& bundle) {
  Link& l = link(from, to);
  if (!l.up) return;
  if (!l.queued.insert({to, bundle.id}).second) return;
  l.queue.push_back(Transfer{from, to, bundle.id});
}

void Network::pump(NodeIndex a, NodeIndex b) {
  Link& l = link(a, b);
  while (l.up && !l.busy && !l.queue.empty()) {
    Transfer t = l.queue.front();
    l.queue.pop_front();
    l.queued.erase({t.to, t.bundle});
    const Bundle* held = nodes_[t.from].store.find(t.bundle);
    if (held == nullptr || !wants(t.to, *held)) continue;
    l.busy = true;
    const double duration = transfer_duration(config_.link, held->size_bytes());
    events_.schedule_after(duration, [this, a, b, gen = l.generation, copy = *held, t] {
      Link& cur = link(a, b);
      if (cur.generation != gen) return;  // contact lost mid-transfer
      cur.busy = false;
      ++stats_.transfers_completed;
      stats_.bytes_transferred += copy.size_bytes();
      if (wants(t.to, copy)) accept(t.to, copy);
      pump(a, b);
    });
  }
}

void Network::originate(NodeIndex node, Bundle bundle) { accept(node, std::move(bundle)); }

void Network::accept(NodeIndex node, Bundle bundle) {
  NodeState& n = nodes_[node];
  if (bundle.workflow && n.purged.count(*bundle.workflow)) return;
  if (!n.store.insert(bundle)) return;
  for (NodeIndex other : neighbours(node)) {
    if (wants(other, bundle)) {
      enqueue(node, other, bundle);
      pump(node, other);
    }
  }
  if (!deliver_ || is_expired(bundle, events_.now())) return;
  const bool for_me = bundle.destination ? *bundle.destination == n.address
                                         : bundle.source != n.address;
  if (for_me && n.delivered.insert(bundle.id).second) deliver_(node, bundle);
}

void Network::purge_workflow(NodeIndex node, const WorkflowId& wf) {
  NodeState& n = nodes_[node];
  n.purged.insert(wf);
  n.store.remove_if([&](const Bundle& b) { return b.workflow && *b.workflow == wf; });
}

bool Network::is_purged(NodeIndex node, const WorkflowId& wf) const {
  return nodes_[node].purged.count(wf) != 0;
}

}  // namespace oppload::sim

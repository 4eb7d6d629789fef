#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <variant>
#include <vector>

#include "oppload/bundle_store.hpp"

namespace oppload::sim {

struct Position {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Position&, const Position&) = default;
};

double distance(const Position& a, const Position& b);

struct LinkModel {
  double bandwidth_bps = 54e6;
  double latency_s = 0.020;
};

/// latency + 8 * size / bandwidth.
double transfer_duration(const LinkModel& link, std::size_t size_bytes);

struct StaticPlacement {};

struct RandomWaypoint {
  double area_width = 1304.0;
  double area_height = 1304.0;
  double speed_min = 0.8;
  double speed_max = 1.9;
  double pause_max = 60.0;
};

using MobilityModel = std::variant<StaticPlacement, RandomWaypoint>;

/// Position state of one node under a mobility model.
class Walker {
 public:
  Walker(MobilityModel model, Position start, std::mt19937_64 rng);

  /// Random-waypoint walker starting at a uniform position in the area.
  static Walker random_start(const RandomWaypoint& model, std::mt19937_64 rng);

  const Position& position() const { return pos_; }
  void step(double dt);

 private:
  void choose_leg();

  MobilityModel model_;
  Position pos_;
  Position target_;
  double speed_ = 0.0;
  double pause_left_ = 0.0;
  std::mt19937_64 rng_;
};

/// Disc-range contacts, or an explicit symmetric adjacency for static
/// topologies (geometry is then ignored).
struct ContactModel {
  double range_m = 40.0;
  std::optional<std::set<std::pair<std::size_t, std::size_t>>> adjacency;

  static ContactModel ring(std::size_t n);
  bool connected(std::size_t a, std::size_t b, const Position& pa, const Position& pb) const;
};

/// Time-ordered dispatch; simultaneous events run in scheduling order.
class EventQueue {
 public:
  using Action = std::function<void()>;

  double now() const { return now_; }
  void schedule_at(double t, Action action);
  void schedule_after(double delay, Action action) { schedule_at(now_ + delay, std::move(action)); }

  /// Dispatches every event with time <= t, then sets the clock to t.
  void run_until(double t);
  std::size_t pending() const { return heap_.size(); }
  std::uint64_t dispatched() const { return dispatched_; }

 private:
  struct Entry {
    double t;
    std::uint64_t seq;
    Action action;
  };
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      return a.t != b.t ? a.t > b.t : a.seq > b.seq;
    }
  };
  std::priority_queue<Entry, std::vector<Entry>, Later> heap_;
  double now_ = 0.0;
  std::uint64_t seq_ = 0;
  std::uint64_t dispatched_ = 0;
};

using NodeIndex = std::size_t;

struct NetworkConfig {
  LinkModel link;
  ContactModel contacts;
  double tick_s = 0.5;
};

struct NetworkStats {
  std::uint64_t transfers_completed = 0;
  std::uint64_t transfers_aborted = 0;
  std::uint64_t bytes_transferred = 0;
  std::uint64_t contacts_up = 0;
};

/// Opportunistic network with epidemic bundle exchange.
///
/// Contacts are re-evaluated every tick. A contact coming up triggers a full
/// anti-entropy sync of the two stores; while it stays up, bundles a node
/// gains are pushed to the peer immediately. All transfers on a link share
/// one FIFO, and a contact loss aborts whatever is queued or in flight.
class Network {
 public:
  using DeliveryHandler = std::function<void(NodeIndex, const Bundle&)>;

  Network(EventQueue& events, NetworkConfig config);

  NodeIndex add_node(NodeAddress address, Walker walker);
  void set_delivery_handler(DeliveryHandler handler) { deliver_ = std::move(handler); }

  /// Schedules the recurring tick. Call once after adding nodes.
  void start();

  /// Puts a locally created bundle into the node's store and spreads it.
  void originate(NodeIndex node, Bundle bundle);

  /// Drops every bundle tagged with `wf` at `node` and refuses new ones.
  void purge_workflow(NodeIndex node, const WorkflowId& wf);
  bool is_purged(NodeIndex node, const WorkflowId& wf) const;

  bool in_contact(NodeIndex a, NodeIndex b) const;
  bool link_up(NodeIndex a, NodeIndex b) const;
  std::vector<NodeIndex> neighbours(NodeIndex node) const;

  std::size_t size() const { return nodes_.size(); }
  NodeAddress address(NodeIndex node) const { return nodes_[node].address; }
  std::optional<NodeIndex> index_of(NodeAddress address) const;
  const Position& position(NodeIndex node) const { return nodes_[node].walker.position(); }
  BundleStore& store(NodeIndex node) { return nodes_[node].store; }
  const BundleStore& store(NodeIndex node) const { return nodes_[node].store; }

  double now() const { return events_.now(); }
  const NetworkConfig& config() const { return config_; }
  const NetworkStats& stats() const { return stats_; }

 private:
  struct NodeState {
    NodeAddress address;
    Walker walker;
    BundleStore store;
    std::set<BundleId> delivered;
    std::set<WorkflowId> purged;
  };

  struct Transfer {
    NodeIndex from;
    NodeIndex to;
    BundleId bundle;
  };

  struct Link {
    bool up = false;
    bool busy = false;
    std::uint64_t generation = 0;
    std::deque<Transfer> queue;
    std::set<std::pair<NodeIndex, BundleId>> queued;  // (receiver, bundle)
  };

  Link& link(NodeIndex a, NodeIndex b);
  const Link& link(NodeIndex a, NodeIndex b) const;

  void tick();
  void contact_up(NodeIndex a, NodeIndex b);
  void contact_down(NodeIndex a, NodeIndex b);
  bool wants(NodeIndex receiver, const Bundle& bundle) const;
  void enqueue(NodeIndex from, NodeIndex to, const Bundle& bundle);
  void pump(NodeIndex a, NodeIndex b);
  void accept(NodeIndex node, Bundle bundle);

  EventQueue& events_;
  NetworkConfig config_;
  std::vector<NodeState> nodes_;
  std::vector<Link> links_;
  std::map<NodeAddress, NodeIndex> by_address_;
  DeliveryHandler deliver_;
  NetworkStats stats_;
  bool started_ = false;
  bool ticked_once_ = false;
};

}  // namespace oppload::sim

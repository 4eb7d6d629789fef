#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace oppload {

using Bytes = std::vector<std::uint8_t>;

/// Immutable, shared byte buffer. Copies of a Blob share storage.
using Blob = std::shared_ptr<const Bytes>;

Blob make_blob(Bytes bytes);

/// Deterministic filler content of the given size. Buffers are cached and
/// shared, so synthetic files of equal size cost one allocation.
Blob synthetic_blob(std::size_t size);

/// 64-bit node identity. Rendered as 16 lowercase hex characters.
class NodeAddress {
 public:
  constexpr NodeAddress() = default;
  constexpr explicit NodeAddress(std::uint64_t id) : id_(id) {}

  constexpr std::uint64_t value() const { return id_; }
  std::string to_string() const;

  /// Accepts exactly 16 hex characters.
  static std::optional<NodeAddress> parse(std::string_view text);

  friend constexpr auto operator<=>(NodeAddress, NodeAddress) = default;

 private:
  std::uint64_t id_ = 0;
};

/// Identifies one workflow across the network: issuing client plus a
/// per-client sequence number.
struct WorkflowId {
  NodeAddress client;
  std::uint32_t seq = 0;

  std::string to_string() const;
  static std::optional<WorkflowId> parse(std::string_view text);

  friend auto operator<=>(const WorkflowId&, const WorkflowId&) = default;
};

/// (source, per-source counter): collision-free without coordination.
struct BundleId {
  NodeAddress source;
  std::uint64_t seq = 0;

  std::string to_string() const;
  friend auto operator<=>(const BundleId&, const BundleId&) = default;
};

enum class BundleKind : std::uint8_t {
  Offer,
  WorkflowArchive,
  ResultArchive,
  ErrorArchive,
  CleanupMarker,
};

std::string_view to_string(BundleKind kind);

/// Byte sequence made of shared segments. Concatenation never copies the
/// segments, which keeps multi-megabyte archive payloads cheap to replicate.
class Payload {
 public:
  Payload() = default;
  explicit Payload(Bytes bytes);
  explicit Payload(Blob blob);

  void append(Blob blob);
  void append(Bytes bytes);

  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  const std::vector<Blob>& segments() const { return segments_; }

  Bytes flatten() const;

  friend bool operator==(const Payload& a, const Payload& b);

 private:
  std::vector<Blob> segments_;
  std::size_t size_ = 0;
};

constexpr double kInfiniteTtl = std::numeric_limits<double>::infinity();

struct Bundle {
  BundleId id;
  NodeAddress source;
  std::optional<NodeAddress> destination;  // empty: broadcast
  BundleKind kind = BundleKind::Offer;
  Payload payload;
  double created_at = 0.0;
  double ttl_seconds = kInfiniteTtl;
  /// Workflow this bundle belongs to; cleanup removes everything tagged.
  std::optional<WorkflowId> workflow;

  std::size_t size_bytes() const { return payload.size(); }
};

/// True iff now > created_at + ttl. An infinite ttl never expires.
bool is_expired(const Bundle& bundle, double now);

/// Per-node bundle storage. Expired bundles stay in storage until pruned but
/// are never handed out by fetch().
class BundleStore {
 public:
  /// Returns false (and changes nothing) if the id is already present.
  bool insert(Bundle bundle);

  /// The bundle if present and not expired at `now`. Prunes expired entries.
  std::optional<Bundle> fetch(const BundleId& id, double now);

  bool contains(const BundleId& id) const { return bundles_.count(id) != 0; }
  const Bundle* find(const BundleId& id) const;

  bool remove(const BundleId& id);

  /// Removes every bundle satisfying `pred`; returns the count removed.
  std::size_t remove_if(const std::function<bool(const Bundle&)>& pred);

  std::size_t prune_expired(double now);

  std::size_t size() const { return bundles_.size(); }
  bool empty() const { return bundles_.empty(); }

  /// Ordered view over everything stored, expired or not.
  const std::map<BundleId, Bundle>& bundles() const { return bundles_; }

 private:
  std::map<BundleId, Bundle> bundles_;
};

}  // namespace oppload

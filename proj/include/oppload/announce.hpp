#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oppload/bundle_store.hpp"
#include "oppload/simnet.hpp"

namespace oppload::announce {

using sim::Position;

struct CapabilityVector {
  double cpu = 0.0;     // abstract compute units
  double memory = 0.0;  // MB free
  double disk = 0.0;    // MB free
  double energy = 0.0;  // virtual energy units
  Position position;

  bool valid() const;
  friend bool operator==(const CapabilityVector&, const CapabilityVector&) = default;
};

struct OfferedService {
  std::string name;
  std::uint16_t param_count = 0;
};

struct ServiceOffer {
  NodeAddress worker;
  std::string service_name;
  std::uint16_t param_count = 0;
  CapabilityVector capabilities;
  double issued_at = 0.0;

  friend bool operator==(const ServiceOffer&, const ServiceOffer&) = default;
};

/// An offer as held in a node's database, with its local arrival time.
struct KnownOffer {
  ServiceOffer offer;
  double received_at = 0.0;
};

// Offer bundle wire layout, little endian:
//   header (64 bytes): worker u64 | issued_at f64 | cpu f64 | memory f64 |
//                      disk f64 | energy f64 | x f64 | y f64
//   record (32 bytes each): name (28 bytes, NUL padded) | param_count u16 |
//                           layout version u16
inline constexpr std::size_t kOfferHeaderBytes = 64;
inline constexpr std::size_t kOfferRecordBytes = 32;
inline constexpr std::size_t kMaxServiceName = 28;
inline constexpr std::uint16_t kOfferWireVersion = 1;

Bytes encode_offers(NodeAddress worker, std::span<const OfferedService> services,
                    const CapabilityVector& caps, double issued_at);

/// Empty optional on any malformed input.
std::optional<std::vector<ServiceOffer>> decode_offers(const Bytes& payload);

/// One broadcast bundle carrying every service of the worker together with a
/// single capability snapshot. No bundle when the worker offers nothing.
std::optional<Bundle> broadcast_offers(NodeAddress worker, std::span<const OfferedService> services,
                                       const CapabilityVector& caps, double now, BundleId id,
                                       double offer_expiry_s);

/// Latest offer per (worker, service), as seen by one node.
class OfferDatabase {
 public:
  explicit OfferDatabase(double offer_expiry_s = 120.0) : expiry_(offer_expiry_s) {}

  /// Folds an Offer bundle into the database. Returns false and counts the
  /// bundle as malformed when it cannot be decoded.
  bool ingest(const Bundle& offer_bundle, double now);

  /// Folds a single decoded offer; an older issued_at never replaces a newer.
  void ingest(const ServiceOffer& offer, double now);

  /// Every non-expired offer for the service, ordered by worker address.
  std::vector<KnownOffer> lookup(const std::string& service_name, double now) const;

  std::size_t prune(double now);
  std::size_t size() const { return entries_.size(); }
  std::uint64_t malformed() const { return malformed_; }
  double expiry() const { return expiry_; }

 private:
  bool fresh(const ServiceOffer& offer, double now) const {
    return now - offer.issued_at <= expiry_;
  }

  double expiry_;
  std::map<std::pair<std::string, NodeAddress>, KnownOffer> entries_;
  std::uint64_t malformed_ = 0;
};

}  // namespace oppload::announce

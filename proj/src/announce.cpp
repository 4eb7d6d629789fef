#include "oppload/announce.hpp"

#include <bit>
#include <cmath>
#include <cstring>

namespace oppload::announce {

namespace {

void put_u64(Bytes& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put_f64(Bytes& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}
std::uint16_t get_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
double get_f64(const std::uint8_t* p) { return std::bit_cast<double>(get_u64(p)); }

}  // namespace

bool CapabilityVector::valid() const {
  for (double v : {cpu, memory, disk, energy})
    if (!std::isfinite(v) || v < 0.0) return false;
  return std::isfinite(position.x) && std::isfinite(position.y);
}

Bytes encode_offers(NodeAddress worker, std::span<const OfferedService> services,
                    const CapabilityVector& caps, double issued_at) {
  Bytes out;
  out.reserve(kOfferHeaderBytes + kOfferRecordBytes * services.size());
  put_u64(out, worker.value());
  put_f64(out, issued_at);
  for (double v : {caps.cpu, caps.memory, caps.disk, caps.energy, caps.position.x, caps.position.y})
    put_f64(out, v);
  for (const auto& s : services) {
    std::uint8_t name[kMaxServiceName] = {};
    std::memcpy(name, s.name.data(), std::min(s.name.size(), kMaxServiceName));
    out.insert(out.end(), name, name + kMaxServiceName);
    put_u16(out, s.param_count);
    put_u16(out, kOfferWireVersion);
  }
  return out;
}

std::optional<std::vector<ServiceOffer>> decode_offers(const Bytes& payload) {
  if (payload.size() < kOfferHeaderBytes + kOfferRecordBytes) return std::nullopt;
  if ((payload.size() - kOfferHeaderBytes) % kOfferRecordBytes != 0) return std::nullopt;
  const std::uint8_t* p = payload.data();
  const NodeAddress worker(get_u64(p));
  const double issued_at = get_f64(p + 8);
  CapabilityVector caps{get_f64(p + 16), get_f64(p + 24), get_f64(p + 32), get_f64(p + 40),
                        Position{get_f64(p + 48), get_f64(p + 56)}};
  if (!caps.valid() || !std::isfinite(issued_at)) return std::nullopt;

  std::vector<ServiceOffer> offers;
  for (std::size_t off = kOfferHeaderBytes; off < payload.size(); off += kOfferRecordBytes) {
    const auto* rec = p + off;
    if (get_u16(rec + kMaxServiceName + 2) != kOfferWireVersion) return std::nullopt;
    const auto* end = static_cast<const std::uint8_t*>(std::memchr(rec, 0, kMaxServiceName));
    const std::size_t len = end ? static_cast<std::size_t>(end - rec) : kMaxServiceName;
    if (len == 0) return std::nullopt;
    offers.push_back(ServiceOffer{worker, std::string(reinterpret_cast<const char*>(rec), len),
                                  get_u16(rec + kMaxServiceName), caps, issued_at});
  }
  return offers;
}

std::optional<Bundle> broadcast_offers(NodeAddress worker, std::span<const OfferedService> services,
                                       const CapabilityVector& caps, double now, BundleId id,
                                       double offer_expiry_s) {
  if (services.empty()) return std::nullopt;
  Bundle b;
  b.id = id;
  b.source = worker;
  b.kind = BundleKind::Offer;
  b.payload = Payload(encode_offers(worker, services, caps, now));
  b.created_at = now;
  b.ttl_seconds = offer_expiry_s;
  return b;
}

bool OfferDatabase::ingest(const Bundle& offer_bundle, double now) {
  if (offer_bundle.kind != BundleKind::Offer) {
    ++malformed_;
    return false;
  }
  auto offers = decode_offers(offer_bundle.payload.flatten());
  if (!offers) {
    ++malformed_;
    return false;
  }
  for (const auto& o : *offers) ingest(o, now);
  return true;
}

void OfferDatabase::ingest(const ServiceOffer& offer, double now) {
  auto key = std::pair{offer.service_name, offer.worker};
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    entries_.emplace(std::move(key), KnownOffer{offer, now});
  } else if (offer.issued_at > it->second.offer.issued_at) {
    it->second = KnownOffer{offer, now};
  }
}

std::vector<KnownOffer> OfferDatabase::lookup(const std::string& service_name, double now) const {
  std::vector<KnownOffer> out;
  auto it = entries_.lower_bound({service_name, NodeAddress{}});
  for (; it != entries_.end() && it->first.first == service_name; ++it)
    if (fresh(it->second.offer, now)) out.push_back(it->second);
  return out;
}

std::size_t OfferDatabase::prune(double now) {
  return std::erase_if(entries_, [&](const auto& kv) { return !fresh(kv.second.offer, now); });
}

}  // namespace oppload::announce

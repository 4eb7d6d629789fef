#include "oppload/bundle_store.hpp"

#include <charconv>
#include <cstdio>
#include <mutex>
#include <unordered_map>

namespace oppload {

Blob make_blob(Bytes bytes) { return std::make_shared<const Bytes>(std::move(bytes)); }

Blob synthetic_blob(std::size_t size) {
  static std::mutex mutex;
  static std::unordered_map<std::size_t, Blob> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(size);
  if (it != cache.end()) return it->second;
  Bytes bytes(size);
  std::uint32_t state = 0x9e3779b9u ^ static_cast<std::uint32_t>(size);
  for (auto& b : bytes) {
    state = state * 1664525u + 1013904223u;
    b = static_cast<std::uint8_t>(state >> 24);
  }
  auto blob = make_blob(std::move(bytes));
  cache.emplace(size, blob);
  return blob;
}

std::string NodeAddress::to_string() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(id_));
  return buf;
}

std::optional<NodeAddress> NodeAddress::parse(std::string_view text) {
  if (text.size() != 16) return std::nullopt;
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value, 16);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return NodeAddress(value);
}

std::string WorkflowId::to_string() const {
  return "wf-" + client.to_string() + "-" + std::to_string(seq);
}

std::optional<WorkflowId> WorkflowId::parse(std::string_view text) {
  if (!text.starts_with("wf-") || text.size() < 3 + 16 + 2) return std::nullopt;
  auto client = NodeAddress::parse(text.substr(3, 16));
  if (!client || text[19] != '-') return std::nullopt;
  auto rest = text.substr(20);
  std::uint32_t seq = 0;
  auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), seq);
  if (ec != std::errc{} || ptr != rest.data() + rest.size()) return std::nullopt;
  return WorkflowId{*client, seq};
}

std::string BundleId::to_string() const {
  return source.to_string() + ":" + std::to_string(seq);
}

std::string_view to_string(BundleKind kind) {
  switch (kind) {
    case BundleKind::Offer: return "offer";
    case BundleKind::WorkflowArchive: return "workflow-archive";
    case BundleKind::ResultArchive: return "result-archive";
    case BundleKind::ErrorArchive: return "error-archive";
    case BundleKind::CleanupMarker: return "cleanup-marker";
  }
  return "unknown";
}

Payload::Payload(Bytes bytes) { append(std::move(bytes)); }
Payload::Payload(Blob blob) { append(std::move(blob)); }

void Payload::append(Blob blob) {
  if (!blob || blob->empty()) return;
  size_ += blob->size();
  segments_.push_back(std::move(blob));
}

void Payload::append(Bytes bytes) { append(make_blob(std::move(bytes))); }

Bytes Payload::flatten() const {
  Bytes out;
  out.reserve(size_);
  for (const auto& s : segments_) out.insert(out.end(), s->begin(), s->end());
  return out;
}

bool operator==(const Payload& a, const Payload& b) {
  if (a.size_ != b.size_) return false;
  if (a.segments_.size() == b.segments_.size()) {
    bool same = true;
    for (std::size_t i = 0; i < a.segments_.size() && same; ++i)
      same = a.segments_[i] == b.segments_[i];
    if (same) return true;
  }
  return a.flatten() == b.flatten();
}

bool is_expired(const Bundle& bundle, double now) {
  return now > bundle.created_at + bundle.ttl_seconds;
}

bool BundleStore::insert(Bundle bundle) {
  auto id = bundle.id;
  return bundles_.emplace(id, std::move(bundle)).second;
}

std::optional<Bundle> BundleStore::fetch(const BundleId& id, double now) {
  prune_expired(now);
  auto it = bundles_.find(id);
  if (it == bundles_.end()) return std::nullopt;
  return it->second;
}

const Bundle* BundleStore::find(const BundleId& id) const {
  auto it = bundles_.find(id);
  return it == bundles_.end() ? nullptr : &it->second;
}

bool BundleStore::remove(const BundleId& id) { return bundles_.erase(id) != 0; }

std::size_t BundleStore::remove_if(const std::function<bool(const Bundle&)>& pred) {
  return std::erase_if(bundles_, [&](const auto& kv) { return pred(kv.second); });
}

std::size_t BundleStore::prune_expired(double now) {
  return remove_if([now](const Bundle& b) { return is_expired(b, now); });
}

}  // namespace oppload

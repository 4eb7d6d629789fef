#include <gtest/gtest.h>

#include <random>

#include "oppload/bundle_store.hpp"

using namespace oppload;

namespace {

Bundle make(std::uint64_t seq, double created = 0.0, double ttl = kInfiniteTtl) {
  Bundle b;
  b.id = BundleId{NodeAddress(1), seq};
  b.source = NodeAddress(1);
  b.kind = BundleKind::WorkflowArchive;
  b.payload = Payload(Bytes{1, 2, 3});
  b.created_at = created;
  b.ttl_seconds = ttl;
  return b;
}

}  // namespace

TEST(BundleStore, InsertThenFetch) {
  BundleStore s;
  ASSERT_TRUE(s.insert(make(1)));
  auto got = s.fetch(make(1).id, 5.0);
  ASSERT_TRUE(got);
  EXPECT_EQ(got->id, make(1).id);
  EXPECT_EQ(got->payload, make(1).payload);
  EXPECT_EQ(got->size_bytes(), 3u);
}

TEST(BundleStore, DuplicateInsertIsNoop) {
  BundleStore s;
  EXPECT_TRUE(s.insert(make(1)));
  EXPECT_FALSE(s.insert(make(1)));
  EXPECT_EQ(s.size(), 1u);
}

TEST(BundleStore, ZeroTtlNotDeliveredLater) {
  BundleStore s;
  s.insert(make(1, 0.0, 0.0));
  EXPECT_TRUE(s.fetch(make(1).id, 0.0));
  EXPECT_FALSE(s.fetch(make(1).id, 0.1));
}

TEST(BundleStore, ExpiryBoundary) {
  EXPECT_FALSE(is_expired(make(1, 0.0, 120.0), 119.0));
  EXPECT_FALSE(is_expired(make(1, 0.0, 120.0), 120.0));
  EXPECT_TRUE(is_expired(make(1, 0.0, 120.0), 121.0));
  EXPECT_FALSE(is_expired(make(1, 0.0, kInfiniteTtl), 1e300));
}

TEST(BundleStore, RemoveReportsPresence) {
  BundleStore s;
  s.insert(make(1));
  EXPECT_TRUE(s.remove(make(1).id));
  EXPECT_FALSE(s.contains(make(1).id));
  EXPECT_FALSE(s.remove(make(1).id));
  EXPECT_TRUE(s.insert(make(1)));
  EXPECT_TRUE(s.contains(make(1).id));
}

TEST(BundleStore, ExpiredStaysUntilPruned) {
  BundleStore s;
  s.insert(make(1, 0.0, 10.0));
  s.insert(make(2, 0.0, 100.0));
  EXPECT_EQ(s.size(), 2u);
  EXPECT_EQ(s.prune_expired(50.0), 1u);
  EXPECT_EQ(s.size(), 1u);
  EXPECT_TRUE(s.contains(make(2).id));
}

TEST(BundleStore, RemoveIfByWorkflow) {
  BundleStore s;
  const WorkflowId wf{NodeAddress(1), 7};
  for (std::uint64_t i = 1; i <= 3; ++i) {
    auto b = make(i);
    b.workflow = wf;
    s.insert(b);
  }
  s.insert(make(9));
  EXPECT_EQ(s.remove_if([&](const Bundle& b) { return b.workflow == wf; }), 3u);
  EXPECT_EQ(s.size(), 1u);
}

TEST(BundleStore, HistoryProperty) {
  std::mt19937_64 rng(42);
  for (int round = 0; round < 50; ++round) {
    BundleStore s;
    std::set<std::uint64_t> model;
    for (int op = 0; op < 200; ++op) {
      const std::uint64_t id = rng() % 16;
      if (rng() % 2) {
        EXPECT_EQ(s.insert(make(id)), model.insert(id).second);
      } else {
        EXPECT_EQ(s.remove(make(id).id), model.erase(id) == 1);
      }
    }
    for (std::uint64_t id = 0; id < 16; ++id)
      EXPECT_EQ(s.fetch(make(id).id, 0.0).has_value(), model.count(id) == 1);
  }
}

TEST(Addresses, RoundTrip) {
  NodeAddress a(0xb);
  EXPECT_EQ(a.to_string(), "000000000000000b");
  EXPECT_EQ(NodeAddress::parse("000000000000000b"), a);
  EXPECT_FALSE(NodeAddress::parse("b"));
  EXPECT_FALSE(NodeAddress::parse("00000000000000zz"));
  WorkflowId wf{a, 12};
  EXPECT_EQ(WorkflowId::parse(wf.to_string()), wf);
  EXPECT_FALSE(WorkflowId::parse("wf-nope"));
}

TEST(Payload, SegmentsCompareByContent) {
  Payload a;
  a.append(Bytes{1, 2});
  a.append(Bytes{3});
  Payload b(Bytes{1, 2, 3});
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.flatten(), (Bytes{1, 2, 3}));
  EXPECT_EQ(synthetic_blob(4096)->size(), 4096u);
  EXPECT_EQ(synthetic_blob(4096), synthetic_blob(4096));
}

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "oppload/workflow.hpp"
#include "support.hpp"

using namespace oppload;
using namespace oppload::workflow;

namespace {

std::string read(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string parse_error(std::string_view text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Parse, SingleTask) {
  auto d = parse("any grayscale input.img");
  ASSERT_EQ(d.tasks.size(), 1u);
  EXPECT_TRUE(d.tasks[0].just_in_time());
  EXPECT_EQ(d.tasks[0].service, "grayscale");
  EXPECT_EQ(d.tasks[0].params, std::vector<std::string>{"input.img"});
  EXPECT_TRUE(d.tasks[0].requirements.empty());
  EXPECT_EQ(d.cursor, 0u);
  EXPECT_DOUBLE_EQ(d.ttl_seconds, kDefaultTtl);
}

TEST(Parse, FiveTaskChain) {
  auto d = parse(read(oppload::testing::scenario_dir() / "face_jit.wf"));
  ASSERT_EQ(d.tasks.size(), 5u);
  EXPECT_FALSE(d.tasks[0].uses_result());
  for (std::size_t i = 1; i < 5; ++i) EXPECT_TRUE(d.tasks[i].uses_result());
  EXPECT_DOUBLE_EQ(d.tasks[4].requirements.at(Metric::Distance), 100.0);
  EXPECT_DOUBLE_EQ(d.tasks[0].requirements.at(Metric::Energy), 20.0);
}

TEST(Parse, AheadOfTimeAddresses) {
  auto d = parse(read(oppload::testing::scenario_dir() / "face_aot_ring.wf"));
  ASSERT_EQ(d.tasks.size(), 5u);
  EXPECT_EQ(std::get<AheadOfTime>(d.tasks[4].worker).worker, NodeAddress(0xb));
}

TEST(Parse, TtlHeaderAndComments) {
  auto d = parse("# hi\nttl=300\n\nany a x [cpu=1.5]\n");
  EXPECT_DOUBLE_EQ(d.ttl_seconds, 300.0);
  EXPECT_DOUBLE_EQ(d.tasks[0].requirements.at(Metric::Cpu), 1.5);
}

TEST(Parse, Errors) {
  EXPECT_EQ(parse_error("# nothing\n"), "workflow must include at least one task");
  EXPECT_EQ(parse_error("any a x\nany b ##result## ##result##"),
            "line 2: the result placeholder is allowed only once per task");
  EXPECT_EQ(parse_error("any a ##result##"), "line 1: the first task cannot take a previous result");
  EXPECT_EQ(parse_error("12345 a x"), "line 1: malformed worker address '12345'");
  EXPECT_EQ(parse_error("foo=1\nany a x"), "line 1: unknown directive 'foo'");
  EXPECT_EQ(parse_error("any a x [gpu=1]"), "line 1: unknown requirement metric 'gpu'");
  EXPECT_EQ(parse_error("any a x [cpu=-1]"), "line 1: requirement 'cpu' must be a positive number");
  EXPECT_EQ(parse_error("any a x\nttl=5"), "line 2: ttl must precede the first task");
  EXPECT_EQ(parse_error("any"), "line 1: missing service name");
}

TEST(Parse, FormatRoundTrip) {
  auto d = parse(read(oppload::testing::scenario_dir() / "face_jit.wf"));
  auto again = parse(format(d));
  EXPECT_EQ(again.tasks, d.tasks);
  EXPECT_EQ(again.ttl_seconds, d.ttl_seconds);
}

TEST(Substitute, ReplacesOnce) {
  auto d = parse("any a x\nany b ##result## --fast\nany c y");
  EXPECT_TRUE(substitute_result(d, "r1.img"));
  EXPECT_EQ(d.tasks[1].params, (std::vector<std::string>{"r1.img", "--fast"}));
  d.cursor = 1;
  EXPECT_FALSE(substitute_result(d, "r2.img"));
  EXPECT_EQ(d.tasks[2].params, std::vector<std::string>{"y"});
  d.cursor = 2;
  EXPECT_FALSE(substitute_result(d, "r3.img"));
}

namespace {

Archive sample() {
  Archive a;
  a.description = parse("ttl=60\nany a in.img [cpu=1]\n000000000000000c b ##result##");
  a.description.id = WorkflowId{NodeAddress(1), 3};
  a.description.client = NodeAddress(1);
  a.description.created_at = 12.5;
  a.files["in.img"] = synthetic_blob(1'000'000);
  a.files["notes.txt"] = make_blob(Bytes{'h', 'i'});
  a.error_log = "trace";
  a.error = WorkerError{ErrorClass::WorkerCalling, "gone", 1, true};
  a.assigner = NodeAddress(9);
  a.retried = true;
  return a;
}

}  // namespace

TEST(Archive, RoundTrip) {
  auto a = sample();
  EXPECT_EQ(unpack(pack(a)), a);
  EXPECT_EQ(unpack(pack(a).flatten()), a);
}

TEST(Archive, DescriptionOnly) {
  auto a = sample();
  a.files.clear();
  a.error.reset();
  a.error_log.reset();
  EXPECT_EQ(unpack(pack(a)), a);
}

TEST(Archive, SizeIsFramingPlusFiles) {
  auto a = sample();
  const auto p = pack(a);
  EXPECT_EQ(p.size(), framing_size(a) + 1'000'000 + 2);
  EXPECT_GE(p.size(), 1'000'000u);
}

TEST(Archive, TruncatedAndCorrupt) {
  auto bytes = pack(sample()).flatten();
  for (std::size_t cut : {0ul, 3ul, 10ul, 100ul, bytes.size() - 1}) {
    Bytes part(bytes.begin(), bytes.begin() + static_cast<long>(cut));
    EXPECT_THROW(unpack(part), UnpackError) << "cut " << cut;
  }
  auto bad = bytes;
  bad[0] ^= 0xff;
  EXPECT_THROW(unpack(bad), UnpackError);
}

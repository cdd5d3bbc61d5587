// Copyright 2026 The biohub Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <atomic>
#include <random>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "biohub/drivers.hpp"
#include "biohub/error.hpp"
#include "biohub/node.hpp"
#include "test_support.hpp"

namespace biohub
{
namespace
{

using testing::MemoryTransport;
using testing::VectorSource;
using testing::scalar_events;

std::vector<float> floats(const std::vector<Message> & msgs)
{
  std::vector<float> out;
  for (const auto & m : msgs) {
    if (m.kind() == MsgKind::kF32) {
      out.push_back(m.get<float>());
    } else {
      const auto & v = m.get<std::vector<float>>();
      out.insert(out.end(), v.begin(), v.end());
    }
  }
  return out;
}

void run_node(const SensorSpec & spec, NodeParams params, VectorSource & src, MemoryTransport & t)
{
  SensorNode node(spec, params, src, t);
  std::atomic<bool> stop{false};
  node.run(stop);
}

TEST(ChunkAccumulator, EmitsExactlyAtCapacity)
{
  ChunkAccumulator acc(4);
  EXPECT_FALSE(acc.accumulate(1.0f));
  EXPECT_FALSE(acc.accumulate(2.0f));
  EXPECT_FALSE(acc.accumulate(3.0f));
  auto chunk = acc.accumulate(4.0f);
  ASSERT_TRUE(chunk);
  EXPECT_EQ(*chunk, (std::vector<float>{1, 2, 3, 4}));
  EXPECT_EQ(acc.fill(), 0u);
}

TEST(ChunkAccumulator, ThreeSamplesEmitNothing)
{
  ChunkAccumulator acc(4);
  for (float v : {1.0f, 2.0f, 3.0f}) {
    EXPECT_FALSE(acc.accumulate(v));
  }
  EXPECT_EQ(acc.fill(), 3u);
}

TEST(ChunkAccumulator, TenSamplesGiveTwoChunksAndTwoRetained)
{
  std::vector<float> stream(10);
  for (std::size_t i = 0; i < stream.size(); ++i) {
    stream[i] = static_cast<float>(i) * 0.5f;
  }
  ChunkAccumulator acc(4);
  std::vector<std::vector<float>> chunks;
  for (float v : stream) {
    if (auto c = acc.accumulate(v)) {
      chunks.push_back(*c);
    }
  }
  ASSERT_EQ(chunks.size(), 2u);
  EXPECT_EQ(acc.fill(), 2u);
  std::vector<float> joined;
  for (const auto & c : chunks) {
    joined.insert(joined.end(), c.begin(), c.end());
  }
  EXPECT_EQ(joined, std::vector<float>(stream.begin(), stream.begin() + 8));
}

TEST(ChunkAccumulator, RandomStreamsReplayToPrefix)
{
  std::mt19937 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t cap = std::uniform_int_distribution<std::size_t>(1, 50)(rng);
    const std::size_t n = std::uniform_int_distribution<std::size_t>(0, 400)(rng);
    ChunkAccumulator acc(cap);
    std::vector<float> stream, joined;
    for (std::size_t i = 0; i < n; ++i) {
      stream.push_back(std::uniform_real_distribution<float>(-1, 1)(rng));
      if (auto c = acc.accumulate(stream.back())) {
        ASSERT_EQ(c->size(), cap);
        joined.insert(joined.end(), c->begin(), c->end());
      }
      ASSERT_LT(acc.fill(), cap);
    }
    const std::size_t whole = n / cap * cap;
    EXPECT_EQ(joined, std::vector<float>(stream.begin(), stream.begin() + whole));
  }
}

TEST(ChunkAccumulator, ZeroCapacityRejected)
{
  EXPECT_THROW(ChunkAccumulator(0), ParamError);
}

TEST(ApplyParam, UpdatesEachKey)
{
  NodeParams p;
  EXPECT_EQ(p, (NodeParams{true, true, 128}));
  p = apply_param(p, ParamCommand{"n", ParamKey::kChunkLength, std::int64_t{64}});
  EXPECT_EQ(p.chunk_length, 64u);
  p = apply_param(p, ParamCommand{"n", ParamKey::kSensorEnable, false});
  EXPECT_FALSE(p.sensor_enable);
  p = apply_param(p, ParamCommand{"n", ParamKey::kChunkEnable, false});
  EXPECT_FALSE(p.chunk_enable);
}

TEST(ApplyParam, RejectsBadValues)
{
  NodeParams p;
  EXPECT_THROW(apply_param(p, ParamCommand{"n", ParamKey::kChunkLength, std::int64_t{0}}),
    ParamError);
  EXPECT_THROW(apply_param(p, ParamCommand{"n", ParamKey::kChunkLength, true}), ParamError);
  EXPECT_THROW(apply_param(p, ParamCommand{"n", ParamKey::kChunkEnable, std::int64_t{1}}),
    ParamError);
}

TEST(ApplyParam, IdempotentSet)
{
  const ParamCommand cmd{"n", ParamKey::kChunkLength, std::int64_t{32}};
  const NodeParams once = apply_param(NodeParams{}, cmd);
  EXPECT_EQ(apply_param(once, cmd), once);
}

TEST(SensorNode, ShimmerAnnouncesItsFourTopics)
{
  VectorSource src({});
  MemoryTransport t;
  run_node(driver_spec(kShimmer3Gsr), {}, src, t);
  std::set<std::string> names;
  for (const auto & [name, kind] : t.announced) {
    names.insert(name);
  }
  EXPECT_EQ(names, (std::set<std::string>{
    "/biosensors/shimmer3_gsr/gsr", "/biosensors/shimmer3_gsr/gsr_chunk",
    "/biosensors/shimmer3_gsr/ppg", "/biosensors/shimmer3_gsr/ppg_chunk"}));
  EXPECT_TRUE(t.published.empty());
}

TEST(SensorNode, DisabledSensorAnnouncesButPublishesNothing)
{
  auto events = scalar_events("gsr", 300);
  events.push_back(SourceEvent{"tag", Message(Empty{}), {}});
  VectorSource src(events);
  MemoryTransport t;
  run_node(driver_spec(kEmpaticaE4), NodeParams{false, true, 4}, src, t);
  EXPECT_EQ(t.announced.size(), 11u);
  EXPECT_TRUE(t.published.empty());
}

TEST(SensorNode, ChunkDisableKeepsRawOnly)
{
  VectorSource src(scalar_events("gsr", 300));
  MemoryTransport t;
  run_node(driver_spec(kShimmer3Gsr), NodeParams{true, false, 4}, src, t);
  EXPECT_EQ(t.on("/biosensors/shimmer3_gsr/gsr").size(), 300u);
  EXPECT_TRUE(t.on("/biosensors/shimmer3_gsr/gsr_chunk").empty());
}

TEST(SensorNode, ChunksReconstructRawPrefix)
{
  std::mt19937 rng(5);
  const std::size_t lengths[] = {1, 4, 64, 128, 1000};
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t len = lengths[trial % 5];
    const std::size_t n = std::uniform_int_distribution<std::size_t>(0, 3000)(rng);
    std::vector<SourceEvent> events;
    for (std::size_t i = 0; i < n; ++i) {
      events.push_back(SourceEvent{"ppg", Message(std::normal_distribution<float>()(rng)), {}});
    }
    VectorSource src(events);
    MemoryTransport t;
    run_node(driver_spec(kShimmer3Gsr), NodeParams{true, true, len}, src, t);
    const auto raw = floats(t.on("/biosensors/shimmer3_gsr/ppg"));
    const auto chunks = t.on("/biosensors/shimmer3_gsr/ppg_chunk");
    ASSERT_EQ(raw.size(), n);
    for (const auto & c : chunks) {
      ASSERT_EQ(c.get<std::vector<float>>().size(), len);
    }
    EXPECT_EQ(floats(chunks), std::vector<float>(raw.begin(), raw.begin() + n / len * len));
  }
}

TEST(SensorNode, MultiChannelChunksAreSampleMajor)
{
  std::vector<SourceEvent> events;
  for (int i = 0; i < 6; ++i) {
    std::vector<float> s;
    for (int c = 0; c < 5; ++c) {
      s.push_back(static_cast<float>(10 * i + c));
    }
    events.push_back(SourceEvent{"eeg", Message(s), {}});
  }
  VectorSource src(events);
  MemoryTransport t;
  run_node(driver_spec(kEmotivInsight), NodeParams{true, true, 3}, src, t);
  const auto chunks = t.on("/biosensors/emotiv_insight/eeg_chunk");
  ASSERT_EQ(chunks.size(), 2u);
  const auto & first = chunks[0].get<std::vector<float>>();
  ASSERT_EQ(first.size(), 15u);
  EXPECT_EQ(first[0], 0.0f);
  EXPECT_EQ(first[4], 4.0f);
  EXPECT_EQ(first[5], 10.0f);
  EXPECT_EQ(chunks[1].get<std::vector<float>>()[0], 30.0f);
}

TEST(SensorNode, ChunkLengthChangeDiscardsPartialAndAcks)
{
  VectorSource src(scalar_events("gsr", 300));
  MemoryTransport t;
  // 100 samples at length 128 leave a partial chunk that must vanish.
  src.before(100, [&] {t.send(ParamKey::kChunkLength, std::int64_t{64}, "shimmer3_gsr");});
  run_node(driver_spec(kShimmer3Gsr), NodeParams{}, src, t);
  const auto chunks = t.on("/biosensors/shimmer3_gsr/gsr_chunk");
  ASSERT_EQ(chunks.size(), 3u);
  for (const auto & c : chunks) {
    EXPECT_EQ(c.get<std::vector<float>>().size(), 64u);
  }
  EXPECT_EQ(chunks[0].get<std::vector<float>>().front(), 100.0f);
  ASSERT_EQ(t.acks.size(), 1u);
  EXPECT_EQ(t.acks[0].second.status, ParamStatus::kOk);
  EXPECT_EQ(std::get<std::int64_t>(t.acks[0].second.value), 64);
}

TEST(SensorNode, SensorDisableThenEnableResumes)
{
  VectorSource src(scalar_events("ppg", 30));
  MemoryTransport t;
  src.before(10, [&] {t.send(ParamKey::kSensorEnable, false);});
  src.before(20, [&] {t.send(ParamKey::kSensorEnable, true);});
  run_node(driver_spec(kShimmer3Gsr), NodeParams{}, src, t);
  const auto raw = floats(t.on("/biosensors/shimmer3_gsr/ppg"));
  std::vector<float> expected;
  for (int i = 0; i < 30; ++i) {
    if (i < 10 || i >= 20) {
      expected.push_back(static_cast<float>(i));
    }
  }
  EXPECT_EQ(raw, expected);
}

TEST(SensorNode, SensorDisableSuppressesHardware)
{
  std::vector<SourceEvent> events;
  for (int i = 0; i < 10; ++i) {
    events.push_back(SourceEvent{"bat", Message(50.0f), {}});
    events.push_back(SourceEvent{"tag", Message(Empty{}), {}});
  }
  VectorSource src(events);
  MemoryTransport t;
  src.before(10, [&] {t.send(ParamKey::kSensorEnable, false);});
  run_node(driver_spec(kEmpaticaE4), NodeParams{}, src, t);
  EXPECT_EQ(t.on("/biosensors/empatica_e4/bat").size(), 5u);
  EXPECT_EQ(t.on("/biosensors/empatica_e4/tag").size(), 5u);
}

TEST(SensorNode, OversizedChunkLengthRejected)
{
  VectorSource src(scalar_events("gsr", 5));
  MemoryTransport t;
  src.before(0, [&] {t.send(ParamKey::kChunkLength, std::int64_t{4000});});
  SensorNode node(driver_spec(kEmotivInsight), NodeParams{}, src, t);
  std::atomic<bool> stop{false};
  node.run(stop);
  ASSERT_EQ(t.acks.size(), 1u);
  EXPECT_EQ(t.acks[0].second.status, ParamStatus::kParamError);
  EXPECT_EQ(node.params().chunk_length, 128u);
  EXPECT_THROW(SensorNode(driver_spec(kEmotivInsight), NodeParams{true, true, 1000}, src, t),
    ParamError);
}

TEST(SensorNode, DeviceChunksIgnoreChunkLength)
{
  std::vector<SourceEvent> events;
  for (int i = 0; i < 4; ++i) {
    events.push_back(SourceEvent{"ecg_chunk", Message(std::vector<float>(63, 1.0f)), {}});
    events.push_back(SourceEvent{"br_chunk", Message(std::vector<float>(18, 2.0f)), {}});
  }
  events.push_back(SourceEvent{"ecg_chunk", Message(std::vector<float>(10, 1.0f)), {}});
  VectorSource src(events);
  MemoryTransport t;
  SensorNode node(driver_spec(kZephyrBioharness), NodeParams{true, true, 7}, src, t);
  std::atomic<bool> stop{false};
  node.run(stop);
  const auto ecg = t.on("/biosensors/zephyr_bioharness/ecg_chunk");
  ASSERT_EQ(ecg.size(), 4u);
  for (const auto & m : ecg) {
    EXPECT_EQ(m.get<std::vector<float>>().size(), 63u);
  }
  for (const auto & m : t.on("/biosensors/zephyr_bioharness/br_chunk")) {
    EXPECT_EQ(m.get<std::vector<float>>().size(), 18u);
  }
  EXPECT_EQ(node.stats().unknown_channel_events, 1u);
}

TEST(SensorNode, UnknownAndMistypedEventsAreCounted)
{
  std::vector<SourceEvent> events{
    {"nope", Message(1.0f), {}},
    {"hr", Message(std::uint8_t{60}), {}},
    {"hr", Message(60.0f), {}},
  };
  VectorSource src(events);
  MemoryTransport t;
  SensorNode node(driver_spec(kPolarH10), NodeParams{}, src, t);
  std::atomic<bool> stop{false};
  node.run(stop);
  EXPECT_EQ(node.stats().unknown_channel_events, 2u);
  EXPECT_EQ(t.published.size(), 1u);
}

TEST(SensorNode, PublishedTopicsCarryTheSensorName)
{
  const std::regex grammar("^/biosensors/[a-z0-9_]+(/features)?/[a-z0-9_]+$");
  for (const auto & name : driver_names()) {
    VectorSource src({});
    MemoryTransport t;
    run_node(driver_spec(name), NodeParams{}, src, t);
    for (const auto & [topic, kind] : t.announced) {
      EXPECT_TRUE(std::regex_match(topic, grammar)) << topic;
      EXPECT_EQ(TopicName::parse(topic).sensor_name(), name);
    }
  }
}

TEST(NodeConfig, ParsesAndApplies)
{
  const auto cfg = NodeConfig::parse(
    "# demo\n"
    "sensor_name = lab_shimmer\n"
    "chunk_length=32\n"
    "chunk_enable=false\n"
    "channel.ppg_chunk=false\n");
  SensorSpec spec = driver_spec(kShimmer3Gsr);
  NodeParams params;
  cfg.apply(spec, params);
  EXPECT_EQ(spec.sensor_name, "lab_shimmer");
  EXPECT_EQ(params, (NodeParams{true, false, 32}));
  EXPECT_EQ(spec.channels.size(), 3u);
  EXPECT_EQ(spec.find("ppg_chunk"), nullptr);
}

TEST(NodeConfig, RejectsBadInput)
{
  EXPECT_THROW(NodeConfig::parse("chunk_length=0"), ConfigError);
  EXPECT_THROW(NodeConfig::parse("chunk_length=abc"), ConfigError);
  EXPECT_THROW(NodeConfig::parse("colour=blue"), ConfigError);
  EXPECT_THROW(NodeConfig::parse("sensor_name=Bad Name"), ConfigError);
  EXPECT_THROW(NodeConfig::parse("sensor_enable=maybe"), ConfigError);
  EXPECT_THROW(NodeConfig::parse("just words"), ConfigError);
  SensorSpec spec = driver_spec(kPolarH10);
  NodeParams params;
  EXPECT_THROW(NodeConfig::parse("channel.ecg=false").apply(spec, params), ConfigError);
  EXPECT_THROW(NodeConfig::load("/nonexistent/node.conf"), ConfigError);
}

TEST(SensorSpec, ValidationCatchesBrokenChunks)
{
  SensorSpec s{"x", {{"a_chunk", ChannelCategory::kChunk, MsgKind::kF32Array, 0, 1, 0}}};
  EXPECT_THROW(s.validate(), ConfigError);
  s.channels = {{"a", ChannelCategory::kRaw, MsgKind::kF32, 1, 1, 0},
    {"a_chunk", ChannelCategory::kChunk, MsgKind::kF32, 0, 1, 0}};
  EXPECT_THROW(s.validate(), ConfigError);
  s.channels = {{"Bad", ChannelCategory::kRaw, MsgKind::kF32, 1, 1, 0}};
  EXPECT_THROW(s.validate(), ConfigError);
}

}  // namespace
}  // namespace biohub

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

#include <chrono>
#include <string>
#include <thread>
#include <unistd.h>
#include <vector>

#include "biohub/broker.hpp"
#include "biohub/client.hpp"
#include "biohub/error.hpp"

namespace biohub
{
namespace
{

using namespace std::chrono_literals;

Endpoint ephemeral()
{
  return Endpoint::parse("127.0.0.1:0");
}

// Broker handles one session's frames in order, so a listing round trip
// proves everything sent before it has been processed.
void sync(BusClient & c)
{
  c.list_topics();
}

TEST(Endpoint, ParsesForms)
{
  auto tcp = Endpoint::parse("10.0.0.2:9000");
  EXPECT_EQ(tcp.host, "10.0.0.2");
  EXPECT_EQ(tcp.port, 9000);
  auto ux = Endpoint::parse("unix:/tmp/x.sock");
  EXPECT_EQ(ux.transport, Endpoint::Transport::kUnix);
  EXPECT_EQ(ux.path, "/tmp/x.sock");
  EXPECT_THROW(Endpoint::parse("nohost"), ConfigError);
  EXPECT_THROW(Endpoint::parse("h:99999"), ConfigError);
  EXPECT_EQ(Endpoint::parse(std::string(kDefaultEndpoint)).str(), "127.0.0.1:7653");
}

TEST(Broker, BindFailureIsIoError)
{
  Broker first(ephemeral());
  EXPECT_THROW(Broker second(first.endpoint()), IoError);
}

TEST(Broker, ConnectToNothingIsIoError)
{
  auto ep = ephemeral();
  {
    Broker b(ep);
    ep = b.endpoint();
  }
  EXPECT_THROW(BusClient c(ep), IoError);
}

TEST(Broker, FansOutToEverySubscriberInOrder)
{
  Broker broker(ephemeral());
  BusClient pub(broker.endpoint());
  BusClient sub_a(broker.endpoint());
  BusClient sub_b(broker.endpoint());
  sub_a.subscribe("/biosensors/polar_h10/hr");
  sub_b.subscribe("/biosensors/polar_h10/*");
  sync(sub_a);
  sync(sub_b);
  const auto hr = pub.announce(TopicName("polar_h10", "hr"), MsgKind::kF32);
  for (int i = 0; i < 100; ++i) {
    pub.publish(hr, Message(static_cast<float>(i)));
  }
  for (BusClient * sub : {&sub_a, &sub_b}) {
    for (int i = 0; i < 100; ++i) {
      auto f = sub->next_frame(2s);
      ASSERT_TRUE(f);
      EXPECT_EQ(f->topic.str(), "/biosensors/polar_h10/hr");
      EXPECT_EQ(f->seq, static_cast<std::uint32_t>(i));
      EXPECT_EQ(f->msg.get<float>(), static_cast<float>(i));
    }
    EXPECT_FALSE(sub->next_frame(50ms));
  }
}

TEST(Broker, LateSubscriberSeesOnlyLaterFrames)
{
  Broker broker(ephemeral());
  BusClient pub(broker.endpoint());
  const auto hr = pub.announce(TopicName("polar_h10", "hr"), MsgKind::kF32);
  for (int i = 1; i <= 50; ++i) {
    pub.publish(hr, Message(static_cast<float>(i)));
  }
  sync(pub);
  BusClient sub(broker.endpoint());
  sub.subscribe("/biosensors/polar_h10/hr");
  sync(sub);
  for (int i = 51; i <= 100; ++i) {
    pub.publish(hr, Message(static_cast<float>(i)));
  }
  for (int i = 51; i <= 100; ++i) {
    auto f = sub.next_frame(2s);
    ASSERT_TRUE(f);
    EXPECT_EQ(f->msg.get<float>(), static_cast<float>(i));
  }
  EXPECT_FALSE(sub.next_frame(50ms));
}

TEST(Broker, UnsubscribedTopicIsSilentlyDropped)
{
  Broker broker(ephemeral());
  BusClient pub(broker.endpoint());
  BusClient sub(broker.endpoint());
  sub.subscribe("/biosensors/polar_h10/hr");
  sync(sub);
  const auto other = pub.announce(TopicName("zephyr_bioharness", "hr"), MsgKind::kU8);
  pub.publish(other, Message(static_cast<std::uint8_t>(70)));
  sync(pub);
  EXPECT_FALSE(sub.next_frame(100ms));
}

TEST(Broker, ListsTopicsWithPublisherCounts)
{
  Broker broker(ephemeral());
  BusClient probe(broker.endpoint());
  EXPECT_TRUE(probe.list_topics().topics.empty());
  BusClient a(broker.endpoint());
  BusClient b(broker.endpoint());
  a.announce(TopicName("polar_h10", "hr"), MsgKind::kF32);
  b.announce(TopicName("polar_h10", "hr"), MsgKind::kF32);
  b.announce(TopicName("polar_h10", "extra"), MsgKind::kEmpty);
  sync(a);
  sync(b);
  auto l = probe.list_topics();
  ASSERT_EQ(l.topics.size(), 2u);
  EXPECT_EQ(l.topics[0].topic.str(), "/biosensors/polar_h10/extra");
  EXPECT_EQ(l.topics[0].publishers, 1);
  EXPECT_EQ(l.topics[1].topic.str(), "/biosensors/polar_h10/hr");
  EXPECT_EQ(l.topics[1].publishers, 2);
  EXPECT_EQ(l.topics[1].kind, MsgKind::kF32);
  b.close();
  for (int i = 0; i < 100 && broker.list_topics().topics.size() != 1; ++i) {
    std::this_thread::sleep_for(10ms);
  }
  l = probe.list_topics();
  ASSERT_EQ(l.topics.size(), 1u);
  EXPECT_EQ(l.topics[0].publishers, 1);
}

TEST(Broker, ConflictingKindDropsAnnouncer)
{
  Broker broker(ephemeral());
  BusClient a(broker.endpoint());
  a.announce(TopicName("polar_h10", "hr"), MsgKind::kF32);
  sync(a);
  BusClient b(broker.endpoint());
  b.announce(TopicName("polar_h10", "hr"), MsgKind::kU8);
  EXPECT_THROW(
    {
      b.list_topics(1s);
    }, IoError);
}

TEST(Broker, RoutesParamsAndAcks)
{
  Broker broker(ephemeral());
  BusClient node(broker.endpoint());
  node.announce(TopicName("shimmer3_gsr", "gsr"), MsgKind::kF32);
  sync(node);
  BusClient ctl(broker.endpoint());

  EXPECT_THROW(ctl.send_param({"nobody", ParamKey::kSensorEnable, false}), NodeNotFound);
  EXPECT_THROW(ctl.send_param({"shimmer3_gsr", ParamKey::kChunkLength, std::int64_t{0}}),
    ParamError);

  std::thread responder([&] {
      auto req = node.next_param(2s);
      ASSERT_TRUE(req);
      EXPECT_EQ(req->command.key, ParamKey::kChunkLength);
      node.ack_param(req->request_id,
      ParamAck{ParamStatus::kOk, "shimmer3_gsr", req->command.key, req->command.value, {}});
    });
  auto ack = ctl.send_param({"shimmer3_gsr", ParamKey::kChunkLength, std::int64_t{64}});
  responder.join();
  EXPECT_EQ(ack.status, ParamStatus::kOk);
  EXPECT_EQ(std::get<std::int64_t>(ack.value), 64);
}

TEST(Broker, SlowSubscriberDropsOldestAndKeepsOrder)
{
  Broker broker(ephemeral(), BrokerOptions{4});
  BusClient pub(broker.endpoint());
  BusClient slow(broker.endpoint());
  slow.subscribe("/biosensors/**");
  sync(slow);
  const auto t = pub.announce(TopicName("emotiv_insight", "eeg_chunk"), MsgKind::kF32Array);
  const std::vector<float> big(kMaxArrayElements, 1.0f);
  const int n = 600;
  for (int i = 0; i < n; ++i) {
    pub.publish(t, Message(big));
  }
  sync(pub);
  std::this_thread::sleep_for(100ms);
  EXPECT_GT(broker.dropped_frames(), 0u);
  std::int64_t last = -1;
  int received = 0;
  while (auto f = slow.next_frame(300ms)) {
    EXPECT_GT(static_cast<std::int64_t>(f->seq), last);
    last = f->seq;
    ++received;
  }
  EXPECT_LT(received, n);
  EXPECT_EQ(last, n - 1);  // newest frame always survives
  EXPECT_EQ(broker.dropped_frames() + static_cast<std::uint64_t>(received),
    static_cast<std::uint64_t>(n));
}

TEST(Broker, WorksOverUnixSocket)
{
  const std::string path = "/tmp/biohub_test_" + std::to_string(::getpid()) + ".sock";
  Broker broker(Endpoint::parse("unix:" + path));
  BusClient pub(broker.endpoint());
  BusClient sub(broker.endpoint());
  sub.subscribe("/biosensors/empatica_e4/tag");
  sync(sub);
  const auto tag = pub.announce(TopicName("empatica_e4", "tag"), MsgKind::kEmpty);
  pub.publish(tag, Message(Empty{}));
  auto f = sub.next_frame(2s);
  ASSERT_TRUE(f);
  EXPECT_EQ(f->msg.kind(), MsgKind::kEmpty);
}

}  // namespace
}  // namespace biohub

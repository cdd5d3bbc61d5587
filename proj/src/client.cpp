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

#include "biohub/client.hpp"

#include <algorithm>
#include <array>
#include <utility>

#include "biohub/clock.hpp"
#include "biohub/error.hpp"

namespace biohub
{

namespace
{

using Clock = std::chrono::steady_clock;

std::chrono::milliseconds remaining(Clock::time_point deadline)
{
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
    deadline - Clock::now());
  return std::max(left, std::chrono::milliseconds(0));
}

Frame control(FrameKind kind, std::uint16_t topic_id, std::uint32_t seq,
  std::vector<std::uint8_t> body)
{
  Frame f;
  f.kind = kind;
  f.topic_id = topic_id;
  f.seq = seq;
  f.t_wall_ns = now_wall_ns();
  f.t_mono_ns = now_mono_ns();
  f.body = std::move(body);
  return f;
}

}  // namespace

BusClient::BusClient(const Endpoint & endpoint)
: sock_(Socket::connect(endpoint)) {}

TopicHandle BusClient::announce(const TopicName & topic, MsgKind kind)
{
  for (std::size_t i = 0; i < published_.size(); ++i) {
    if (published_[i].first == topic) {
      if (published_[i].second != kind) {
        throw ProtocolError("topic " + topic.str() + " already announced with another kind");
      }
      return static_cast<TopicHandle>(i);
    }
  }
  if (published_.size() >= 0xFFFF) {
    throw EncodeError("too many topics on one connection");
  }
  const auto handle = static_cast<TopicHandle>(published_.size());
  published_.emplace_back(topic, kind);
  next_seq_.push_back(0);
  send(control(FrameKind::kTopicAnnounce, handle, 0, encode_announce({topic, kind})));
  return handle;
}

std::uint32_t BusClient::publish(TopicHandle topic, const Message & msg)
{
  const std::uint32_t seq = next_seq_.at(topic)++;
  publish_stamped(topic, msg, seq, now_wall_ns(), now_mono_ns());
  return seq;
}

void BusClient::publish_stamped(TopicHandle topic, const Message & msg, std::uint32_t seq,
  std::uint64_t t_wall_ns, std::uint64_t t_mono_ns)
{
  if (topic >= published_.size()) {
    throw ProtocolError("publish on a topic that was never announced");
  }
  if (msg.kind() != published_[topic].second) {
    throw EncodeError("message kind " + std::string(to_string(msg.kind())) +
            " does not match topic " + published_[topic].first.str());
  }
  Frame f;
  f.kind = FrameKind::kData;
  f.topic_id = topic;
  f.seq = seq;
  f.t_wall_ns = t_wall_ns;
  f.t_mono_ns = t_mono_ns;
  f.msg = msg;
  send(f);
}

void BusClient::subscribe(const std::string & pattern)
{
  send(control(FrameKind::kSubscribe, 0, 0, {pattern.begin(), pattern.end()}));
}

std::optional<TopicFrame> BusClient::next_frame(std::chrono::milliseconds timeout)
{
  const auto deadline = Clock::now() + timeout;
  for (;;) {
    if (!data_.empty()) {
      TopicFrame f = std::move(data_.front());
      data_.pop_front();
      return f;
    }
    if (Clock::now() >= deadline) {
      return std::nullopt;
    }
    pump(remaining(deadline));
  }
}

ParamAck BusClient::send_param(const ParamCommand & cmd, std::chrono::milliseconds timeout)
{
  const std::uint32_t id = next_request_++;
  send(control(FrameKind::kParamSet, 0, id, encode_param_command(cmd)));
  const auto deadline = Clock::now() + timeout;
  for (;;) {
    if (auto it = acks_.find(id); it != acks_.end()) {
      ParamAck ack = std::move(it->second.first);
      last_ack_arrival_ = it->second.second;
      acks_.erase(it);
      switch (ack.status) {
        case ParamStatus::kOk: return ack;
        case ParamStatus::kNodeNotFound: throw NodeNotFound(ack.message);
        case ParamStatus::kParamError: throw ParamError(ack.message);
      }
    }
    if (Clock::now() >= deadline) {
      throw TimeoutError("no parameter ack from node '" + cmd.node + "'");
    }
    pump(remaining(deadline));
  }
}

TopicListing BusClient::list_topics(std::chrono::milliseconds timeout)
{
  listing_.reset();
  send(control(FrameKind::kTopicQuery, 0, next_request_++, {}));
  const auto deadline = Clock::now() + timeout;
  while (!listing_) {
    if (Clock::now() >= deadline) {
      throw TimeoutError("no topic listing from broker");
    }
    pump(remaining(deadline));
  }
  return *std::exchange(listing_, std::nullopt);
}

std::optional<ParamRequest> BusClient::next_param(std::chrono::milliseconds timeout)
{
  const auto deadline = Clock::now() + timeout;
  for (;;) {
    if (!params_.empty()) {
      ParamRequest r = std::move(params_.front());
      params_.pop_front();
      return r;
    }
    pump(remaining(deadline));
    if (params_.empty() && Clock::now() >= deadline) {
      return std::nullopt;
    }
  }
}

void BusClient::ack_param(std::uint32_t request_id, const ParamAck & ack)
{
  send(control(FrameKind::kParamAck, 0, request_id, encode_param_ack(ack)));
}

const TopicName & BusClient::topic_of(TopicHandle handle) const
{
  return published_.at(handle).first;
}

void BusClient::send(const Frame & f)
{
  if (!sock_.valid()) {
    throw IoError("client is closed");
  }
  sock_.send_all(encode_frame(f));
}

void BusClient::pump(std::chrono::milliseconds timeout)
{
  if (!sock_.valid()) {
    throw IoError("client is closed");
  }
  if (!sock_.wait_readable(timeout)) {
    return;
  }
  std::array<std::uint8_t, 64 * 1024> chunk{};
  const std::size_t n = sock_.recv_some(chunk);
  if (n == 0) {
    throw IoError("connection to broker lost");
  }
  const std::uint64_t recv_mono = now_mono_ns();
  rx_.insert(rx_.end(), chunk.begin(), chunk.begin() + static_cast<std::ptrdiff_t>(n));
  std::size_t off = 0;
  while (auto d = decode_frame(std::span(rx_).subspan(off))) {
    off += d->consumed;
    dispatch(std::move(d->frame), recv_mono);
  }
  rx_.erase(rx_.begin(), rx_.begin() + static_cast<std::ptrdiff_t>(off));
}

void BusClient::dispatch(Frame && f, std::uint64_t recv_mono)
{
  const std::uint64_t arrival = ++arrivals_;
  switch (f.kind) {
    case FrameKind::kData: {
        auto it = remote_topics_.find(f.topic_id);
        if (it == remote_topics_.end()) {
          return;
        }
        data_.push_back(TopicFrame{it->second, f.seq, f.t_wall_ns, f.t_mono_ns,
            std::move(f.msg), recv_mono, arrival});
        break;
      }
    case FrameKind::kTopicAnnounce:
      remote_topics_.insert_or_assign(f.topic_id, decode_announce(f.body).topic);
      break;
    case FrameKind::kParamSet:
      params_.push_back(ParamRequest{f.seq, decode_param_command(f.body)});
      break;
    case FrameKind::kParamAck:
      acks_.insert_or_assign(f.seq, std::make_pair(decode_param_ack(f.body), arrival));
      break;
    case FrameKind::kTopicList:
      listing_ = decode_topic_list(f.body);
      break;
    case FrameKind::kSubscribe:
    case FrameKind::kTopicQuery:
      break;
  }
}

}  // namespace biohub

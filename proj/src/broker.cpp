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

#include "biohub/broker.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "biohub/byte_io.hpp"
#include "biohub/clock.hpp"
#include "biohub/error.hpp"

namespace biohub
{

namespace
{

using Bytes = std::shared_ptr<const std::vector<std::uint8_t>>;

struct Outgoing
{
  Bytes bytes;
  bool droppable = false;
};

Bytes make_control(FrameKind kind, std::uint16_t topic_id, std::uint32_t seq,
  std::vector<std::uint8_t> body)
{
  Frame f;
  f.kind = kind;
  f.topic_id = topic_id;
  f.seq = seq;
  f.t_wall_ns = now_wall_ns();
  f.t_mono_ns = now_mono_ns();
  f.body = std::move(body);
  return std::make_shared<const std::vector<std::uint8_t>>(encode_frame(f));
}

}  // namespace

class Session
{
public:
  Session(std::uint64_t id, Socket sock, std::size_t capacity)
  : id_(id), sock_(std::move(sock)), capacity_(capacity) {}

  std::uint64_t id() const noexcept {return id_;}
  const Socket & socket() const noexcept {return sock_;}

  /// Queues bytes for the writer thread; drops the oldest data frame when the
  /// data backlog is at capacity.
  void enqueue(Bytes bytes, bool droppable)
  {
    std::lock_guard lock(qm_);
    if (closing_) {
      return;
    }
    if (droppable) {
      if (queued_data_ >= capacity_) {
        auto it = std::find_if(q_.begin(), q_.end(), [](const Outgoing & o) {return o.droppable;});
        if (it != q_.end()) {
          q_.erase(it);
          --queued_data_;
          ++dropped_;
        }
      }
      ++queued_data_;
    }
    q_.push_back(Outgoing{std::move(bytes), droppable});
    qcv_.notify_one();
  }

  void writer_loop()
  {
    for (;;) {
      Outgoing next;
      {
        std::unique_lock lock(qm_);
        qcv_.wait(lock, [this] {return closing_ || !q_.empty();});
        if (q_.empty()) {
          return;
        }
        next = std::move(q_.front());
        q_.pop_front();
        if (next.droppable) {
          --queued_data_;
        }
      }
      try {
        sock_.send_all(*next.bytes);
      } catch (const IoError &) {
        sock_.shutdown();
        close_queue();
        return;
      }
    }
  }

  void close_queue()
  {
    std::lock_guard lock(qm_);
    closing_ = true;
    q_.clear();
    queued_data_ = 0;
    qcv_.notify_all();
  }

  std::uint64_t dropped() const
  {
    std::lock_guard lock(qm_);
    return dropped_;
  }

  std::thread reader;
  std::thread writer;

  // Guarded by the broker mutex.
  std::unordered_map<std::uint16_t, std::uint16_t> local_to_global;
  std::vector<std::string> patterns;
  std::unordered_set<std::uint16_t> announced_to;
  std::set<std::string> node_names;

private:
  std::uint64_t id_;
  Socket sock_;
  std::size_t capacity_;
  mutable std::mutex qm_;
  std::condition_variable qcv_;
  std::deque<Outgoing> q_;
  std::size_t queued_data_ = 0;
  std::uint64_t dropped_ = 0;
  bool closing_ = false;
};

class Broker::Impl
{
public:
  Impl(const Endpoint & ep, BrokerOptions options)
  : options_(options), listener_(ep)
  {
    accept_thread_ = std::thread([this] {accept_loop();});
  }

  ~Impl() {stop();}

  const Endpoint & endpoint() const noexcept {return listener_.endpoint();}

  TopicListing list_topics() const
  {
    std::lock_guard lock(mu_);
    return listing_locked();
  }

  std::uint64_t dropped_frames() const
  {
    std::lock_guard lock(mu_);
    std::uint64_t total = retired_drops_;
    for (const auto & [id, s] : sessions_) {
      total += s->dropped();
    }
    return total;
  }

  std::size_t session_count() const
  {
    std::lock_guard lock(mu_);
    return sessions_.size();
  }

  void stop()
  {
    if (stopping_.exchange(true)) {
      return;
    }
    listener_.close();
    if (accept_thread_.joinable()) {
      accept_thread_.join();
    }
    std::vector<std::shared_ptr<Session>> all;
    {
      std::lock_guard lock(mu_);
      for (auto & [id, s] : sessions_) {
        all.push_back(s);
      }
    }
    for (auto & s : all) {
      s->socket().shutdown();
    }
    for (auto & s : all) {
      join_session(*s);
    }
    reap();
  }

private:
  struct TopicEntry
  {
    TopicName topic;
    std::string name;
    MsgKind kind;
    std::uint16_t publishers = 0;
  };

  struct PendingParam
  {
    std::uint64_t requester;
    std::uint32_t original_seq;
    std::size_t outstanding;
  };

  void accept_loop()
  {
    while (!stopping_) {
      Socket sock;
      try {
        sock = listener_.accept();
      } catch (const IoError &) {
        return;
      }
      if (stopping_) {
        return;
      }
      reap();
      auto s = std::make_shared<Session>(next_session_++, std::move(sock),
          options_.queue_capacity);
      {
        std::lock_guard lock(mu_);
        sessions_.emplace(s->id(), s);
      }
      s->writer = std::thread([s] {s->writer_loop();});
      s->reader = std::thread([this, s] {reader_loop(s);});
    }
  }

  void join_session(Session & s)
  {
    if (s.reader.joinable()) {
      s.reader.join();
    }
    if (s.writer.joinable()) {
      s.writer.join();
    }
  }

  void reap()
  {
    std::vector<std::shared_ptr<Session>> dead;
    {
      std::lock_guard lock(mu_);
      dead.swap(dead_);
    }
    for (auto & s : dead) {
      join_session(*s);
    }
  }

  void reader_loop(const std::shared_ptr<Session> & s)
  {
    std::vector<std::uint8_t> buf;
    std::vector<std::uint8_t> chunk(64 * 1024);
    try {
      for (;;) {
        const std::size_t n = s->socket().recv_some(chunk);
        if (n == 0) {
          break;
        }
        buf.insert(buf.end(), chunk.begin(), chunk.begin() + static_cast<std::ptrdiff_t>(n));
        std::size_t off = 0;
        while (auto d = decode_frame(std::span(buf).subspan(off))) {
          handle(*s, d->frame, std::span(buf).subspan(off, d->consumed));
          off += d->consumed;
        }
        buf.erase(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(off));
      }
    } catch (const Error &) {
      // Protocol violation or socket failure: drop the session.
    }
    s->socket().shutdown();
    s->close_queue();
    remove_session(s);
  }

  void remove_session(const std::shared_ptr<Session> & s)
  {
    std::lock_guard lock(mu_);
    for (const auto & [local, global] : s->local_to_global) {
      if (topics_[global].publishers > 0) {
        --topics_[global].publishers;
      }
    }
    for (auto it = pending_.begin(); it != pending_.end(); ) {
      it = it->second.requester == s->id() ? pending_.erase(it) : std::next(it);
    }
    retired_drops_ += s->dropped();
    sessions_.erase(s->id());
    dead_.push_back(s);
  }

  void handle(Session & s, const Frame & f, std::span<const std::uint8_t> raw)
  {
    switch (f.kind) {
      case FrameKind::kData:
        fan_out(s, f, raw);
        break;
      case FrameKind::kTopicAnnounce:
        on_announce(s, f);
        break;
      case FrameKind::kSubscribe: {
          std::lock_guard lock(mu_);
          s.patterns.emplace_back(f.body.begin(), f.body.end());
          break;
        }
      case FrameKind::kParamSet:
        on_param_set(s, f);
        break;
      case FrameKind::kParamAck:
        on_param_ack(f);
        break;
      case FrameKind::kTopicQuery: {
          std::lock_guard lock(mu_);
          s.enqueue(make_control(FrameKind::kTopicList, 0, f.seq,
            encode_topic_list(listing_locked())), false);
          break;
        }
      case FrameKind::kTopicList:
        break;
    }
  }

  void on_announce(Session & s, const Frame & f)
  {
    const TopicAnnounce a = decode_announce(f.body);
    const std::string name = a.topic.str();
    std::lock_guard lock(mu_);
    std::uint16_t global = 0;
    if (auto it = by_name_.find(name); it != by_name_.end()) {
      global = it->second;
      if (topics_[global].kind != a.kind) {
        throw ProtocolError("topic " + name + " re-announced with a different kind");
      }
    } else {
      if (topics_.size() >= 0xFFFF) {
        throw ProtocolError("topic registry full");
      }
      global = static_cast<std::uint16_t>(topics_.size());
      topics_.push_back(TopicEntry{a.topic, name, a.kind, 0});
      by_name_.emplace(name, global);
    }
    if (auto [it, inserted] = s.local_to_global.emplace(f.topic_id, global); inserted) {
      ++topics_[global].publishers;
    } else if (it->second != global) {
      throw ProtocolError("topic id reused for a different topic");
    }
    if (!a.topic.is_feature()) {
      s.node_names.insert(a.topic.sensor_name());
    }
  }

  void fan_out(Session & s, const Frame & f, std::span<const std::uint8_t> raw)
  {
    std::lock_guard lock(mu_);
    const auto it = s.local_to_global.find(f.topic_id);
    if (it == s.local_to_global.end()) {
      return;
    }
    const std::uint16_t global = it->second;
    const TopicEntry & entry = topics_[global];
    Bytes data;
    for (auto & [id, t] : sessions_) {
      const bool wanted = std::any_of(t->patterns.begin(), t->patterns.end(),
          [&](const std::string & p) {return topic_matches(p, entry.name);});
      if (!wanted) {
        continue;
      }
      if (t->announced_to.insert(global).second) {
        t->enqueue(make_control(FrameKind::kTopicAnnounce, global, 0,
          encode_announce(TopicAnnounce{entry.topic, entry.kind})), false);
      }
      if (!data) {
        auto copy = std::make_shared<std::vector<std::uint8_t>>(raw.begin(), raw.end());
        (*copy)[4] = static_cast<std::uint8_t>(global);
        (*copy)[5] = static_cast<std::uint8_t>(global >> 8);
        data = std::move(copy);
      }
      t->enqueue(data, true);
    }
  }

  void on_param_set(Session & s, const Frame & f)
  {
    ParamCommand cmd = decode_param_command(f.body);
    ParamAck nack{ParamStatus::kOk, cmd.node, cmd.key, cmd.value, {}};
    try {
      cmd.validate();
    } catch (const ParamError & e) {
      nack.status = ParamStatus::kParamError;
      nack.message = e.what();
      s.enqueue(make_control(FrameKind::kParamAck, 0, f.seq, encode_param_ack(nack)), false);
      return;
    }
    std::lock_guard lock(mu_);
    std::vector<Session *> targets;
    for (auto & [id, t] : sessions_) {
      if (t->node_names.contains(cmd.node)) {
        targets.push_back(t.get());
      }
    }
    if (targets.empty()) {
      nack.status = ParamStatus::kNodeNotFound;
      nack.message = "no connected node named '" + cmd.node + "'";
      s.enqueue(make_control(FrameKind::kParamAck, 0, f.seq, encode_param_ack(nack)), false);
      return;
    }
    const std::uint32_t request = next_request_++;
    pending_[request] = PendingParam{s.id(), f.seq, targets.size()};
    const Bytes fwd = make_control(FrameKind::kParamSet, 0, request, f.body);
    for (Session * t : targets) {
      t->enqueue(fwd, false);
    }
  }

  void on_param_ack(const Frame & f)
  {
    std::lock_guard lock(mu_);
    auto it = pending_.find(f.seq);
    if (it == pending_.end()) {
      return;
    }
    if (auto r = sessions_.find(it->second.requester); r != sessions_.end()) {
      r->second->enqueue(make_control(FrameKind::kParamAck, 0, it->second.original_seq, f.body),
        false);
    }
    if (--it->second.outstanding == 0) {
      pending_.erase(it);
    }
  }

  TopicListing listing_locked() const
  {
    TopicListing l;
    for (const auto & t : topics_) {
      if (t.publishers > 0) {
        l.topics.push_back(TopicInfo{t.topic, t.kind, t.publishers});
      }
    }
    std::sort(l.topics.begin(), l.topics.end(),
      [](const TopicInfo & a, const TopicInfo & b) {return a.topic.str() < b.topic.str();});
    l.dropped_frames = retired_drops_;
    for (const auto & [id, s] : sessions_) {
      l.dropped_frames += s->dropped();
    }
    return l;
  }

  BrokerOptions options_;
  Listener listener_;
  std::thread accept_thread_;
  std::atomic<bool> stopping_{false};
  std::atomic<std::uint64_t> next_session_{1};

  mutable std::mutex mu_;
  std::map<std::uint64_t, std::shared_ptr<Session>> sessions_;
  std::vector<std::shared_ptr<Session>> dead_;
  std::vector<TopicEntry> topics_;
  std::unordered_map<std::string, std::uint16_t> by_name_;
  std::unordered_map<std::uint32_t, PendingParam> pending_;
  std::uint32_t next_request_ = 1;
  std::uint64_t retired_drops_ = 0;
};

Broker::Broker(const Endpoint & endpoint, BrokerOptions options)
: impl_(std::make_unique<Impl>(endpoint, options)) {}

Broker::~Broker() = default;

const Endpoint & Broker::endpoint() const noexcept {return impl_->endpoint();}
TopicListing Broker::list_topics() const {return impl_->list_topics();}
std::uint64_t Broker::dropped_frames() const {return impl_->dropped_frames();}
std::size_t Broker::session_count() const {return impl_->session_count();}
void Broker::stop() {impl_->stop();}

}  // namespace biohub

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

#include "biohub/recorder.hpp"

#include <algorithm>
#include <map>
#include <thread>
#include <utility>

#include "biohub/clock.hpp"
#include "biohub/error.hpp"

namespace biohub
{

namespace
{

using Clock = std::chrono::steady_clock;

}  // namespace

RecordStats record(
  BusClient & client, const std::string & path, const RecordOptions & options,
  const std::atomic<bool> & stop)
{
  BagWriter bag(path);
  const std::vector<std::string> patterns = options.patterns.empty() ?
    std::vector<std::string>{"/biosensors/**"} : options.patterns;
  for (const auto & p : patterns) {
    client.subscribe(p);
  }
  // The broker handles a session's frames in order, so this round trip
  // confirms the subscriptions.
  client.list_topics();
  if (options.on_ready) {
    options.on_ready();
  }

  RecordStats stats;
  // Ordered by (t_mono, arrival) so ties keep arrival order.
  std::map<std::pair<std::uint64_t, std::uint64_t>, TopicFrame> held;
  std::uint64_t arrivals = 0;
  std::uint64_t last_mono = 0;

  auto write_one = [&](const TopicFrame & f) {
      const std::uint16_t id = bag.topic(f.topic, f.msg.kind());
      if (stats.records > 0 && f.t_mono_ns < last_mono) {
        ++stats.late_frames;
      }
      last_mono = std::max(last_mono, f.t_mono_ns);
      bag.write(id, f.msg, f.seq, f.t_wall_ns, f.t_mono_ns, f.recv_mono_ns);
      ++stats.records;
    };
  auto release = [&](std::uint64_t watermark) {
      while (!held.empty() && held.begin()->first.first <= watermark) {
        write_one(held.begin()->second);
        held.erase(held.begin());
      }
    };
  auto finish = [&] {
      release(UINT64_MAX);
      bag.close();
      stats.topics = bag.topics().size();
    };

  const auto started = Clock::now();
  auto last_flush = started;
  const auto window_ns = static_cast<std::uint64_t>(
    std::chrono::duration_cast<std::chrono::nanoseconds>(options.reorder_window).count());
  try {
    while (!stop.load()) {
      if (options.max_records && arrivals >= *options.max_records) {
        break;
      }
      if (options.duration && Clock::now() - started >= *options.duration) {
        break;
      }
      if (auto f = client.next_frame(std::chrono::milliseconds(20))) {
        const std::uint64_t key = f->t_mono_ns;
        held.emplace(std::make_pair(key, arrivals++), std::move(*f));
      }
      const std::uint64_t now = now_mono_ns();
      release(now > window_ns ? now - window_ns : 0);
      if (Clock::now() - last_flush >= options.flush_interval) {
        bag.flush();
        last_flush = Clock::now();
      }
    }
  } catch (const IoError &) {
    finish();
    throw;
  }
  finish();
  return stats;
}

PlayStats play(
  const Bag & bag, BusClient & client, const PlayOptions & options,
  const std::atomic<bool> & stop)
{
  if (!(options.rate > 0.0)) {
    throw ConfigError("play rate must be positive");
  }
  std::map<std::uint16_t, TopicHandle> handles;
  for (const auto & t : bag.topics) {
    handles[t.id] = client.announce(t.topic, t.kind);
  }
  PlayStats stats;
  const auto start = Clock::now();
  if (bag.records.empty()) {
    return stats;
  }
  const std::uint64_t base = bag.records.front().t_mono_ns;
  Clock::time_point previous = start;
  for (const auto & r : bag.records) {
    const double offset_s = r.t_mono_ns >= base ?
      static_cast<double>(r.t_mono_ns - base) * 1e-9 / options.rate : 0.0;
    const auto target = std::max(
      previous, start + std::chrono::duration_cast<Clock::duration>(
        std::chrono::duration<double>(offset_s)));
    previous = target;
    for (;;) {
      if (stop.load()) {
        stats.elapsed_s = std::chrono::duration<double>(Clock::now() - start).count();
        return stats;
      }
      const auto now = Clock::now();
      if (now >= target) {
        break;
      }
      std::this_thread::sleep_until(std::min(target, now + std::chrono::milliseconds(50)));
    }
    client.publish_stamped(handles.at(r.topic_id), bag.message(r), r.seq, r.t_wall_ns, r.t_mono_ns);
    ++stats.frames;
    stats.max_lateness_s = std::max(
      stats.max_lateness_s, std::chrono::duration<double>(Clock::now() - target).count());
  }
  stats.elapsed_s = std::chrono::duration<double>(Clock::now() - start).count();
  return stats;
}

PlayStats play(
  const std::string & path, BusClient & client, const PlayOptions & options,
  const std::atomic<bool> & stop)
{
  const Bag bag = read_bag(path, BagReadMode::kRecover);
  PlayStats stats = play(bag, client, options, stop);
  if (!bag.stop_reason.empty() && !options.allow_truncated && !stop.load()) {
    throw FormatError("bag " + path + ": " + bag.stop_reason + " (played " +
            std::to_string(stats.frames) + " records)");
  }
  return stats;
}

}  // namespace biohub

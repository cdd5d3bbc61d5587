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

#include <fcntl.h>
#include <poll.h>
#include <sys/stat.h>
#include <termios.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <exception>
#include <functional>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <thread>
#include <utility>

#include "biohub/bounded_queue.hpp"
#include "biohub/drivers.hpp"
#include "biohub/error.hpp"
#include "biohub/hr_measurement.hpp"
#include "biohub/lsl.hpp"
#include "biohub/strap.hpp"

namespace biohub
{

namespace
{

using Clock = std::chrono::steady_clock;

/// Reads a file, FIFO, or serial device without blocking shutdown.
class FdReader
{
public:
  explicit FdReader(const std::string & path)
  : path_(path)
  {
    fd_ = ::open(path.c_str(), O_RDONLY | O_NONBLOCK | O_CLOEXEC | O_NOCTTY);
    if (fd_ < 0) {
      throw BackendUnavailable("cannot open " + path + ": " + std::strerror(errno));
    }
    struct stat st{};
    if (::fstat(fd_, &st) == 0) {
      regular_ = S_ISREG(st.st_mode);
    }
    if (::isatty(fd_)) {
      termios tio{};
      if (::tcgetattr(fd_, &tio) == 0) {
        ::cfmakeraw(&tio);
        ::tcsetattr(fd_, TCSANOW, &tio);
      }
    }
  }

  ~FdReader()
  {
    if (fd_ >= 0) {
      ::close(fd_);
    }
  }

  FdReader(const FdReader &) = delete;
  FdReader & operator=(const FdReader &) = delete;

  bool regular() const noexcept {return regular_;}

  /// Appends available bytes to `out`. Returns false at end of stream or
  /// when `stop` is set.
  bool read_some(std::vector<std::uint8_t> & out, const std::atomic<bool> & stop)
  {
    std::uint8_t buf[4096];
    while (!stop.load()) {
      pollfd p{fd_, POLLIN, 0};
      const int r = ::poll(&p, 1, 50);
      if (r < 0 && errno != EINTR) {
        throw IoError("poll on " + path_ + ": " + std::strerror(errno));
      }
      if (r <= 0) {
        continue;
      }
      const ssize_t n = ::read(fd_, buf, sizeof(buf));
      if (n > 0) {
        out.insert(out.end(), buf, buf + n);
        return true;
      }
      if (n == 0) {
        return false;
      }
      if (errno != EAGAIN && errno != EINTR) {
        throw IoError("read " + path_ + ": " + std::strerror(errno));
      }
    }
    return false;
  }

  /// Next line without its terminator; false at end of stream or on stop.
  bool read_line(std::string & line, const std::atomic<bool> & stop)
  {
    for (;;) {
      const auto nl = std::find(pending_.begin(), pending_.end(), '\n');
      if (nl != pending_.end()) {
        line.assign(pending_.begin(), nl);
        pending_.erase(pending_.begin(), nl + 1);
        return true;
      }
      if (!read_some(pending_, stop)) {
        if (!pending_.empty() && !stop.load()) {
          line.assign(pending_.begin(), pending_.end());
          pending_.clear();
          return true;
        }
        return false;
      }
    }
  }

private:
  std::string path_;
  int fd_ = -1;
  bool regular_ = false;
  std::vector<std::uint8_t> pending_;
};

/// Sleeps until `when` in short slices; false when stopped first.
bool sleep_until(Clock::time_point when, const std::atomic<bool> & stop)
{
  while (!stop.load()) {
    const auto now = Clock::now();
    if (now >= when) {
      return true;
    }
    std::this_thread::sleep_for(std::min<Clock::duration>(when - now, std::chrono::milliseconds(20)));
  }
  return false;
}

Clock::duration seconds(double s)
{
  return std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(s));
}

/// Producer threads feed a bounded drop-oldest queue that the node drains.
class QueuedSource : public SampleSource, public DropCounter
{
public:
  explicit QueuedSource(std::size_t capacity)
  : queue_(capacity) {}

  ~QueuedSource() override {shutdown();}

  std::optional<SourceEvent> next(std::chrono::milliseconds wait) override
  {
    auto ev = queue_.pop_for(wait);
    if (!ev && queue_.closed_and_empty()) {
      std::lock_guard lock(mu_);
      if (error_) {
        std::rethrow_exception(std::exchange(error_, nullptr));
      }
    }
    return ev;
  }

  bool ended() const override {return queue_.closed_and_empty();}

  std::uint64_t dropped_events() const override {return queue_.dropped();}

protected:
  void start(std::vector<std::function<void()>> producers)
  {
    running_ = producers.size();
    if (running_ == 0) {
      queue_.close();
      return;
    }
    for (auto & p : producers) {
      threads_.emplace_back([this, p = std::move(p)] {
          try {
            p();
          } catch (...) {
            std::lock_guard lock(mu_);
            if (!error_) {
              error_ = std::current_exception();
            }
          }
          if (running_.fetch_sub(1) == 1) {
            queue_.close();
          }
        });
    }
  }

  void push(std::string channel, Message msg)
  {
    queue_.push(SourceEvent{std::move(channel), std::move(msg), Clock::time_point{}});
  }

  const std::atomic<bool> & stopping() const noexcept {return stop_;}

  /// Stops and joins the producers. Derived destructors call this before
  /// their members go away.
  void shutdown()
  {
    stop_.store(true);
    queue_.close();
    for (auto & t : threads_) {
      if (t.joinable()) {
        t.join();
      }
    }
  }

private:
  BoundedQueue<SourceEvent> queue_;
  std::atomic<bool> stop_{false};
  std::atomic<std::size_t> running_{0};
  std::vector<std::thread> threads_;
  std::mutex mu_;
  std::exception_ptr error_;
};

std::size_t queue_capacity(const SensorSpec & spec)
{
  double total = 0.0;
  for (const auto & c : spec.channels) {
    total += c.nominal_rate_hz;
  }
  return std::max<std::size_t>(16, static_cast<std::size_t>(std::ceil(4.0 * total)));
}

std::optional<std::vector<std::uint8_t>> parse_hex_line(std::string_view line)
{
  if (const auto v = line.find("value:"); v != std::string_view::npos) {
    line = line.substr(v + 6);
  }
  std::vector<std::uint8_t> out;
  int hi = -1;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (c == '0' && i + 1 < line.size() && (line[i + 1] == 'x' || line[i + 1] == 'X') &&
      hi < 0)
    {
      ++i;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c)) || c == ':' || c == ',') {
      if (hi >= 0) {
        return std::nullopt;
      }
      continue;
    }
    if (!std::isxdigit(static_cast<unsigned char>(c))) {
      return std::nullopt;
    }
    const int nib = std::isdigit(static_cast<unsigned char>(c)) ? c - '0' :
      std::tolower(static_cast<unsigned char>(c)) - 'a' + 10;
    if (hi < 0) {
      hi = nib;
    } else {
      out.push_back(static_cast<std::uint8_t>(hi << 4 | nib));
      hi = -1;
    }
  }
  if (hi >= 0 || out.empty()) {
    return std::nullopt;
  }
  return out;
}

class PolarDeviceSource : public QueuedSource
{
public:
  PolarDeviceSource(const SensorSpec & spec, const DriverOptions & options)
  : QueuedSource(queue_capacity(spec)),
    reader_(std::make_shared<FdReader>(options.device_path))
  {
    const ChannelSpec * hr = spec.find("hr");
    const double rate = hr != nullptr && hr->nominal_rate_hz > 0 ? hr->nominal_rate_hz : 1.0;
    const bool enabled = hr != nullptr;
    const double speed = options.replay_speed;
    start({[this, rate, enabled, speed] {
        std::string line;
        const auto t0 = Clock::now();
        std::uint64_t k = 0;
        while (reader_->read_line(line, stopping())) {
          const auto bytes = parse_hex_line(line);
          if (!bytes) {
            continue;
          }
          try {
            const auto m = decode_hr_measurement(*bytes).measurement;
            if (reader_->regular() && speed > 0 &&
            !sleep_until(t0 + seconds(static_cast<double>(k) / (rate * speed)), stopping()))
            {
              return;
            }
            ++k;
            if (enabled) {
              push("hr", Message(static_cast<float>(m.hr)));
            }
          } catch (const CodecError &) {
          }
        }
      }});
  }

  ~PolarDeviceSource() override {shutdown();}

private:
  std::shared_ptr<FdReader> reader_;
};

class ZephyrDeviceSource : public QueuedSource
{
public:
  ZephyrDeviceSource(const SensorSpec & spec, const DriverOptions & options)
  : QueuedSource(queue_capacity(spec)),
    reader_(std::make_shared<FdReader>(options.device_path)), spec_(spec)
  {
    const double speed = options.replay_speed;
    start({[this, speed] {run(speed);}});
  }

  ~ZephyrDeviceSource() override {shutdown();}

private:
  void emit(const std::string & channel, Message msg)
  {
    if (spec_.find(channel) != nullptr) {
      push(channel, std::move(msg));
    }
  }

  double rate_of(std::string_view channel, double fallback) const
  {
    const ChannelSpec * c = spec_.find(channel);
    return c != nullptr && c->nominal_rate_hz > 0 ? c->nominal_rate_hz : fallback;
  }

  void run(double speed)
  {
    StrapDeframer deframer;
    std::vector<std::uint8_t> bytes;
    const auto t0 = Clock::now();
    std::map<std::uint8_t, std::uint64_t> counts;
    const std::map<std::uint8_t, double> rates{
      {bioharness::kSummaryId, rate_of("hr", 1.0)},
      {bioharness::kEcgId, rate_of("ecg_chunk", 256.0 / 63.0)},
      {bioharness::kBreathingId, rate_of("br_chunk", 1.008)},
    };
    while (reader_->read_some(bytes, stopping())) {
      for (const auto & f : deframer.feed(bytes)) {
        auto rate = rates.find(f.msg_id);
        if (rate == rates.end()) {
          continue;
        }
        if (reader_->regular() && speed > 0) {
          const double at = static_cast<double>(counts[f.msg_id]) / (rate->second * speed);
          if (!sleep_until(t0 + seconds(at), stopping())) {
            return;
          }
        }
        ++counts[f.msg_id];
        try {
          switch (f.msg_id) {
            case bioharness::kSummaryId: {
                const auto s = bioharness::decode_summary(f);
                emit("hr", Message(s.hr));
                emit("hrv", Message(s.hrv_ms));
                emit("br", Message(s.br));
                break;
              }
            case bioharness::kEcgId:
              emit("ecg_chunk", Message(bioharness::decode_waveform(f, bioharness::kEcgSamples)));
              break;
            case bioharness::kBreathingId:
              emit("br_chunk", Message(bioharness::decode_waveform(
                  f, bioharness::kBreathingSamples)));
              break;
          }
        } catch (const CodecError &) {
        }
      }
      bytes.clear();
    }
  }

  std::shared_ptr<FdReader> reader_;
  SensorSpec spec_;
};

/// Converts a bridge row to the channel's message kind, grouping single
/// samples into device-sized chunks where needed.
class RowMapper
{
public:
  RowMapper(const ChannelSpec & channel, const LslStreamInfo & info)
  : channel_(channel)
  {
    const std::size_t n = info.channels;
    bool ok = false;
    switch (channel.kind) {
      case MsgKind::kEmpty: ok = n == 0; break;
      case MsgKind::kF32:
      case MsgKind::kU8:
      case MsgKind::kU16: ok = n == 1; break;
      case MsgKind::kF32Array:
        if (channel.device_chunk != 0) {
          ok = n == 1 || n == channel.device_chunk;
          group_ = n == 1;
        } else {
          ok = n == channel.width;
        }
        break;
    }
    if (!ok) {
      throw FormatError("LSL stream " + info.name + " has " + std::to_string(n) +
              " channels, which does not fit " + channel.data_name);
    }
  }

  std::optional<Message> map(const LslSample & s)
  {
    switch (channel_.kind) {
      case MsgKind::kEmpty: return Message(Empty{});
      case MsgKind::kF32: return Message(s.values[0]);
      case MsgKind::kU8:
        return Message(static_cast<std::uint8_t>(std::clamp(std::lround(s.values[0]), 0L, 255L)));
      case MsgKind::kU16:
        return Message(
          static_cast<std::uint16_t>(std::clamp(std::lround(s.values[0]), 0L, 65535L)));
      case MsgKind::kF32Array:
        break;
    }
    if (!group_) {
      return Message(s.values);
    }
    pending_.push_back(s.values[0]);
    if (pending_.size() < channel_.device_chunk) {
      return std::nullopt;
    }
    return Message(std::exchange(pending_, {}));
  }

private:
  ChannelSpec channel_;
  bool group_ = false;
  std::vector<float> pending_;
};

struct LslInput
{
  std::string stream;
  std::string channel;
  std::filesystem::path path;
};

class LslBridgeSource : public QueuedSource
{
public:
  LslBridgeSource(const SensorSpec & spec, std::vector<LslInput> inputs, double speed)
  : QueuedSource(queue_capacity(spec))
  {
    // Regular files are parsed up front so they can share one time origin.
    struct Loaded
    {
      LslInput input;
      std::optional<LslStreamInfo> info;
      std::vector<LslSample> rows;
    };
    std::vector<Loaded> loaded;
    std::optional<double> t_origin;
    for (auto & in : inputs) {
      Loaded l{std::move(in), std::nullopt, {}};
      if (std::filesystem::is_regular_file(l.input.path)) {
        std::ifstream f(l.input.path);
        LslStreamReader reader(f);
        l.info = reader.info();
        RowMapper check(*spec.find(l.input.channel), *l.info);
        while (auto row = reader.next()) {
          l.rows.push_back(std::move(*row));
        }
        if (!l.rows.empty()) {
          t_origin = std::min(t_origin.value_or(l.rows.front().timestamp), l.rows.front().timestamp);
        }
      }
      loaded.push_back(std::move(l));
    }
    auto t0 = std::make_shared<Clock::time_point>();
    auto origin = t_origin.value_or(0.0);
    std::vector<std::function<void()>> producers;
    for (auto & l : loaded) {
      const ChannelSpec channel = *spec.find(l.input.channel);
      if (l.info) {
        producers.push_back(
          [this, channel, info = *l.info, rows = std::move(l.rows), speed, origin, t0] {
            RowMapper mapper(channel, info);
            for (const auto & r : rows) {
              if (speed > 0 &&
              !sleep_until(*t0 + seconds((r.timestamp - origin) / speed), stopping()))
              {
                return;
              }
              if (auto msg = mapper.map(r)) {
                push(channel.data_name, std::move(*msg));
              }
            }
          });
      } else {
        producers.push_back([this, channel, path = l.input.path] {
            FdReader reader(path.string());
            std::string line;
            std::size_t line_no = 0;
            std::optional<LslStreamInfo> info;
            while (!info) {
              if (!reader.read_line(line, stopping())) {
                return;
              }
              info = parse_lsl_header(line, ++line_no);
            }
            RowMapper mapper(channel, *info);
            while (reader.read_line(line, stopping())) {
              if (auto row = parse_lsl_row(line, *info, ++line_no)) {
                if (auto msg = mapper.map(*row)) {
                  push(channel.data_name, std::move(*msg));
                }
              }
            }
          });
      }
    }
    *t0 = Clock::now();
    start(std::move(producers));
  }
};

}  // namespace

std::unique_ptr<SampleSource> make_device_source(
  std::string_view driver, const SensorSpec & spec,
  const DriverOptions & options)
{
  if (driver != kPolarH10 && driver != kZephyrBioharness) {
    throw BackendUnavailable(
            "no device codec for " + std::string(driver) +
            "; its vendor stack is reached through --backend lsl");
  }
  if (options.device_path.empty()) {
    throw BackendUnavailable("device backend needs a device path");
  }
  if (driver == kPolarH10) {
    return std::make_unique<PolarDeviceSource>(spec, options);
  }
  return std::make_unique<ZephyrDeviceSource>(spec, options);
}

std::unique_ptr<SampleSource> make_lsl_source(
  std::string_view driver, const SensorSpec & spec,
  const DriverOptions & options)
{
  std::vector<std::pair<std::string, std::string>> candidates;
  for (const auto & [stream, channel] : lsl_stream_map(driver)) {
    if (spec.find(channel) != nullptr) {
      candidates.emplace_back(stream, channel);
    }
  }
  for (const auto & c : spec.channels) {
    if (c.category != ChannelCategory::kChunk || c.device_chunk != 0) {
      candidates.emplace_back(c.data_name, c.data_name);
    }
  }
  std::vector<LslInput> found;
  for (int attempt = 0;; ++attempt) {
    std::set<std::string> channels;
    for (const auto & [stream, channel] : candidates) {
      auto path = std::filesystem::path(options.lsl_dir) / (stream + ".csv");
      if (!channels.count(channel) && std::filesystem::exists(path)) {
        channels.insert(channel);
        found.push_back(LslInput{stream, channel, path});
      }
    }
    if (!found.empty() || attempt >= options.lsl_retries) {
      break;
    }
    std::this_thread::sleep_for(options.lsl_retry_interval);
  }
  if (found.empty()) {
    throw BackendUnavailable(
            "no LSL stream for " + std::string(driver) + " in " + options.lsl_dir + " after " +
            std::to_string(options.lsl_retries + 1) + " attempts");
  }
  return std::make_unique<LslBridgeSource>(spec, std::move(found), options.replay_speed);
}

}  // namespace biohub

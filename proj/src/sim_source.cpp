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

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <numbers>

#include "biohub/drivers.hpp"
#include "biohub/error.hpp"
#include "biohub/features.hpp"

namespace biohub
{

namespace
{

using Clock = std::chrono::steady_clock;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Pending
{
  double t = 0.0;
  Message msg;
};

/// Produces the next (stream time, message) of one channel.
using Step = std::function<Pending()>;

/// Periodic lane: event k at k / rate.
Step periodic(double rate, std::function<Message(double)> value)
{
  return [rate, value = std::move(value), k = std::uint64_t{0}]() mutable {
           const double t = static_cast<double>(k++) / rate;
           return Pending{t, value(t)};
         };
}

class SimSource : public SampleSource
{
public:
  SimSource(std::vector<std::pair<std::string, Step>> lanes, const DriverOptions & options)
  : realtime_(options.realtime), duration_(options.duration_s)
  {
    for (auto & [name, step] : lanes) {
      Lane l{std::move(name), std::move(step), {}};
      l.pending = l.step();
      lanes_.push_back(std::move(l));
    }
  }

  std::optional<SourceEvent> next(std::chrono::milliseconds) override
  {
    if (lanes_.empty()) {
      ended_ = true;
      return std::nullopt;
    }
    auto it = std::min_element(
      lanes_.begin(), lanes_.end(),
      [](const Lane & a, const Lane & b) {return a.pending.t < b.pending.t;});
    if (duration_ && it->pending.t >= *duration_) {
      ended_ = true;
      return std::nullopt;
    }
    if (!started_) {
      start_ = Clock::now();
      started_ = true;
    }
    SourceEvent ev{it->channel, std::move(it->pending.msg), Clock::time_point{}};
    if (realtime_) {
      ev.due = start_ + std::chrono::duration_cast<Clock::duration>(
        std::chrono::duration<double>(it->pending.t));
    }
    it->pending = it->step();
    return ev;
  }

  bool ended() const override {return ended_;}

private:
  struct Lane
  {
    std::string channel;
    Step step;
    Pending pending;
  };

  std::vector<Lane> lanes_;
  bool realtime_;
  std::optional<double> duration_;
  bool started_ = false;
  bool ended_ = false;
  Clock::time_point start_{};
};

// Per-lane stream ids keep every channel's noise independent.
enum Stream : std::uint64_t
{
  kStreamSt = 101, kStreamHr, kStreamAcc, kStreamBat, kStreamMet, kStreamMot, kStreamDev,
  kStreamBpm, kStreamHrv, kStreamBr, kStreamPowPreroll,
};

float gauss(sim::SimRng & rng, double sigma)
{
  return static_cast<float>(sigma * rng.normal());
}

class LaneBuilder
{
public:
  explicit LaneBuilder(const SensorSpec & spec)
  : spec_(spec) {}

  /// Adds a periodic lane when the sensor still has the channel.
  void add(std::string_view channel, std::function<Message(double)> value)
  {
    const ChannelSpec * c = spec_.find(channel);
    if (c == nullptr) {
      return;
    }
    lanes_.emplace_back(std::string(channel), periodic(c->nominal_rate_hz, std::move(value)));
  }

  void add_step(std::string_view channel, Step step)
  {
    if (spec_.find(channel) != nullptr) {
      lanes_.emplace_back(std::string(channel), std::move(step));
    }
  }

  double rate(std::string_view channel) const
  {
    const ChannelSpec * c = spec_.find(channel);
    return c != nullptr ? c->nominal_rate_hz : 0.0;
  }

  bool has(std::string_view channel) const {return spec_.find(channel) != nullptr;}

  /// Wraps a generator that yields one float per sample.
  template<typename Gen>
  std::function<Message(double)> samples(std::shared_ptr<Gen> gen)
  {
    return [gen](double) {return Message(gen->next());};
  }

  std::vector<std::pair<std::string, Step>> take() {return std::move(lanes_);}

private:
  const SensorSpec & spec_;
  std::vector<std::pair<std::string, Step>> lanes_;
};

float heart_rate_at(const sim::SimConfig & cfg, double t, sim::SimRng & rng)
{
  const double breath_hz = cfg.breath_rate_bpm / 60.0;
  return static_cast<float>(
    cfg.heart_rate_bpm + 2.0 * std::sin(kTwoPi * breath_hz * t) +
    cfg.noise_sigma * 25.0 * rng.normal());
}

void empatica_lanes(LaneBuilder & b, const sim::SimConfig & cfg)
{
  if (b.has("bvp")) {
    b.add("bvp", b.samples(std::make_shared<sim::PpgGenerator>(cfg, b.rate("bvp"))));
  }
  if (b.has("gsr")) {
    b.add("gsr", b.samples(std::make_shared<sim::GsrGenerator>(cfg, b.rate("gsr"))));
  }
  b.add(
    "st", [rng = std::make_shared<sim::SimRng>(cfg.seed, kStreamSt), cfg](double t) {
      return Message(static_cast<float>(
        33.0 + 0.3 * std::sin(kTwoPi * t / 120.0) + gauss(*rng, cfg.noise_sigma)));
    });
  b.add(
    "hr", [rng = std::make_shared<sim::SimRng>(cfg.seed, kStreamHr), cfg](double t) {
      return Message(heart_rate_at(cfg, t, *rng));
    });
  b.add_step(
    "ibi", [gen = std::make_shared<sim::IbiGenerator>(cfg), t = 0.0]() mutable {
      const float ibi = gen->next();
      t += ibi;
      return Pending{t, Message(ibi)};
    });
  b.add(
    "acc", [rng = std::make_shared<sim::SimRng>(cfg.seed, kStreamAcc), cfg](double t) {
      const double sway = 0.05 * std::sin(kTwoPi * 0.3 * t);
      const double s = 0.01 + cfg.noise_sigma * 0.5;
      return Message(std::vector<float>{
        static_cast<float>(sway) + gauss(*rng, s), gauss(*rng, s),
        static_cast<float>(std::sqrt(1.0 - sway * sway)) + gauss(*rng, s)});
    });
  b.add(
    "bat", [](double t) {
      return Message(static_cast<float>(std::max(0.0, 100.0 - t / 144.0)));
    });
  b.add_step(
    "tag", [k = std::uint64_t{0}]() mutable {
      return Pending{5.0 * static_cast<double>(k++), Message(Empty{})};
    });
}

/// Band power over the trailing two seconds of simulated EEG, pre-rolled so
/// that the first value already has a full window.
class PowLane
{
public:
  PowLane(const sim::SimConfig & cfg, double eeg_rate)
  : eeg_rate_(eeg_rate), window_(static_cast<std::size_t>(std::lround(2.0 * eeg_rate))),
    main_(cfg, eeg_rate, kEmotivEegChannels)
  {
    sim::SimConfig pre = cfg;
    pre.seed = cfg.seed ^ kStreamPowPreroll;
    sim::EegGenerator preroll(pre, eeg_rate, kEmotivEegChannels);
    for (std::size_t i = 0; i < window_; ++i) {
      history_.push_back(preroll.next());
    }
  }

  Message at(double t)
  {
    const auto target = static_cast<std::uint64_t>(std::floor(t * eeg_rate_ + 1e-9));
    while (consumed_ < target) {
      history_.push_back(main_.next());
      history_.pop_front();
      ++consumed_;
    }
    std::vector<float> out;
    out.reserve(kEmotivPowWidth);
    std::vector<float> channel(window_);
    for (std::size_t c = 0; c < kEmotivEegChannels; ++c) {
      for (std::size_t i = 0; i < window_; ++i) {
        channel[i] = history_[i][c];
      }
      for (double p : features::band_power(features::Window{channel, eeg_rate_})) {
        out.push_back(static_cast<float>(p));
      }
    }
    return Message(std::move(out));
  }

private:
  double eeg_rate_;
  std::size_t window_;
  sim::EegGenerator main_;
  std::deque<std::vector<float>> history_;
  std::uint64_t consumed_ = 0;
};

void emotiv_lanes(LaneBuilder & b, const sim::SimConfig & cfg)
{
  const double eeg_rate = b.has("eeg") ? b.rate("eeg") : 128.0;
  if (b.has("eeg")) {
    b.add(
      "eeg", [gen = std::make_shared<sim::EegGenerator>(cfg, eeg_rate, kEmotivEegChannels)](
        double) {return Message(gen->next());});
  }
  if (b.has("pow")) {
    b.add("pow", [lane = std::make_shared<PowLane>(cfg, eeg_rate)](double t) {
        return lane->at(t);
      });
  }
  b.add(
    "met", [rng = std::make_shared<sim::SimRng>(cfg.seed, kStreamMet),
    state = std::make_shared<std::vector<float>>(kEmotivMetrics.size(), 0.5f)](double) {
      for (float & v : *state) {
        v = std::clamp(v + gauss(*rng, 0.02), 0.0f, 1.0f);
      }
      return Message(*state);
    });
  b.add(
    "mot", [rng = std::make_shared<sim::SimRng>(cfg.seed, kStreamMot), cfg](double t) {
      const double yaw = 0.1 * std::sin(kTwoPi * 0.05 * t);
      const double s = 0.005 + cfg.noise_sigma * 0.5;
      const double mx = 0.2 * std::cos(yaw);
      const double my = -0.2 * std::sin(yaw);
      return Message(std::vector<float>{
        static_cast<float>(std::cos(yaw / 2)), 0.0f, 0.0f,
        static_cast<float>(std::sin(yaw / 2)),
        gauss(*rng, s), gauss(*rng, s), 1.0f + gauss(*rng, s),
        static_cast<float>(mx) + gauss(*rng, s), static_cast<float>(my) + gauss(*rng, s),
        0.4f + gauss(*rng, s)});
    });
  b.add(
    "dev", [rng = std::make_shared<sim::SimRng>(cfg.seed, kStreamDev)](double t) {
      std::vector<float> v{static_cast<float>(std::max(0.0, 100.0 - t / 216.0))};
      for (std::size_t c = 0; c < kEmotivEegChannels; ++c) {
        v.push_back(rng->uniform() < 0.05 ? 3.0f : 4.0f);
      }
      return Message(std::move(v));
    });
}

void shimmer_lanes(LaneBuilder & b, const sim::SimConfig & cfg)
{
  if (b.has("gsr")) {
    b.add("gsr", b.samples(std::make_shared<sim::GsrGenerator>(cfg, b.rate("gsr"))));
  }
  if (b.has("ppg")) {
    b.add("ppg", b.samples(std::make_shared<sim::PpgGenerator>(cfg, b.rate("ppg"))));
  }
}

void polar_lanes(LaneBuilder & b, const sim::SimConfig & cfg)
{
  b.add(
    "hr", [rng = std::make_shared<sim::SimRng>(cfg.seed, kStreamHr), cfg](double t) {
      return Message(heart_rate_at(cfg, t, *rng));
    });
}

void vernier_lanes(LaneBuilder & b, const sim::SimConfig & cfg)
{
  b.add(
    "bpm", [rng = std::make_shared<sim::SimRng>(cfg.seed, kStreamBpm), cfg](double) {
      return Message(static_cast<float>(
        cfg.breath_rate_bpm + cfg.noise_sigma * 10.0 * rng->normal()));
    });
  if (b.has("force")) {
    b.add(
      "force",
      b.samples(std::make_shared<sim::RespirationGenerator>(cfg, b.rate("force"))));
  }
}

/// Device-chunk lane: each message carries `size` consecutive samples.
template<typename Gen>
std::function<Message(double)> chunked(std::shared_ptr<Gen> gen, std::size_t size)
{
  return [gen, size](double) {
           std::vector<float> out(size);
           for (auto & v : out) {
             v = gen->next();
           }
           return Message(std::move(out));
         };
}

void zephyr_lanes(LaneBuilder & b, const SensorSpec & spec, const sim::SimConfig & cfg)
{
  b.add(
    "hr", [rng = std::make_shared<sim::SimRng>(cfg.seed, kStreamHr), cfg](double t) {
      const float hr = std::clamp(heart_rate_at(cfg, t, *rng), 0.0f, 255.0f);
      return Message(static_cast<std::uint8_t>(std::lround(hr)));
    });
  b.add(
    "hrv", [rng = std::make_shared<sim::SimRng>(cfg.seed, kStreamHrv)](double) {
      const double ms = std::clamp(45.0 + 5.0 * rng->normal(), 0.0, 65535.0);
      return Message(static_cast<std::uint16_t>(std::lround(ms)));
    });
  b.add(
    "br", [rng = std::make_shared<sim::SimRng>(cfg.seed, kStreamBr), cfg](double) {
      return Message(static_cast<float>(
        cfg.breath_rate_bpm + cfg.noise_sigma * 10.0 * rng->normal()));
    });
  if (const ChannelSpec * ecg = spec.find("ecg_chunk")) {
    const double sample_rate = ecg->nominal_rate_hz * static_cast<double>(ecg->device_chunk);
    b.add("ecg_chunk", chunked(std::make_shared<sim::EcgGenerator>(cfg, sample_rate),
      ecg->device_chunk));
  }
  if (const ChannelSpec * br = spec.find("br_chunk")) {
    const double sample_rate = br->nominal_rate_hz * static_cast<double>(br->device_chunk);
    b.add("br_chunk", chunked(std::make_shared<sim::RespirationGenerator>(cfg, sample_rate),
      br->device_chunk));
  }
}

}  // namespace

std::unique_ptr<SampleSource> make_sim_source(
  std::string_view driver, const SensorSpec & spec,
  const DriverOptions & options)
{
  options.sim.validate();
  for (const auto & c : spec.channels) {
    if (c.nominal_rate_hz < 0.0 || !std::isfinite(c.nominal_rate_hz)) {
      throw ConfigError("channel " + c.data_name + " has an invalid rate");
    }
  }
  const sim::SimConfig & cfg = options.sim;
  LaneBuilder b(spec);
  if (driver == kEmpaticaE4) {
    empatica_lanes(b, cfg);
  } else if (driver == kEmotivInsight) {
    emotiv_lanes(b, cfg);
  } else if (driver == kShimmer3Gsr) {
    shimmer_lanes(b, cfg);
  } else if (driver == kPolarH10) {
    polar_lanes(b, cfg);
  } else if (driver == kVernierBelt) {
    vernier_lanes(b, cfg);
  } else if (driver == kZephyrBioharness) {
    zephyr_lanes(b, spec, cfg);
  } else {
    throw ConfigError("unknown sensor '" + std::string(driver) + "'");
  }
  return std::make_unique<SimSource>(b.take(), options);
}

}  // namespace biohub

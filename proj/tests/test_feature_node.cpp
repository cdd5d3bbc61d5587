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
#include <chrono>
#include <cmath>
#include <future>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "biohub/broker.hpp"
#include "biohub/error.hpp"
#include "biohub/feature_node.hpp"

namespace biohub
{
namespace
{

using namespace std::chrono_literals;

FeatureSpec hrv_spec(FeatureKind k, double window = 30.0, double overlap = 0.5)
{
  FeatureSpec f;
  f.input = TopicName::parse("/biosensors/empatica_e4/ibi");
  f.feature = k;
  f.window_s = window;
  f.overlap = overlap;
  return f;
}

struct HrvOracle
{
  double mean_hr;
  double sdnn;
  double rmssd;
};

HrvOracle hrv_oracle(const std::vector<double> & ibi)
{
  const double n = static_cast<double>(ibi.size());
  const double mean = std::accumulate(ibi.begin(), ibi.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : ibi) {
    ss += (x - mean) * (x - mean);
  }
  double sd = 0.0;
  for (std::size_t i = 1; i < ibi.size(); ++i) {
    sd += (ibi[i] - ibi[i - 1]) * (ibi[i] - ibi[i - 1]);
  }
  return {60.0 / mean, 1000.0 * std::sqrt(ss / n),
    1000.0 * std::sqrt(sd / static_cast<double>(ibi.size() - 1))};
}

/// Brute-force windows: at each emission the intervals lying wholly inside
/// the last `window` seconds of beat time.
std::vector<std::vector<double>> hrv_windows(
  const std::vector<double> & ibi, double window, double overlap)
{
  std::vector<std::vector<double>> out;
  const double hop = window * (1.0 - overlap);
  double clock = 0.0;
  double last = 0.0;
  for (std::size_t k = 0; k < ibi.size(); ++k) {
    clock += ibi[k];
    if (clock >= window && clock - last >= hop - 1e-9) {
      last = clock;
      std::vector<double> w;
      double end = clock;
      for (std::size_t j = k + 1; j-- > 0; ) {
        const double start = end - ibi[j];
        if (start < clock - window - 1e-9) {
          break;
        }
        w.insert(w.begin(), ibi[j]);
        end = start;
      }
      out.push_back(std::move(w));
    }
  }
  return out;
}

TEST(FeatureConfig, DefaultsFromDriverTables)
{
  const auto cfg = FeatureConfig::parse(R"({"features": [
    {"input": "/biosensors/empatica_e4/ibi", "feature": "sdnn"},
    {"input": "/biosensors/emotiv_insight/eeg_chunk", "feature": "band_power",
     "channel": 2, "name": "bands_t8"},
    {"input": "/biosensors/vernier_respiration_belt/force", "feature": "breath_rate"},
    {"input": "/biosensors/zephyr_bioharness/br_chunk", "feature": "breath_rate",
     "rate_hz": 18.144}
  ]})");
  ASSERT_EQ(cfg.features.size(), 4u);
  EXPECT_DOUBLE_EQ(cfg.features[0].window_s, 30.0);
  EXPECT_DOUBLE_EQ(cfg.features[0].overlap, 0.5);
  EXPECT_EQ(cfg.features[0].output().str(), "/biosensors/empatica_e4/features/sdnn");
  EXPECT_EQ(cfg.features[0].output_kind(), MsgKind::kF32);
  EXPECT_DOUBLE_EQ(cfg.features[1].window_s, 2.0);
  EXPECT_DOUBLE_EQ(cfg.features[1].rate_hz, 128.0);
  EXPECT_EQ(cfg.features[1].channels, 5u);
  EXPECT_EQ(cfg.features[1].channel, 2u);
  EXPECT_EQ(cfg.features[1].output().str(), "/biosensors/emotiv_insight/features/bands_t8");
  EXPECT_EQ(cfg.features[1].output_kind(), MsgKind::kF32Array);
  EXPECT_DOUBLE_EQ(cfg.features[2].rate_hz, 50.0);
  EXPECT_DOUBLE_EQ(cfg.features[2].window_s, 30.0);
  EXPECT_DOUBLE_EQ(cfg.features[3].rate_hz, 18.144);
}

TEST(FeatureConfig, RejectsBadInput)
{
  const char * bad[] = {
    "not json",
    R"({"x": []})",
    R"({"features": [1]})",
    R"({"features": [{"input": "/biosensors/empatica_e4/ibi", "feature": "lf_hf"}]})",
    R"({"features": [{"input": "/bio/e4/ibi", "feature": "sdnn"}]})",
    R"({"features": [{"input": "/biosensors/e4/features/x", "feature": "sdnn"}]})",
    R"({"features": [{"input": "/biosensors/empatica_e4/ibi", "feature": "sdnn",
        "overlap": 1.0}]})",
    R"({"features": [{"input": "/biosensors/empatica_e4/ibi", "feature": "sdnn",
        "window_s": 0}]})",
    R"({"features": [{"input": "/biosensors/empatica_e4/ibi", "feature": "sdnn",
        "colour": "red"}]})",
    R"({"features": [{"input": "/biosensors/custom/x", "feature": "breath_rate"}]})",
    R"({"features": [{"input": "/biosensors/vernier_respiration_belt/force",
        "feature": "breath_rate", "window_s": 10}]})",
    R"({"features": [{"input": "/biosensors/emotiv_insight/eeg", "feature": "band_power",
        "channel": 5}]})",
    R"({"features": [{"input": "/biosensors/vernier_respiration_belt/bpm",
        "feature": "breath_rate"}]})",
    R"({"features": [{"input": "/biosensors/custom/x", "feature": "band_power",
        "rate_hz": 64}]})",
    R"({"features": [{"input": "/biosensors/empatica_e4/ibi", "feature": "sdnn",
        "name": "Bad Name"}]})",
    R"({"features": [{"input": "/biosensors/empatica_e4/ibi", "feature": "sdnn",
        "window_s": "30"}]})",
  };
  for (const char * text : bad) {
    EXPECT_THROW(FeatureConfig::parse(text), ConfigError) << text;
  }
  EXPECT_THROW(FeatureConfig::load("/nonexistent/features.json"), ConfigError);
}

TEST(FeatureNode, RejectsDuplicateOutputs)
{
  FeatureConfig cfg;
  cfg.features = {hrv_spec(FeatureKind::kSdnn), hrv_spec(FeatureKind::kSdnn)};
  EXPECT_THROW(FeatureNode{cfg}, ConfigError);
  EXPECT_THROW(FeatureNode{FeatureConfig{}}, ConfigError);
}

TEST(FeatureStream, ConstantIntervals)
{
  FeatureStream hr(hrv_spec(FeatureKind::kMeanHr));
  FeatureStream sd(hrv_spec(FeatureKind::kSdnn));
  std::vector<float> hr_out;
  std::vector<float> sd_out;
  for (int i = 0; i < 160; ++i) {
    for (const auto & m : hr.feed(Message(0.75f))) {
      hr_out.push_back(m.get<float>());
    }
    for (const auto & m : sd.feed(Message(0.75f))) {
      sd_out.push_back(m.get<float>());
    }
  }
  // 120 s of beat time: windows end at 30, 45, ..., 120 s.
  ASSERT_EQ(hr_out.size(), 7u);
  ASSERT_EQ(sd_out.size(), 7u);
  for (float v : hr_out) {
    EXPECT_NEAR(v, 80.0, 1e-3);
  }
  for (float v : sd_out) {
    EXPECT_NEAR(v, 0.0, 1e-2);
  }
}

TEST(FeatureStream, HrvMatchesBruteForceWindows)
{
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::uniform_real_distribution<double> ibi_dist(0.4, 1.4);
    std::uniform_real_distribution<double> window_dist(5.0, 40.0);
    std::uniform_real_distribution<double> overlap_dist(0.0, 0.9);
    const double window = window_dist(rng);
    const double overlap = overlap_dist(rng);
    std::vector<double> ibi(200);
    for (auto & x : ibi) {
      x = static_cast<float>(ibi_dist(rng));
    }
    const auto windows = hrv_windows(ibi, window, overlap);
    for (FeatureKind k : {FeatureKind::kMeanHr, FeatureKind::kSdnn, FeatureKind::kRmssd}) {
      FeatureStream s(hrv_spec(k, window, overlap));
      std::vector<float> got;
      for (double x : ibi) {
        for (const auto & m : s.feed(Message(static_cast<float>(x)))) {
          got.push_back(m.get<float>());
        }
      }
      ASSERT_EQ(got.size(), windows.size()) << "trial " << trial;
      for (std::size_t i = 0; i < got.size(); ++i) {
        const auto o = hrv_oracle(windows[i]);
        const double want = k == FeatureKind::kMeanHr ? o.mean_hr :
          k == FeatureKind::kSdnn ? o.sdnn : o.rmssd;
        EXPECT_NEAR(got[i], want, 1e-4 * std::max(1.0, std::abs(want)))
          << "trial " << trial << " window " << i;
      }
    }
  }
}

TEST(FeatureStream, InvalidIntervalsAreSkipped)
{
  FeatureStream s(hrv_spec(FeatureKind::kMeanHr, 5.0));
  EXPECT_TRUE(s.feed(Message(-1.0f)).empty());
  EXPECT_TRUE(s.feed(Message(std::nanf(""))).empty());
  EXPECT_EQ(s.skipped(), 2u);
  EXPECT_TRUE(s.feed(Message(Empty{})).empty());
}

TEST(FeatureStream, SampleWindowCadence)
{
  // Emissions after n samples: floor((n - N) / hop) + 1 once n >= N.
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    FeatureSpec f;
    f.input = TopicName::parse("/biosensors/emotiv_insight/eeg_chunk");
    f.feature = FeatureKind::kBandPower;
    f.rate_hz = 128.0;
    f.window_s = 2.0 + static_cast<double>(rng() % 5);
    f.overlap = static_cast<double>(rng() % 90) / 100.0;
    f.channels = 1;
    FeatureStream s(f);
    const std::size_t big_n = static_cast<std::size_t>(std::lround(f.window_s * 128.0));
    const std::size_t hop = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(static_cast<double>(big_n) * (1.0 - f.overlap))));
    const std::size_t n = 128 * 10 + rng() % 500;
    std::size_t count = 0;
    std::size_t fed = 0;
    while (fed < n) {
      const std::size_t len = std::min<std::size_t>(1 + rng() % 200, n - fed);
      std::vector<float> chunk(len);
      for (std::size_t i = 0; i < len; ++i) {
        chunk[i] = static_cast<float>(std::sin(0.3 * static_cast<double>(fed + i)));
      }
      fed += len;
      count += s.feed(Message(std::move(chunk))).size();
    }
    EXPECT_EQ(count, (n - big_n) / hop + 1) << "trial " << trial;
  }
}

TEST(FeatureStream, BandPowerSelectsChannel)
{
  FeatureSpec f;
  f.input = TopicName::parse("/biosensors/emotiv_insight/eeg");
  f.feature = FeatureKind::kBandPower;
  f.rate_hz = 128.0;
  f.window_s = 2.0;
  f.channels = 5;
  f.channel = 3;
  FeatureStream s(f);
  std::vector<Message> out;
  for (int i = 0; i < 256; ++i) {
    const double t = i / 128.0;
    std::vector<float> sample(5, 0.0f);
    for (std::size_t c = 0; c < 5; ++c) {
      sample[c] = static_cast<float>(std::sin(2.0 * std::numbers::pi * 20.0 * t));
    }
    sample[3] = static_cast<float>(std::sin(2.0 * std::numbers::pi * 10.0 * t));
    for (auto & m : s.feed(Message(std::move(sample)))) {
      out.push_back(std::move(m));
    }
  }
  ASSERT_EQ(out.size(), 1u);
  const auto & bands = out[0].get<std::vector<float>>();
  ASSERT_EQ(bands.size(), 5u);
  const double total = std::accumulate(bands.begin(), bands.end(), 0.0);
  EXPECT_GT(bands[1] / total, 0.9);
  // Hann spectrum of a bin-centred unit sine: 1/8 at the peak, 1/32 at each
  // neighbour, averaged over the 8 alpha bins.
  EXPECT_NEAR(bands[1], (1.0 / 8.0 + 2.0 / 32.0) / 8.0, 1e-5);
}

TEST(FeatureStream, BreathRateFromChunks)
{
  FeatureSpec f;
  f.input = TopicName::parse("/biosensors/vernier_respiration_belt/force_chunk");
  f.feature = FeatureKind::kBreathRate;
  f.rate_hz = 50.0;
  f.window_s = 30.0;
  FeatureStream s(f);
  std::vector<float> rates;
  for (int c = 0; c < 60; ++c) {
    std::vector<float> chunk(50);
    for (int i = 0; i < 50; ++i) {
      const double t = (c * 50 + i) / 50.0;
      chunk[static_cast<std::size_t>(i)] =
        static_cast<float>(20.0 + 2.0 * std::sin(2.0 * std::numbers::pi * 0.25 * t));
    }
    for (const auto & m : s.feed(Message(std::move(chunk)))) {
      rates.push_back(m.get<float>());
    }
  }
  ASSERT_EQ(rates.size(), 3u);
  for (float r : rates) {
    EXPECT_NEAR(r, 15.0, 1.0);
  }
}

TEST(FeatureStream, FlatBreathingIsSkipped)
{
  FeatureSpec f;
  f.input = TopicName::parse("/biosensors/vernier_respiration_belt/force");
  f.feature = FeatureKind::kBreathRate;
  f.rate_hz = 10.0;
  f.window_s = 20.0;
  FeatureStream s(f);
  std::size_t out = 0;
  for (int i = 0; i < 400; ++i) {
    out += s.feed(Message(1.0f)).size();
  }
  EXPECT_EQ(out, 0u);
  EXPECT_EQ(s.skipped(), 3u);
}

TEST(FeatureNode, PublishesOverBus)
{
  Broker broker(Endpoint::parse("127.0.0.1:0"));
  FeatureConfig cfg;
  cfg.features = {hrv_spec(FeatureKind::kMeanHr, 10.0), hrv_spec(FeatureKind::kRmssd, 10.0)};
  FeatureNode node(cfg);
  ASSERT_EQ(node.outputs().size(), 2u);

  BusClient sub(broker.endpoint());
  sub.subscribe("/biosensors/*/features/*");
  sub.list_topics();

  std::atomic<bool> stop{false};
  std::promise<void> ready;
  auto fut = std::async(std::launch::async, [&] {
        BusClient client(broker.endpoint());
        node.run(client, stop, [&] {ready.set_value();});
      });
  ready.get_future().wait();

  BusClient pub(broker.endpoint());
  const auto h = pub.announce(TopicName::parse("/biosensors/empatica_e4/ibi"), MsgKind::kF32);
  for (int i = 0; i < 40; ++i) {
    pub.publish(h, Message(0.5f));
  }
  // 20 s of beat time, 10 s windows, 5 s hop: windows end at 10, 15, 20 s.
  std::vector<float> hr;
  std::vector<float> rmssd;
  const auto deadline = std::chrono::steady_clock::now() + 5s;
  while ((hr.size() < 3 || rmssd.size() < 3) && std::chrono::steady_clock::now() < deadline) {
    auto f = sub.next_frame(100ms);
    if (!f) {
      continue;
    }
    if (f->topic.str() == "/biosensors/empatica_e4/features/mean_hr") {
      hr.push_back(f->msg.get<float>());
    } else if (f->topic.str() == "/biosensors/empatica_e4/features/rmssd") {
      rmssd.push_back(f->msg.get<float>());
    }
  }
  stop = true;
  fut.get();
  ASSERT_EQ(hr.size(), 3u);
  ASSERT_EQ(rmssd.size(), 3u);
  for (float v : hr) {
    EXPECT_NEAR(v, 120.0, 1e-3);
  }
  for (float v : rmssd) {
    EXPECT_NEAR(v, 0.0, 1e-3);
  }
  EXPECT_EQ(node.stats().frames_in, 40u);
  EXPECT_EQ(node.stats().published, 6u);
}

}  // namespace
}  // namespace biohub

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

#include "biohub/feature_node.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

#include "biohub/drivers.hpp"
#include "biohub/error.hpp"
#include "biohub/features.hpp"

namespace biohub
{

namespace
{

constexpr std::string_view kChunkSuffix = "_chunk";

bool is_hrv(FeatureKind k)
{
  return k == FeatureKind::kMeanHr || k == FeatureKind::kSdnn || k == FeatureKind::kRmssd;
}

double default_window(FeatureKind k)
{
  switch (k) {
    case FeatureKind::kBandPower: return 2.0;
    case FeatureKind::kBreathRate: return 30.0;
    default: return 30.0;
  }
}

/// Rate and width of the raw channel behind `topic`, when a driver knows it.
std::optional<std::pair<double, std::size_t>> driver_channel(const TopicName & topic)
{
  const auto & names = driver_names();
  if (std::find(names.begin(), names.end(), topic.sensor_name()) == names.end()) {
    return std::nullopt;
  }
  const SensorSpec spec = driver_spec(topic.sensor_name());
  std::string data = topic.data_name();
  const ChannelSpec * c = spec.find(data);
  if (c != nullptr && c->category == ChannelCategory::kChunk) {
    if (c->device_chunk != 0) {
      return std::make_pair(c->nominal_rate_hz * static_cast<double>(c->device_chunk),
               std::size_t{1});
    }
    c = spec.find(data.substr(0, data.size() - kChunkSuffix.size()));
  }
  if (c == nullptr || c->nominal_rate_hz <= 0.0) {
    return std::nullopt;
  }
  return std::make_pair(c->nominal_rate_hz, c->width);
}

}  // namespace

FeatureKind feature_kind_from_string(std::string_view s)
{
  if (s == "mean_hr") {
    return FeatureKind::kMeanHr;
  }
  if (s == "sdnn") {
    return FeatureKind::kSdnn;
  }
  if (s == "rmssd") {
    return FeatureKind::kRmssd;
  }
  if (s == "breath_rate") {
    return FeatureKind::kBreathRate;
  }
  if (s == "band_power") {
    return FeatureKind::kBandPower;
  }
  throw ConfigError("unknown feature '" + std::string(s) +
          "' (mean_hr, sdnn, rmssd, breath_rate, band_power)");
}

std::string_view to_string(FeatureKind k) noexcept
{
  switch (k) {
    case FeatureKind::kMeanHr: return "mean_hr";
    case FeatureKind::kSdnn: return "sdnn";
    case FeatureKind::kRmssd: return "rmssd";
    case FeatureKind::kBreathRate: return "breath_rate";
    case FeatureKind::kBandPower: return "band_power";
  }
  return "unknown";
}

TopicName FeatureSpec::output() const
{
  return TopicName(input.sensor_name(), name.empty() ? std::string(to_string(feature)) : name,
           true);
}

MsgKind FeatureSpec::output_kind() const noexcept
{
  return feature == FeatureKind::kBandPower ? MsgKind::kF32Array : MsgKind::kF32;
}

FeatureConfig FeatureConfig::parse(std::string_view json_text)
{
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error & e) {
    throw ConfigError(std::string("feature config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("features") || !doc["features"].is_array()) {
    throw ConfigError("feature config needs a \"features\" array");
  }
  FeatureConfig cfg;
  std::size_t index = 0;
  for (const auto & item : doc["features"]) {
    const std::string where = "features[" + std::to_string(index++) + "]";
    try {
      if (!item.is_object()) {
        throw ConfigError("expected an object");
      }
      for (const auto & [key, value] : item.items()) {
        static const std::set<std::string> known{
          "input", "feature", "name", "window_s", "overlap", "rate_hz", "channels", "channel"};
        if (!known.count(key)) {
          throw ConfigError("unknown key '" + key + "'");
        }
      }
      FeatureSpec f;
      try {
        f.input = TopicName::parse(item.at("input").get<std::string>());
      } catch (const TopicError & e) {
        throw ConfigError(e.what());
      }
      if (f.input.is_feature()) {
        throw ConfigError("input must be a sensor topic, not a feature topic");
      }
      f.feature = feature_kind_from_string(item.at("feature").get<std::string>());
      f.name = item.value("name", std::string(to_string(f.feature)));
      f.window_s = item.value("window_s", default_window(f.feature));
      f.overlap = item.value("overlap", 0.5);
      const auto known = driver_channel(f.input);
      f.rate_hz = item.value("rate_hz", known ? known->first : 0.0);
      f.channels = item.value("channels", known ? known->second : std::size_t{1});
      f.channel = item.value("channel", std::size_t{0});
      (void)f.output();
      FeatureStream check(f);
      cfg.features.push_back(std::move(f));
    } catch (const nlohmann::json::exception & e) {
      throw ConfigError(where + ": " + e.what());
    } catch (const TopicError & e) {
      throw ConfigError(where + ": bad output name: " + e.what());
    } catch (const ConfigError & e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  return cfg;
}

FeatureConfig FeatureConfig::load(const std::string & path)
{
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open feature config " + path);
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

FeatureStream::FeatureStream(FeatureSpec spec)
: spec_(std::move(spec)), hrv_(is_hrv(spec_.feature))
{
  if (!(spec_.window_s > 0.0) || !std::isfinite(spec_.window_s)) {
    throw ConfigError("window_s must be positive");
  }
  if (!(spec_.overlap >= 0.0 && spec_.overlap < 1.0)) {
    throw ConfigError("overlap must be in [0, 1)");
  }
  if (spec_.channels == 0 || spec_.channel >= spec_.channels) {
    throw ConfigError("channel index out of range");
  }
  if (!hrv_) {
    if (!(spec_.rate_hz > 0.0) || !std::isfinite(spec_.rate_hz)) {
      throw ConfigError(std::string(to_string(spec_.feature)) + " needs rate_hz");
    }
    if (spec_.feature == FeatureKind::kBreathRate && spec_.window_s < 20.0) {
      throw ConfigError("breath_rate needs a window of at least 20 s");
    }
    window_samples_ = static_cast<std::size_t>(std::lround(spec_.window_s * spec_.rate_hz));
    if (window_samples_ < 2) {
      throw ConfigError("window holds fewer than 2 samples");
    }
    hop_samples_ = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(
        static_cast<double>(window_samples_) * (1.0 - spec_.overlap))));
    // Surfaces rate and length problems at configuration time.
    std::vector<float> probe(window_samples_);
    for (std::size_t i = 0; i < probe.size(); ++i) {
      probe[i] = static_cast<float>(std::sin(0.5 * static_cast<double>(i)));
    }
    try {
      const features::Window w{probe, spec_.rate_hz};
      if (spec_.feature == FeatureKind::kBandPower) {
        features::band_power(w);
      } else {
        features::breath_rate(w);
      }
    } catch (const InsufficientData & e) {
      throw ConfigError(e.what());
    } catch (const InvalidData &) {
    }
  }
}

std::vector<Message> FeatureStream::feed(const Message & msg)
{
  std::vector<double> samples;
  switch (msg.kind()) {
    case MsgKind::kF32:
    case MsgKind::kU8:
    case MsgKind::kU16:
      samples = msg.as_doubles();
      break;
    case MsgKind::kF32Array: {
        const auto & v = msg.get<std::vector<float>>();
        for (std::size_t i = spec_.channel; i < v.size(); i += spec_.channels) {
          samples.push_back(v[i]);
        }
        break;
      }
    case MsgKind::kEmpty:
      return {};
  }
  std::vector<Message> out;
  for (double x : samples) {
    if (hrv_) {
      if (!(x > 0.0) || !std::isfinite(x)) {
        ++skipped_;
        continue;
      }
      beat_clock_ += x;
      values_.push_back(x);
      beat_times_.push_back(beat_clock_);
      while (!beat_times_.empty() && beat_times_.front() - values_.front() <
        beat_clock_ - spec_.window_s - 1e-9)
      {
        beat_times_.pop_front();
        values_.pop_front();
      }
      const double hop = spec_.window_s * (1.0 - spec_.overlap);
      if (beat_clock_ >= spec_.window_s && beat_clock_ - last_emit_ >= hop - 1e-9) {
        last_emit_ = beat_clock_;
        if (auto m = compute()) {
          out.push_back(std::move(*m));
        }
      }
    } else {
      values_.push_back(x);
      if (values_.size() > window_samples_) {
        values_.pop_front();
      }
      ++since_emit_;
      if (values_.size() == window_samples_ && since_emit_ >= hop_samples_) {
        since_emit_ = 0;
        if (auto m = compute()) {
          out.push_back(std::move(*m));
        }
      }
    }
  }
  return out;
}

std::optional<Message> FeatureStream::compute()
{
  try {
    if (hrv_) {
      const std::vector<double> ibi(values_.begin(), values_.end());
      double v = 0.0;
      switch (spec_.feature) {
        case FeatureKind::kMeanHr: v = features::mean_hr_from_ibi(ibi); break;
        case FeatureKind::kSdnn: v = features::sdnn_ms(ibi); break;
        default: v = features::rmssd_ms(ibi); break;
      }
      ++emitted_;
      return Message(static_cast<float>(v));
    }
    const std::vector<float> window(values_.begin(), values_.end());
    const features::Window w{window, spec_.rate_hz};
    if (spec_.feature == FeatureKind::kBreathRate) {
      ++emitted_;
      return Message(static_cast<float>(features::breath_rate(w)));
    }
    std::vector<float> bands;
    for (double p : features::band_power(w)) {
      bands.push_back(static_cast<float>(p));
    }
    ++emitted_;
    return Message(std::move(bands));
  } catch (const InsufficientData &) {
  } catch (const InvalidData &) {
  }
  ++skipped_;
  return std::nullopt;
}

FeatureNode::FeatureNode(const FeatureConfig & config)
{
  if (config.features.empty()) {
    throw ConfigError("feature config lists no features");
  }
  std::set<std::string> seen;
  for (const auto & f : config.features) {
    if (!seen.insert(f.output().str()).second) {
      throw ConfigError("two features publish " + f.output().str());
    }
    streams_.emplace_back(f);
  }
}

std::vector<TopicName> FeatureNode::outputs() const
{
  std::vector<TopicName> out;
  for (const auto & s : streams_) {
    out.push_back(s.spec().output());
  }
  return out;
}

void FeatureNode::run(
  BusClient & client, const std::atomic<bool> & stop,
  const std::function<void()> & on_ready)
{
  std::vector<TopicHandle> handles;
  std::set<std::string> inputs;
  for (const auto & s : streams_) {
    handles.push_back(client.announce(s.spec().output(), s.spec().output_kind()));
    inputs.insert(s.spec().input.str());
  }
  for (const auto & in : inputs) {
    client.subscribe(in);
  }
  client.list_topics();
  if (on_ready) {
    on_ready();
  }
  while (!stop.load()) {
    auto f = client.next_frame(std::chrono::milliseconds(50));
    if (!f) {
      continue;
    }
    ++stats_.frames_in;
    for (std::size_t i = 0; i < streams_.size(); ++i) {
      if (streams_[i].spec().input != f->topic) {
        continue;
      }
      const auto before = streams_[i].skipped();
      for (const auto & m : streams_[i].feed(f->msg)) {
        client.publish(handles[i], m);
        ++stats_.published;
      }
      stats_.skipped_windows += streams_[i].skipped() - before;
    }
  }
}

}  // namespace biohub

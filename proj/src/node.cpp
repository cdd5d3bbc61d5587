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

#include "biohub/node.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <thread>
#include <utility>

#include "biohub/error.hpp"

namespace biohub
{

namespace
{

constexpr std::string_view kChunkSuffix = "_chunk";

std::string_view trim(std::string_view s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_bool(std::string_view v, std::string_view key)
{
  if (v == "true" || v == "1" || v == "True") {
    return true;
  }
  if (v == "false" || v == "0" || v == "False") {
    return false;
  }
  throw ConfigError("expected true/false for " + std::string(key) + ", got '" +
          std::string(v) + "'");
}

}  // namespace

std::string_view to_string(ChannelCategory c) noexcept
{
  switch (c) {
    case ChannelCategory::kRaw: return "raw";
    case ChannelCategory::kChunk: return "chunk";
    case ChannelCategory::kHardware: return "hardware";
  }
  return "unknown";
}

const ChannelSpec * SensorSpec::find(std::string_view data_name) const noexcept
{
  for (const auto & c : channels) {
    if (c.data_name == data_name) {
      return &c;
    }
  }
  return nullptr;
}

std::vector<TopicName> SensorSpec::topics() const
{
  std::vector<TopicName> out;
  out.reserve(channels.size());
  for (const auto & c : channels) {
    out.emplace_back(sensor_name, c.data_name);
  }
  return out;
}

void SensorSpec::validate() const
{
  if (!is_valid_token(sensor_name)) {
    throw ConfigError("invalid sensor name '" + sensor_name + "'");
  }
  for (const auto & c : channels) {
    if (!is_valid_token(c.data_name)) {
      throw ConfigError("invalid channel name '" + c.data_name + "'");
    }
    if (c.category != ChannelCategory::kChunk) {
      if (c.device_chunk != 0) {
        throw ConfigError("only chunk channels take a device chunk size");
      }
      continue;
    }
    if (c.kind != MsgKind::kF32Array) {
      throw ConfigError("chunk channel " + c.data_name + " must carry Float32MultiArray");
    }
    if (!c.data_name.ends_with(kChunkSuffix) || c.data_name.size() == kChunkSuffix.size()) {
      throw ConfigError("chunk channel " + c.data_name + " must be named <raw>_chunk");
    }
    if (c.device_chunk == 0) {
      const auto source = std::string_view(c.data_name).substr(
        0, c.data_name.size() - kChunkSuffix.size());
      const ChannelSpec * raw = find(source);
      if (raw == nullptr || raw->category != ChannelCategory::kRaw) {
        throw ConfigError("chunk channel " + c.data_name + " has no raw source channel");
      }
      if (raw->kind != MsgKind::kF32 && raw->kind != MsgKind::kF32Array) {
        throw ConfigError("chunk source " + raw->data_name + " is not Float32 data");
      }
    }
  }
}

NodeParams apply_param(NodeParams params, const ParamCommand & cmd)
{
  cmd.validate();
  switch (cmd.key) {
    case ParamKey::kSensorEnable:
      params.sensor_enable = std::get<bool>(cmd.value);
      break;
    case ParamKey::kChunkEnable:
      params.chunk_enable = std::get<bool>(cmd.value);
      break;
    case ParamKey::kChunkLength:
      params.chunk_length = static_cast<std::size_t>(std::get<std::int64_t>(cmd.value));
      break;
  }
  return params;
}

ChunkAccumulator::ChunkAccumulator(std::size_t capacity)
: capacity_(capacity)
{
  if (capacity == 0) {
    throw ParamError("chunk capacity must be >= 1");
  }
  buffer_.reserve(capacity);
}

std::optional<std::vector<float>> ChunkAccumulator::accumulate(float sample)
{
  buffer_.push_back(sample);
  if (buffer_.size() < capacity_) {
    return std::nullopt;
  }
  std::vector<float> out;
  out.reserve(capacity_);
  out.swap(buffer_);
  return out;
}

std::optional<std::vector<float>> ChunkAccumulator::accumulate(std::span<const float> sample)
{
  if (sample.empty() || capacity_ % sample.size() != 0) {
    throw ConfigError("sample width does not divide the chunk capacity");
  }
  buffer_.insert(buffer_.end(), sample.begin(), sample.end());
  if (buffer_.size() < capacity_) {
    return std::nullopt;
  }
  std::vector<float> out;
  out.reserve(capacity_);
  out.swap(buffer_);
  return out;
}

SensorNode::SensorNode(
  SensorSpec spec, NodeParams params, SampleSource & source,
  NodeTransport & transport)
: spec_(std::move(spec)), params_(params), source_(source), transport_(transport)
{
  spec_.validate();
  if (params_.chunk_length == 0) {
    throw ParamError("Chunk_Length must be >= 1");
  }
  check_chunk_length(params_.chunk_length);
}

void SensorNode::check_chunk_length(std::size_t length) const
{
  for (const auto & c : spec_.channels) {
    if (c.category != ChannelCategory::kChunk || c.device_chunk != 0) {
      continue;
    }
    const ChannelSpec * raw = spec_.find(
      std::string_view(c.data_name).substr(0, c.data_name.size() - kChunkSuffix.size()));
    if (length > kMaxArrayElements / raw->width) {
      throw ParamError("Chunk_Length " + std::to_string(length) + " makes " + c.data_name +
              " exceed " + std::to_string(kMaxArrayElements) + " elements");
    }
  }
}

void SensorNode::rebuild_accumulators()
{
  for (auto & [name, r] : routes_) {
    if (r.chunk_topic) {
      r.accumulator.emplace(params_.chunk_length * r.channel->width);
    }
  }
}

void SensorNode::run(const std::atomic<bool> & stop)
{
  routes_.clear();
  std::map<std::string, TopicHandle> handles;
  for (const auto & c : spec_.channels) {
    handles[c.data_name] = transport_.announce(TopicName(spec_.sensor_name, c.data_name), c.kind);
  }
  for (const auto & c : spec_.channels) {
    Route r;
    r.channel = &c;
    r.topic = handles[c.data_name];
    if (c.category == ChannelCategory::kRaw) {
      const std::string chunk_name = c.data_name + std::string(kChunkSuffix);
      if (const ChannelSpec * chunk = spec_.find(chunk_name);
        chunk != nullptr && chunk->category == ChannelCategory::kChunk &&
        chunk->device_chunk == 0)
      {
        r.chunk_topic = handles[chunk_name];
        r.chunk_name = chunk_name;
      }
    }
    routes_.emplace(c.data_name, std::move(r));
  }
  rebuild_accumulators();

  using Clock = std::chrono::steady_clock;
  constexpr auto kParamPollSlice = std::chrono::milliseconds(20);
  while (!stop.load(std::memory_order_relaxed)) {
    std::optional<SourceEvent> ev = source_.next(kParamPollSlice);
    if (!ev) {
      if (source_.ended()) {
        break;
      }
      service_params(std::chrono::milliseconds(0));
      continue;
    }
    for (;;) {
      const auto now = Clock::now();
      if (now >= ev->due || stop.load(std::memory_order_relaxed)) {
        break;
      }
      const auto left = std::chrono::ceil<std::chrono::milliseconds>(ev->due - now);
      service_params(std::min<std::chrono::milliseconds>(left, kParamPollSlice));
    }
    if (stop.load(std::memory_order_relaxed)) {
      break;
    }
    service_params(std::chrono::milliseconds(0));
    handle_event(*ev);
  }
  // Partial chunks are discarded.
  for (auto & [name, r] : routes_) {
    if (r.accumulator) {
      r.accumulator->reset();
    }
  }
}

void SensorNode::service_params(std::chrono::milliseconds wait)
{
  auto req = transport_.poll_param(wait);
  while (req) {
    handle_param(*req);
    req = transport_.poll_param(std::chrono::milliseconds(0));
  }
}

void SensorNode::handle_param(const ParamRequest & req)
{
  ParamAck ack{ParamStatus::kOk, spec_.sensor_name, req.command.key, req.command.value, {}};
  try {
    NodeParams next = apply_param(params_, req.command);
    if (next.chunk_length != params_.chunk_length) {
      check_chunk_length(next.chunk_length);
    }
    const bool length_changed = next.chunk_length != params_.chunk_length;
    const bool disabled = (!next.chunk_enable && params_.chunk_enable) ||
      (!next.sensor_enable && params_.sensor_enable);
    params_ = next;
    if (length_changed) {
      rebuild_accumulators();
    } else if (disabled) {
      for (auto & [name, r] : routes_) {
        if (r.accumulator) {
          r.accumulator->reset();
        }
      }
    }
    ++stats_.params_applied;
  } catch (const ParamError & e) {
    ack.status = ParamStatus::kParamError;
    ack.message = e.what();
    ++stats_.params_rejected;
  }
  transport_.ack_param(req.request_id, ack);
}

void SensorNode::publish(TopicHandle topic, const std::string & name, const Message & msg)
{
  transport_.publish(topic, msg);
  ++stats_.published[name];
}

void SensorNode::handle_event(const SourceEvent & ev)
{
  if (!params_.sensor_enable) {
    return;
  }
  auto it = routes_.find(ev.channel);
  if (it == routes_.end() || ev.value.kind() != it->second.channel->kind) {
    ++stats_.unknown_channel_events;
    return;
  }
  Route & r = it->second;
  const ChannelSpec & ch = *r.channel;
  switch (ch.category) {
    case ChannelCategory::kHardware:
      publish(r.topic, ch.data_name, ev.value);
      return;
    case ChannelCategory::kChunk:
      if (ch.device_chunk == 0 ||
        ev.value.get<std::vector<float>>().size() != ch.device_chunk)
      {
        ++stats_.unknown_channel_events;
        return;
      }
      if (params_.chunk_enable) {
        publish(r.topic, ch.data_name, ev.value);
      }
      return;
    case ChannelCategory::kRaw:
      break;
  }
  if (ch.kind == MsgKind::kF32Array &&
    ev.value.get<std::vector<float>>().size() != ch.width)
  {
    ++stats_.unknown_channel_events;
    return;
  }
  publish(r.topic, ch.data_name, ev.value);
  if (!r.accumulator || !params_.chunk_enable) {
    return;
  }
  std::optional<std::vector<float>> chunk;
  if (ch.kind == MsgKind::kF32) {
    chunk = r.accumulator->accumulate(ev.value.get<float>());
  } else {
    chunk = r.accumulator->accumulate(std::span<const float>(ev.value.get<std::vector<float>>()));
  }
  if (chunk) {
    publish(*r.chunk_topic, r.chunk_name, Message(std::move(*chunk)));
  }
}

NodeConfig NodeConfig::parse(std::string_view text)
{
  NodeConfig cfg;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key=value");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key == "sensor_name") {
      if (!is_valid_token(value)) {
        throw ConfigError("line " + std::to_string(line_no) + ": invalid sensor_name");
      }
      cfg.sensor_name = std::string(value);
    } else if (key == "sensor_enable") {
      cfg.sensor_enable = parse_bool(value, key);
    } else if (key == "chunk_enable") {
      cfg.chunk_enable = parse_bool(value, key);
    } else if (key == "chunk_length") {
      std::size_t n = 0;
      auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), n);
      if (ec != std::errc() || p != value.data() + value.size() || n == 0) {
        throw ConfigError("line " + std::to_string(line_no) + ": chunk_length must be >= 1");
      }
      cfg.chunk_length = n;
    } else if (key.starts_with("channel.")) {
      cfg.channel_enable[std::string(key.substr(8))] = parse_bool(value, key);
    } else {
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" +
              std::string(key) + "'");
    }
  }
  return cfg;
}

NodeConfig NodeConfig::load(const std::string & path)
{
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open node config " + path);
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void NodeConfig::apply(SensorSpec & spec, NodeParams & params) const
{
  if (sensor_name) {
    spec.sensor_name = *sensor_name;
  }
  for (const auto & [name, enabled] : channel_enable) {
    if (spec.find(name) == nullptr) {
      throw ConfigError("config names unknown channel '" + name + "'");
    }
    if (!enabled) {
      std::erase_if(spec.channels, [&](const ChannelSpec & c) {return c.data_name == name;});
    }
  }
  if (sensor_enable) {
    params.sensor_enable = *sensor_enable;
  }
  if (chunk_enable) {
    params.chunk_enable = *chunk_enable;
  }
  if (chunk_length) {
    params.chunk_length = *chunk_length;
  }
}

}  // namespace biohub

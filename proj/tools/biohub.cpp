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

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "biohub/bag.hpp"
#include "biohub/broker.hpp"
#include "biohub/client.hpp"
#include "biohub/drivers.hpp"
#include "biohub/endpoint.hpp"
#include "biohub/error.hpp"
#include "biohub/feature_node.hpp"
#include "biohub/node.hpp"
#include "biohub/recorder.hpp"
#include "biohub/wire.hpp"

namespace
{

using biohub::BusClient;
using biohub::Endpoint;
using nlohmann::json;
using namespace std::chrono_literals;

constexpr int kExitOk = 0;
constexpr int kExitConnectivity = 2;
constexpr int kExitUsage = 64;
constexpr int kExitData = 65;

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int)
{
  g_stop.store(true);
}

void install_signal_handlers()
{
  struct sigaction sa{};
  sa.sa_handler = on_signal;
  sigemptyset(&sa.sa_mask);
  sigaction(SIGINT, &sa, nullptr);
  sigaction(SIGTERM, &sa, nullptr);
  std::signal(SIGPIPE, SIG_IGN);
}

struct Globals
{
  std::string addr;
  bool json = false;

  Endpoint endpoint() const
  {
    return addr.empty() ? Endpoint::from_env() : Endpoint::parse(addr);
  }
};

class UsageError : public biohub::Error
{
public:
  using Error::Error;
};

std::string format_value(double v)
{
  std::ostringstream os;
  os.precision(9);
  os << v;
  return os.str();
}

void print_json(const json & j)
{
  std::cout << j.dump() << std::endl;
}

json frame_json(const biohub::TopicFrame & f)
{
  json values = json::array();
  for (double v : f.msg.as_doubles()) {
    values.push_back(v);
  }
  return {{"topic", f.topic.str()}, {"kind", std::string(biohub::to_string(f.msg.kind()))},
    {"t_wall_ns", f.t_wall_ns}, {"t_mono_ns", f.t_mono_ns}, {"seq", f.seq},
    {"values", values}};
}

// broker ---------------------------------------------------------------------

int cmd_broker(const Globals & g, std::size_t queue)
{
  biohub::BrokerOptions opts;
  opts.queue_capacity = queue;
  biohub::Broker broker(g.endpoint(), opts);
  if (g.json) {
    print_json({{"endpoint", broker.endpoint().str()}});
  } else {
    std::cout << "biohub broker listening on " << broker.endpoint().str() << std::endl;
  }
  while (!g_stop.load()) {
    std::this_thread::sleep_for(50ms);
  }
  const auto dropped = broker.dropped_frames();
  broker.stop();
  if (g.json) {
    print_json({{"dropped_frames", dropped}});
  } else {
    std::cerr << "broker stopped, " << dropped << " frames dropped" << std::endl;
  }
  return kExitOk;
}

// run ------------------------------------------------------------------------

struct RunArgs
{
  std::string sensor;
  std::string backend = "sim";
  std::uint64_t seed = 1;
  std::vector<std::string> rate_overrides;
  std::string config;
  std::optional<double> duration;
  std::string device;
  std::string lsl_dir = ".";
  double speed = 1.0;
  bool fast = false;
  std::string br_mode = "message";
};

int cmd_run(const Globals & g, const RunArgs & a)
{
  const auto & names = biohub::driver_names();
  if (std::find(names.begin(), names.end(), a.sensor) == names.end()) {
    std::string list;
    for (const auto & n : names) {
      list += " " + n;
    }
    throw UsageError("unknown sensor '" + a.sensor + "'; choose one of:" + list);
  }
  if (a.br_mode != "message" && a.br_mode != "sample") {
    throw UsageError("--br-mode must be message or sample");
  }
  auto spec = biohub::driver_spec(a.sensor, a.br_mode == "sample" ?
      biohub::BreathingRateMode::kSampleRate : biohub::BreathingRateMode::kMessageRate);
  std::map<std::string, double> overrides;
  for (const auto & text : a.rate_overrides) {
    overrides.insert(biohub::parse_rate_override(text));
  }
  biohub::apply_rate_overrides(spec, overrides);
  biohub::NodeParams params;
  if (!a.config.empty()) {
    biohub::NodeConfig::load(a.config).apply(spec, params);
  }

  biohub::DriverOptions opts;
  opts.sim.seed = a.seed;
  opts.realtime = !a.fast;
  opts.duration_s = a.duration;
  opts.device_path = a.device;
  opts.lsl_dir = a.lsl_dir;
  opts.replay_speed = a.speed;
  const auto source = biohub::make_source(
    biohub::backend_from_string(a.backend), a.sensor, spec, opts);

  BusClient client(g.endpoint());
  biohub::BusTransport transport(client);
  biohub::SensorNode node(spec, params, *source, transport);
  if (!g.json) {
    std::cerr << "running " << spec.sensor_name << " (" << a.backend << ") on " <<
      g.endpoint().str() << std::endl;
  }
  node.run(g_stop);

  std::uint64_t total = 0;
  json published = json::object();
  for (const auto & [name, count] : node.stats().published) {
    published[name] = count;
    total += count;
  }
  std::uint64_t dropped = 0;
  if (const auto * dc = dynamic_cast<const biohub::DropCounter *>(source.get())) {
    dropped = dc->dropped_events();
  }
  if (g.json) {
    print_json({{"sensor", spec.sensor_name}, {"published", published},
      {"params_applied", node.stats().params_applied},
      {"params_rejected", node.stats().params_rejected},
      {"source_drops", dropped}});
  } else {
    std::cerr << spec.sensor_name << ": published " << total << " frames";
    if (dropped != 0) {
      std::cerr << ", source dropped " << dropped;
    }
    std::cerr << std::endl;
  }
  return kExitOk;
}

// introspection ---------------------------------------------------------------

int cmd_topics(const Globals & g)
{
  BusClient client(g.endpoint());
  const auto listing = client.list_topics();
  if (g.json) {
    json out = json::array();
    for (const auto & t : listing.topics) {
      out.push_back({{"topic", t.topic.str()},
          {"kind", std::string(biohub::to_string(t.kind))}, {"publishers", t.publishers}});
    }
    print_json(out);
    return kExitOk;
  }
  std::size_t width = 5;
  for (const auto & t : listing.topics) {
    width = std::max(width, t.topic.str().size());
  }
  std::printf("%-*s  %-17s  %s\n", static_cast<int>(width), "TOPIC", "KIND", "PUBLISHERS");
  for (const auto & t : listing.topics) {
    std::printf("%-*s  %-17s  %u\n", static_cast<int>(width), t.topic.str().c_str(),
      std::string(biohub::to_string(t.kind)).c_str(), static_cast<unsigned>(t.publishers));
  }
  return kExitOk;
}

int cmd_echo(const Globals & g, const std::string & pattern, std::uint64_t n)
{
  BusClient client(g.endpoint());
  client.subscribe(pattern);
  client.list_topics();
  std::uint64_t seen = 0;
  bool first = true;
  if (g.json) {
    std::cout << "[" << std::flush;
  }
  while (!g_stop.load() && (n == 0 || seen < n)) {
    auto f = client.next_frame(100ms);
    if (!f) {
      continue;
    }
    ++seen;
    if (g.json) {
      std::cout << (first ? "" : ",\n") << frame_json(*f).dump() << std::flush;
      first = false;
      continue;
    }
    std::cout << f->t_wall_ns << ' ' << f->seq;
    for (double v : f->msg.as_doubles()) {
      std::cout << ' ' << format_value(v);
    }
    std::cout << '\n' << std::flush;
  }
  if (g.json) {
    std::cout << "]" << std::endl;
  }
  return kExitOk;
}

biohub::ParamValue parse_param_value(biohub::ParamKey key, const std::string & text)
{
  if (key == biohub::ParamKey::kChunkLength) {
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(text, &used);
    } catch (const std::exception &) {
      used = 0;
    }
    if (used != text.size() || text.empty()) {
      throw UsageError("Chunk_Length needs an integer, got '" + text + "'");
    }
    return static_cast<std::int64_t>(v);
  }
  if (text == "true" || text == "1" || text == "True") {
    return true;
  }
  if (text == "false" || text == "0" || text == "False") {
    return false;
  }
  throw UsageError(std::string(biohub::to_string(key)) + " needs true or false, got '" +
          text + "'");
}

int cmd_param_set(
  const Globals & g, const std::string & node, const std::string & key_name,
  const std::string & value_text)
{
  const auto key = biohub::param_key_from_string(key_name);
  if (!key) {
    throw UsageError("unknown parameter '" + key_name +
            "' (Sensor_Enable, Chunk_Enable, Chunk_Length)");
  }
  biohub::ParamCommand cmd{node, *key, parse_param_value(*key, value_text)};
  cmd.validate();
  BusClient client(g.endpoint());
  const auto ack = client.send_param(cmd);
  if (g.json) {
    const auto & v = ack.value;
    json value = std::holds_alternative<bool>(v) ? json(std::get<bool>(v)) :
      json(std::get<std::int64_t>(v));
    print_json({{"status", "ok"}, {"node", ack.node},
      {"key", std::string(biohub::to_string(ack.key))}, {"value", value}});
  } else {
    std::cout << "ack " << ack.node << ' ' << biohub::to_string(ack.key) << '=' <<
      biohub::param_value_string(ack.value) << std::endl;
  }
  return kExitOk;
}

// recorder -------------------------------------------------------------------

int cmd_record(
  const Globals & g, const std::string & out, const std::vector<std::string> & patterns,
  std::optional<double> duration, std::optional<std::uint64_t> max_records)
{
  BusClient client(g.endpoint());
  biohub::RecordOptions opts;
  opts.patterns = patterns;
  opts.max_records = max_records;
  if (duration) {
    opts.duration = std::chrono::milliseconds(static_cast<std::int64_t>(*duration * 1000.0));
  }
  if (!g.json) {
    opts.on_ready = [&] {std::cerr << "recording to " << out << std::endl;};
  }
  const auto stats = biohub::record(client, out, opts, g_stop);
  if (g.json) {
    print_json({{"file", out}, {"records", stats.records}, {"topics", stats.topics},
      {"late_frames", stats.late_frames}});
  } else {
    std::cerr << "wrote " << stats.records << " records on " << stats.topics << " topics";
    if (stats.late_frames != 0) {
      std::cerr << " (" << stats.late_frames << " outside the reorder window)";
    }
    std::cerr << std::endl;
  }
  return kExitOk;
}

int cmd_play(const Globals & g, const std::string & file, double rate, bool allow_truncated)
{
  biohub::PlayOptions opts;
  opts.rate = rate;
  opts.allow_truncated = allow_truncated;
  if (!(rate > 0.0)) {
    throw UsageError("--rate must be positive");
  }
  // Reads before connecting so a bad file reports a format error.
  biohub::read_bag(file, biohub::BagReadMode::kRecover);
  BusClient client(g.endpoint());
  const auto stats = biohub::play(file, client, opts, g_stop);
  if (g.json) {
    print_json({{"file", file}, {"frames", stats.frames}, {"elapsed_s", stats.elapsed_s},
      {"max_lateness_s", stats.max_lateness_s}});
  } else {
    std::cerr << "played " << stats.frames << " frames in " << format_value(stats.elapsed_s) <<
      " s" << std::endl;
  }
  return kExitOk;
}

int cmd_info(const Globals & g, const std::string & file, bool recover)
{
  const auto info = biohub::bag_info(
    file, recover ? biohub::BagReadMode::kRecover : biohub::BagReadMode::kStrict);
  if (g.json) {
    json topics = json::array();
    for (const auto & t : info.topics) {
      topics.push_back({{"topic", t.topic.topic.str()},
          {"kind", std::string(biohub::to_string(t.topic.kind))}, {"count", t.count},
          {"rate_hz", t.rate_hz}});
    }
    print_json({{"file", file}, {"version", info.version}, {"t_wall_ns", info.t_wall_ns},
      {"records", info.records}, {"duration_s", info.duration_s},
      {"complete", info.complete}, {"topics", topics}});
    return kExitOk;
  }
  std::cout << "file:      " << file << '\n' <<
    "version:   " << info.version << '\n' <<
    "records:   " << info.records << '\n' <<
    "duration:  " << format_value(info.duration_s) << " s\n" <<
    "complete:  " << (info.complete ? "yes" : "no (recovered prefix)") << '\n' <<
    "topics:\n";
  for (const auto & t : info.topics) {
    std::printf("  %-48s %-17s %8llu msgs  %10.3f Hz\n", t.topic.topic.str().c_str(),
      std::string(biohub::to_string(t.topic.kind)).c_str(),
      static_cast<unsigned long long>(t.count), t.rate_hz);
  }
  std::cout << std::flush;
  return kExitOk;
}

int cmd_export(const Globals & g, const std::string & file, const std::string & dir, bool recover)
{
  const auto bag = biohub::read_bag(
    file, recover ? biohub::BagReadMode::kRecover : biohub::BagReadMode::kStrict);
  const auto files = biohub::export_csv(bag, dir);
  if (g.json) {
    print_json({{"files", files}});
  } else {
    for (const auto & f : files) {
      std::cout << f << '\n';
    }
    std::cout << std::flush;
  }
  return kExitOk;
}

// features -------------------------------------------------------------------

int cmd_features(const Globals & g, const std::string & config)
{
  biohub::FeatureNode node(biohub::FeatureConfig::load(config));
  BusClient client(g.endpoint());
  node.run(client, g_stop, [&] {
      if (!g.json) {
        for (const auto & t : node.outputs()) {
          std::cerr << "publishing " << t.str() << std::endl;
        }
      }
    });
  const auto & s = node.stats();
  if (g.json) {
    print_json({{"frames_in", s.frames_in}, {"published", s.published},
      {"skipped_windows", s.skipped_windows}});
  } else {
    std::cerr << "features: " << s.frames_in << " frames in, " << s.published <<
      " published, " << s.skipped_windows << " windows skipped" << std::endl;
  }
  return kExitOk;
}

int report(const Globals & g, int code, const std::string & kind, const std::string & what)
{
  if (g.json) {
    std::cout << json{{"error", kind}, {"message", what}, {"exit_code", code}}.dump() <<
      std::endl;
  }
  std::cerr << "biohub: " << what << std::endl;
  return code;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"biohub: biosensor streaming hub"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--addr", g.addr, "Broker endpoint host:port or unix:/path (env BIOHUB_ADDR)");
  app.add_flag("--json", g.json, "Machine-readable output");

  std::size_t queue = 1024;
  auto * broker = app.add_subcommand("broker", "Run the pub/sub broker");
  broker->add_option("--queue", queue, "Per-subscriber queue bound in frames")
  ->check(CLI::PositiveNumber);

  RunArgs run;
  auto * run_cmd = app.add_subcommand("run", "Run a sensor driver node");
  run_cmd->add_option("sensor", run.sensor, "Driver name")->required();
  run_cmd->add_option("--backend", run.backend, "Sample source")
  ->check(CLI::IsMember({"sim", "device", "lsl"}));
  run_cmd->add_option("--seed", run.seed, "Simulator seed");
  run_cmd->add_option("--rate-override", run.rate_overrides, "Channel rate, ch=hz");
  run_cmd->add_option("--config", run.config, "Node configuration file")
  ->check(CLI::ExistingFile);
  run_cmd->add_option("--duration", run.duration, "Stop after this many seconds of signal")
  ->check(CLI::PositiveNumber);
  run_cmd->add_option("--device", run.device, "Device path (serial port, FIFO or capture)");
  run_cmd->add_option("--lsl-dir", run.lsl_dir, "Directory of LSL bridge streams");
  run_cmd->add_option("--speed", run.speed, "Replay speed for file inputs")
  ->check(CLI::PositiveNumber);
  run_cmd->add_flag("--fast", run.fast, "Simulate without real-time pacing");
  run_cmd->add_option("--br-mode", run.br_mode, "Zephyr br_chunk rate: message or sample");

  app.add_subcommand("topics", "List live topics");

  std::string echo_topic;
  std::uint64_t echo_n = 0;
  auto * echo = app.add_subcommand("echo", "Print frames from a topic or pattern");
  echo->add_option("topic", echo_topic, "Topic or glob pattern")->required();
  echo->add_option("-n", echo_n, "Stop after N frames (0 = until interrupted)");

  auto * param = app.add_subcommand("param", "Node parameters");
  param->require_subcommand(1);
  std::string p_node;
  std::string p_key;
  std::string p_value;
  auto * param_set = param->add_subcommand("set", "Set a parameter and wait for the ack");
  param_set->add_option("node", p_node, "Node (sensor) name")->required();
  param_set->add_option("key", p_key, "Sensor_Enable, Chunk_Enable or Chunk_Length")
  ->required();
  param_set->add_option("value", p_value, "Value")->required();

  std::string rec_out;
  std::vector<std::string> rec_topics;
  std::optional<double> rec_duration;
  std::optional<std::uint64_t> rec_max;
  auto * rec = app.add_subcommand("record", "Record topics into a bag");
  rec->add_option("-o,--output", rec_out, "Bag file")->required();
  rec->add_option("topics", rec_topics, "Topics or patterns (default /biosensors/**)");
  rec->add_option("--duration", rec_duration, "Stop after this many seconds")
  ->check(CLI::PositiveNumber);
  rec->add_option("--max", rec_max, "Stop after this many records");

  std::string play_file;
  double play_rate = 1.0;
  bool play_truncated = false;
  auto * play = app.add_subcommand("play", "Replay a bag");
  play->add_option("file", play_file, "Bag file")->required()->check(CLI::ExistingFile);
  play->add_option("--rate", play_rate, "Speed multiplier");
  play->add_flag("--allow-truncated", play_truncated, "Play the intact prefix of a damaged bag");

  std::string info_file;
  bool info_recover = false;
  auto * info = app.add_subcommand("info", "Summarize a bag");
  info->add_option("file", info_file, "Bag file")->required()->check(CLI::ExistingFile);
  info->add_flag("--recover", info_recover, "Summarize the intact prefix of a damaged bag");

  std::string exp_file;
  std::string exp_dir;
  bool exp_recover = false;
  auto * exp = app.add_subcommand("export", "Export a bag to CSV");
  exp->add_option("file", exp_file, "Bag file")->required()->check(CLI::ExistingFile);
  exp->add_option("--csv", exp_dir, "Output directory")->required();
  exp->add_flag("--recover", exp_recover, "Export the intact prefix of a damaged bag");

  std::string feat_config;
  auto * feat = app.add_subcommand("features", "Run the feature extraction node");
  feat->add_option("--config", feat_config, "Feature configuration (JSON)")->required()
  ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  install_signal_handlers();
  try {
    if (broker->parsed()) {
      return cmd_broker(g, queue);
    }
    if (run_cmd->parsed()) {
      return cmd_run(g, run);
    }
    if (app.got_subcommand("topics")) {
      return cmd_topics(g);
    }
    if (echo->parsed()) {
      return cmd_echo(g, echo_topic, echo_n);
    }
    if (param_set->parsed()) {
      return cmd_param_set(g, p_node, p_key, p_value);
    }
    if (rec->parsed()) {
      return cmd_record(g, rec_out, rec_topics, rec_duration, rec_max);
    }
    if (play->parsed()) {
      return cmd_play(g, play_file, play_rate, play_truncated);
    }
    if (info->parsed()) {
      return cmd_info(g, info_file, info_recover);
    }
    if (exp->parsed()) {
      return cmd_export(g, exp_file, exp_dir, exp_recover);
    }
    if (feat->parsed()) {
      return cmd_features(g, feat_config);
    }
  } catch (const UsageError & e) {
    return report(g, kExitUsage, "usage", e.what());
  } catch (const biohub::ConfigError & e) {
    return report(g, kExitUsage, "config", e.what());
  } catch (const biohub::TopicError & e) {
    return report(g, kExitUsage, "topic", e.what());
  } catch (const biohub::IoError & e) {
    return report(g, kExitConnectivity, "connectivity", e.what());
  } catch (const biohub::TimeoutError & e) {
    return report(g, kExitConnectivity, "timeout", e.what());
  } catch (const biohub::NodeNotFound & e) {
    return report(g, kExitConnectivity, "node_not_found", e.what());
  } catch (const biohub::BackendUnavailable & e) {
    return report(g, kExitConnectivity, "backend_unavailable", e.what());
  } catch (const biohub::ParamError & e) {
    return report(g, kExitData, "param", e.what());
  } catch (const biohub::FormatError & e) {
    return report(g, kExitData, "format", e.what());
  } catch (const biohub::CodecError & e) {
    return report(g, kExitData, "codec", e.what());
  } catch (const biohub::Error & e) {
    return report(g, kExitData, "error", e.what());
  }
  return kExitUsage;
}

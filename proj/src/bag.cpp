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

#include "biohub/bag.hpp"

#include <zlib.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "biohub/byte_io.hpp"
#include "biohub/clock.hpp"
#include "biohub/error.hpp"

namespace biohub
{

namespace
{

constexpr std::uint8_t kTopicTag = 0x01;
constexpr std::uint8_t kRecordTag = 0x02;
constexpr std::uint8_t kTrailerTag = 0x03;
constexpr std::size_t kRecordFixed = 1 + 2 + 4 + 8 + 8 + 8 + 2;
constexpr std::size_t kTrailerSize = 1 + 8 + 4;

std::uint32_t crc_update(std::uint32_t crc, std::span<const std::uint8_t> bytes)
{
  // zlib takes uInt lengths; bag items are far below that.
  return static_cast<std::uint32_t>(
    ::crc32(crc, bytes.data(), static_cast<uInt>(bytes.size())));
}

bool payload_fits(MsgKind kind, std::size_t len)
{
  try {
    std::vector<std::uint8_t> probe(len);
    (void)Message::decode_payload(kind, probe);
    return true;
  } catch (const ProtocolError &) {
    return false;
  }
}

}  // namespace

BagWriter::BagWriter(const std::string & path, std::optional<std::uint64_t> t_wall_ns)
: path_(path)
{
  file_ = std::fopen(path.c_str(), "wb");
  if (file_ == nullptr) {
    throw IoError("cannot create bag " + path + ": " + std::strerror(errno));
  }
  crc_ = crc_update(0, {});
  std::vector<std::uint8_t> header(kBagMagic.begin(), kBagMagic.end());
  put_u16(header, kBagVersion);
  put_u64(header, t_wall_ns.value_or(now_wall_ns()));
  put(header);
}

BagWriter::~BagWriter()
{
  try {
    close();
  } catch (...) {
  }
}

void BagWriter::put(std::span<const std::uint8_t> bytes)
{
  if (file_ == nullptr) {
    throw IoError("bag " + path_ + " is closed");
  }
  if (std::fwrite(bytes.data(), 1, bytes.size(), file_) != bytes.size()) {
    throw IoError("write to bag " + path_ + " failed: " + std::strerror(errno));
  }
  crc_ = crc_update(crc_, bytes);
}

std::uint16_t BagWriter::topic(const TopicName & topic, MsgKind kind)
{
  const std::string name = topic.str();
  if (auto it = ids_.find(name); it != ids_.end()) {
    if (topics_[it->second].kind != kind) {
      throw FormatError("topic " + name + " recorded with two message kinds");
    }
    return it->second;
  }
  if (topics_.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw FormatError("bag topic table is full");
  }
  const auto id = static_cast<std::uint16_t>(topics_.size());
  std::vector<std::uint8_t> entry{kTopicTag};
  put_u16(entry, id);
  entry.push_back(static_cast<std::uint8_t>(kind));
  put_u16(entry, static_cast<std::uint16_t>(name.size()));
  entry.insert(entry.end(), name.begin(), name.end());
  put(entry);
  topics_.push_back(BagTopic{id, topic, kind});
  ids_.emplace(name, id);
  return id;
}

void BagWriter::write(const BagRecord & r)
{
  if (r.topic_id >= topics_.size()) {
    throw FormatError("record for unregistered topic id " + std::to_string(r.topic_id));
  }
  if (r.payload.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw EncodeError("bag record payload exceeds 65535 bytes");
  }
  if (!payload_fits(topics_[r.topic_id].kind, r.payload.size())) {
    throw FormatError("payload length does not fit the topic's message kind");
  }
  std::vector<std::uint8_t> out;
  out.reserve(kRecordFixed + r.payload.size());
  out.push_back(kRecordTag);
  put_u16(out, r.topic_id);
  put_u32(out, r.seq);
  put_u64(out, r.t_wall_ns);
  put_u64(out, r.t_mono_ns);
  put_u64(out, r.recv_ns);
  put_u16(out, static_cast<std::uint16_t>(r.payload.size()));
  out.insert(out.end(), r.payload.begin(), r.payload.end());
  put(out);
  ++records_;
}

void BagWriter::write(
  std::uint16_t topic_id, const Message & msg, std::uint32_t seq,
  std::uint64_t t_wall_ns, std::uint64_t t_mono_ns, std::uint64_t recv_ns)
{
  BagRecord r{topic_id, seq, t_wall_ns, t_mono_ns, recv_ns, {}};
  msg.encode_payload(r.payload);
  write(r);
}

void BagWriter::flush()
{
  if (file_ != nullptr && std::fflush(file_) != 0) {
    throw IoError("flush of bag " + path_ + " failed: " + std::strerror(errno));
  }
}

void BagWriter::close()
{
  if (file_ == nullptr) {
    return;
  }
  std::vector<std::uint8_t> trailer{kTrailerTag};
  put_u64(trailer, records_);
  std::fwrite(trailer.data(), 1, trailer.size(), file_);
  std::vector<std::uint8_t> crc;
  put_u32(crc, crc_update(crc_, trailer));
  const bool ok = std::fwrite(crc.data(), 1, crc.size(), file_) == crc.size();
  const bool closed = std::fclose(file_) == 0;
  file_ = nullptr;
  if (!ok || !closed) {
    throw IoError("closing bag " + path_ + " failed: " + std::strerror(errno));
  }
}

const BagTopic & Bag::topic(std::uint16_t id) const
{
  for (const auto & t : topics) {
    if (t.id == id) {
      return t;
    }
  }
  throw FormatError("unknown bag topic id " + std::to_string(id));
}

Message Bag::message(const BagRecord & r) const
{
  try {
    return Message::decode_payload(topic(r.topic_id).kind, r.payload);
  } catch (const ProtocolError & e) {
    throw FormatError(e.what());
  }
}

Bag parse_bag(std::span<const std::uint8_t> b, BagReadMode mode)
{
  if (b.size() < kBagHeaderSize ||
    !std::equal(kBagMagic.begin(), kBagMagic.end(), b.begin()))
  {
    throw FormatError("not a bag file: bad magic at offset 0");
  }
  Bag bag;
  bag.version = get_u16(b.data() + 8);
  if (bag.version != kBagVersion) {
    throw FormatError("unsupported bag version " + std::to_string(bag.version) + " at offset 8");
  }
  bag.t_wall_ns = get_u64(b.data() + 10);
  std::size_t pos = kBagHeaderSize;
  std::map<std::uint16_t, MsgKind> kinds;

  auto stop = [&](const std::string & why) {
      const std::string msg = why + " at offset " + std::to_string(pos);
      if (mode == BagReadMode::kStrict) {
        throw FormatError(msg);
      }
      bag.stop_reason = msg;
    };

  while (pos < b.size()) {
    const std::size_t left = b.size() - pos;
    const std::uint8_t tag = b[pos];
    if (tag == kTopicTag) {
      if (left < 6 || left < 6u + get_u16(b.data() + pos + 4)) {
        stop("truncated topic entry");
        break;
      }
      const std::uint16_t id = get_u16(b.data() + pos + 1);
      const std::uint8_t kind_byte = b[pos + 3];
      const std::size_t name_len = get_u16(b.data() + pos + 4);
      const std::optional<MsgKind> kind = msg_kind_from_byte(kind_byte);
      if (!kind) {
        stop("unknown message kind " + std::to_string(kind_byte));
        break;
      }
      if (kinds.count(id)) {
        stop("duplicate topic id " + std::to_string(id));
        break;
      }
      std::optional<TopicName> name;
      try {
        name = TopicName::parse(
          std::string_view(reinterpret_cast<const char *>(b.data() + pos + 6), name_len));
      } catch (const TopicError &) {
      }
      if (!name) {
        stop("invalid topic name");
        break;
      }
      kinds[id] = *kind;
      bag.topics.push_back(BagTopic{id, std::move(*name), *kind});
      pos += 6 + name_len;
    } else if (tag == kRecordTag) {
      if (left < kRecordFixed || left < kRecordFixed + get_u16(b.data() + pos + 31)) {
        stop("truncated record");
        break;
      }
      BagRecord r;
      r.topic_id = get_u16(b.data() + pos + 1);
      r.seq = get_u32(b.data() + pos + 3);
      r.t_wall_ns = get_u64(b.data() + pos + 7);
      r.t_mono_ns = get_u64(b.data() + pos + 15);
      r.recv_ns = get_u64(b.data() + pos + 23);
      const std::size_t len = get_u16(b.data() + pos + 31);
      auto kind = kinds.find(r.topic_id);
      if (kind == kinds.end()) {
        stop("record for unknown topic id " + std::to_string(r.topic_id));
        break;
      }
      if (!payload_fits(kind->second, len)) {
        stop("record payload length " + std::to_string(len) + " does not fit its kind");
        break;
      }
      r.payload.assign(b.begin() + static_cast<std::ptrdiff_t>(pos + kRecordFixed),
        b.begin() + static_cast<std::ptrdiff_t>(pos + kRecordFixed + len));
      bag.records.push_back(std::move(r));
      pos += kRecordFixed + len;
    } else if (tag == kTrailerTag) {
      if (left < kTrailerSize) {
        stop("truncated trailer");
        break;
      }
      const std::uint64_t count = get_u64(b.data() + pos + 1);
      const std::uint32_t stored = get_u32(b.data() + pos + 9);
      const std::uint32_t actual = crc_update(crc_update(0, {}), b.subspan(0, pos + 9));
      if (count != bag.records.size()) {
        stop("trailer counts " + std::to_string(count) + " records but " +
          std::to_string(bag.records.size()) + " were read");
        break;
      }
      if (stored != actual) {
        stop("trailer CRC mismatch");
        break;
      }
      bag.complete = true;
      pos += kTrailerSize;
      if (pos != b.size()) {
        stop("trailing bytes after trailer");
      }
      break;
    } else {
      stop("unknown item tag " + std::to_string(tag));
      break;
    }
  }
  if (!bag.complete && bag.stop_reason.empty()) {
    stop("missing trailer");
  }
  bag.valid_bytes = pos;
  return bag;
}

Bag read_bag(const std::string & path, BagReadMode mode)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open bag " + path);
  }
  std::vector<std::uint8_t> bytes(
    (std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_bag(bytes, mode);
}

BagInfo bag_info(const Bag & bag)
{
  BagInfo info;
  info.version = bag.version;
  info.t_wall_ns = bag.t_wall_ns;
  info.records = bag.records.size();
  info.complete = bag.complete;
  if (!bag.records.empty()) {
    auto [lo, hi] = std::minmax_element(
      bag.records.begin(), bag.records.end(),
      [](const BagRecord & a, const BagRecord & b) {return a.t_mono_ns < b.t_mono_ns;});
    info.duration_s = static_cast<double>(hi->t_mono_ns - lo->t_mono_ns) * 1e-9;
  }
  struct Span
  {
    std::uint64_t count = 0;
    std::uint64_t first = 0;
    std::uint64_t last = 0;
  };
  std::map<std::uint16_t, Span> spans;
  for (const auto & r : bag.records) {
    Span & s = spans[r.topic_id];
    if (s.count == 0) {
      s.first = s.last = r.t_mono_ns;
    }
    s.first = std::min(s.first, r.t_mono_ns);
    s.last = std::max(s.last, r.t_mono_ns);
    ++s.count;
  }
  for (const auto & t : bag.topics) {
    BagTopicInfo ti{t, 0, 0.0};
    if (auto it = spans.find(t.id); it != spans.end()) {
      ti.count = it->second.count;
      const double span_s = static_cast<double>(it->second.last - it->second.first) * 1e-9;
      if (ti.count >= 2 && span_s > 0.0) {
        ti.rate_hz = static_cast<double>(ti.count - 1) / span_s;
      }
    }
    info.topics.push_back(std::move(ti));
  }
  return info;
}

BagInfo bag_info(const std::string & path, BagReadMode mode)
{
  return bag_info(read_bag(path, mode));
}

std::vector<std::string> export_csv(const Bag & bag, const std::string & dir)
{
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create " + dir + ": " + ec.message());
  }
  std::map<std::uint16_t, std::size_t> width;
  for (const auto & r : bag.records) {
    const Message m = bag.message(r);
    width[r.topic_id] = std::max(width[r.topic_id], m.as_doubles().size());
  }
  std::vector<std::string> written;
  for (const auto & t : bag.topics) {
    std::string name = t.topic.str().substr(1);
    std::replace(name.begin(), name.end(), '/', '_');
    const fs::path path = fs::path(dir) / (name + ".csv");
    std::ofstream out(path);
    if (!out) {
      throw IoError("cannot write " + path.string());
    }
    out << "t_wall_ns,seq";
    const std::size_t w = width[t.id];
    if (t.kind == MsgKind::kF32Array) {
      for (std::size_t i = 0; i < w; ++i) {
        out << ",v" << i;
      }
    } else if (t.kind != MsgKind::kEmpty) {
      out << ",value";
    }
    out << '\n';
    out.precision(9);
    for (const auto & r : bag.records) {
      if (r.topic_id != t.id) {
        continue;
      }
      out << r.t_wall_ns << ',' << r.seq;
      for (double v : bag.message(r).as_doubles()) {
        out << ',' << v;
      }
      out << '\n';
    }
    if (!out) {
      throw IoError("write to " + path.string() + " failed");
    }
    written.push_back(path.string());
  }
  return written;
}

}  // namespace biohub

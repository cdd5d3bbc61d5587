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

#ifndef BIOHUB__BAG_HPP_
#define BIOHUB__BAG_HPP_

#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "biohub/message.hpp"
#include "biohub/topic.hpp"

namespace biohub
{

/// Single-file recording. Layout, little-endian:
///
///   header   "BIOBAG1\0" | version u16 | t_wall u64
///   topic    0x01 | topic_id u16 | kind u8 | name_len u16 | name
///   record   0x02 | topic_id u16 | seq u32 | t_wall u64 | t_mono u64 | recv_t u64 |
///            len u16 | payload
///   trailer  0x03 | record_count u64 | crc32 u32 (over every preceding byte)
///
/// Each topic entry precedes that topic's first record.
inline constexpr std::string_view kBagMagic{"BIOBAG1\0", 8};
inline constexpr std::uint16_t kBagVersion = 1;
inline constexpr std::size_t kBagHeaderSize = 18;

struct BagTopic
{
  std::uint16_t id = 0;
  TopicName topic;
  MsgKind kind = MsgKind::kF32;

  bool operator==(const BagTopic &) const = default;
};

struct BagRecord
{
  std::uint16_t topic_id = 0;
  std::uint32_t seq = 0;
  std::uint64_t t_wall_ns = 0;
  std::uint64_t t_mono_ns = 0;
  /// Recorder's own monotonic receive time, for latency studies.
  std::uint64_t recv_ns = 0;
  std::vector<std::uint8_t> payload;

  bool operator==(const BagRecord &) const = default;
};

/// Append-only writer. Not thread safe: one writer per file.
class BagWriter
{
public:
  /// Creates or truncates `path` and writes the header. Throws IoError.
  explicit BagWriter(const std::string & path, std::optional<std::uint64_t> t_wall_ns = {});
  ~BagWriter();

  BagWriter(const BagWriter &) = delete;
  BagWriter & operator=(const BagWriter &) = delete;

  /// Id for a topic, writing its table entry on first use. Throws
  /// FormatError when the same name reappears with a different kind.
  std::uint16_t topic(const TopicName & topic, MsgKind kind);

  /// Throws IoError on a failed write, EncodeError on an oversize payload,
  /// FormatError for an unknown id or a payload that does not fit the kind.
  void write(const BagRecord & record);
  void write(std::uint16_t topic_id, const Message & msg, std::uint32_t seq,
    std::uint64_t t_wall_ns, std::uint64_t t_mono_ns, std::uint64_t recv_ns);

  /// Pushes buffered bytes to the OS so a killed process leaves a readable
  /// prefix.
  void flush();

  /// Writes the trailer. Further writes throw IoError.
  void close();

  std::uint64_t records() const noexcept {return records_;}
  const std::vector<BagTopic> & topics() const noexcept {return topics_;}

private:
  void put(std::span<const std::uint8_t> bytes);

  std::string path_;
  std::FILE * file_ = nullptr;
  std::uint32_t crc_ = 0;
  std::uint64_t records_ = 0;
  std::vector<BagTopic> topics_;
  std::map<std::string, std::uint16_t> ids_;
};

struct Bag
{
  std::uint16_t version = kBagVersion;
  std::uint64_t t_wall_ns = 0;
  std::vector<BagTopic> topics;
  std::vector<BagRecord> records;
  /// False when the trailer is missing (recovered read).
  bool complete = false;
  /// Bytes that parsed cleanly.
  std::uint64_t valid_bytes = 0;
  /// Why a recovered read stopped early.
  std::string stop_reason;

  const BagTopic & topic(std::uint16_t id) const;
  Message message(const BagRecord & r) const;
};

enum class BagReadMode
{
  /// Any damage is a FormatError naming the byte offset.
  kStrict,
  /// Returns every complete record before the first damaged or missing byte.
  /// A bad header is still a FormatError.
  kRecover,
};

/// Throws IoError when the file cannot be opened, FormatError as above.
Bag read_bag(const std::string & path, BagReadMode mode = BagReadMode::kStrict);
Bag parse_bag(std::span<const std::uint8_t> bytes, BagReadMode mode = BagReadMode::kStrict);

struct BagTopicInfo
{
  BagTopic topic;
  std::uint64_t count = 0;
  /// Mean rate from first to last record of this topic; 0 below 2 records.
  double rate_hz = 0.0;
};

struct BagInfo
{
  std::uint16_t version = 0;
  std::uint64_t t_wall_ns = 0;
  std::uint64_t records = 0;
  /// Last t_mono minus first t_mono, seconds; 0 when empty.
  double duration_s = 0.0;
  bool complete = false;
  std::vector<BagTopicInfo> topics;
};

BagInfo bag_info(const Bag & bag);
BagInfo bag_info(const std::string & path, BagReadMode mode = BagReadMode::kStrict);

/// Writes one CSV per topic into `dir` (created if needed), named after the
/// topic with slashes turned into underscores. Columns: t_wall_ns, seq, then
/// one column per value. Returns the files written.
std::vector<std::string> export_csv(const Bag & bag, const std::string & dir);

}  // namespace biohub

#endif  // BIOHUB__BAG_HPP_

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

#include "biohub/lsl.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <string_view>

#include "biohub/error.hpp"

namespace biohub
{

namespace
{

std::vector<std::string_view> split_csv(std::string_view line)
{
  std::vector<std::string_view> out;
  for (;;) {
    const auto comma = line.find(',');
    auto field = line.substr(0, comma);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) {
      field.remove_prefix(1);
    }
    while (!field.empty() &&
      (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
    {
      field.remove_suffix(1);
    }
    out.push_back(field);
    if (comma == std::string_view::npos) {
      return out;
    }
    line.remove_prefix(comma + 1);
  }
}

template<typename T>
bool parse_number(std::string_view s, T & out)
{
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

}  // namespace

Message LslSample::to_message() const
{
  if (values.empty()) {
    return Message(Empty{});
  }
  if (values.size() == 1) {
    return Message(values[0]);
  }
  return Message(values);
}

std::optional<LslStreamInfo> parse_lsl_header(std::string_view line, std::size_t line_no)
{
  auto fields = split_csv(line);
  if (fields.size() == 1 && fields[0].empty()) {
    return std::nullopt;
  }
  if (fields.size() == 3 && fields[0] == "name" && fields[1] == "channels" &&
    fields[2] == "rate")
  {
    return std::nullopt;
  }
  LslStreamInfo info;
  if (fields.size() != 3 || fields[0].empty() ||
    !parse_number(fields[1], info.channels) || !parse_number(fields[2], info.rate_hz) ||
    !(info.rate_hz >= 0.0))
  {
    throw FormatError("LSL header line " + std::to_string(line_no) +
            ": expected name,channels,rate");
  }
  info.name = std::string(fields[0]);
  return info;
}

std::optional<LslSample> parse_lsl_row(
  std::string_view line, const LslStreamInfo & info,
  std::size_t line_no)
{
  auto fields = split_csv(line);
  if (fields.size() == 1 && fields[0].empty()) {
    return std::nullopt;
  }
  if (fields.size() != info.channels + 1) {
    throw FormatError("LSL row " + std::to_string(line_no) + " of " + info.name + " has " +
            std::to_string(fields.size() - 1) + " channels, expected " +
            std::to_string(info.channels));
  }
  LslSample s;
  if (!parse_number(fields[0], s.timestamp) || !std::isfinite(s.timestamp)) {
    throw FormatError("LSL row " + std::to_string(line_no) + ": bad timestamp");
  }
  s.values.resize(info.channels);
  for (std::size_t i = 0; i < info.channels; ++i) {
    if (!parse_number(fields[i + 1], s.values[i])) {
      throw FormatError("LSL row " + std::to_string(line_no) + ": bad value in column " +
              std::to_string(i + 1));
    }
  }
  return s;
}

LslStreamReader::LslStreamReader(std::istream & in)
: in_(in)
{
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (auto info = parse_lsl_header(line, line_)) {
      info_ = std::move(*info);
      return;
    }
  }
  throw FormatError("LSL stream has no header");
}

std::optional<LslSample> LslStreamReader::next()
{
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (auto row = parse_lsl_row(line, info_, line_)) {
      return row;
    }
  }
  return std::nullopt;
}

std::string format_lsl_stream(const LslStreamInfo & info, const std::vector<LslSample> & rows)
{
  std::ostringstream out;
  out.precision(9);
  out << info.name << ',' << info.channels << ',' << info.rate_hz << '\n';
  out.precision(17);
  for (const auto & r : rows) {
    out << r.timestamp;
    for (float v : r.values) {
      out << ',' << static_cast<double>(v);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace biohub

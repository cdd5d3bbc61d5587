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

#ifndef BIOHUB__LSL_HPP_
#define BIOHUB__LSL_HPP_

#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "biohub/message.hpp"

namespace biohub
{

/// Header of a recorded LSL stream: `name,channels,rate`.
struct LslStreamInfo
{
  std::string name;
  std::size_t channels = 0;
  /// Nominal rate; 0 marks an irregular stream.
  double rate_hz = 0.0;
};

struct LslSample
{
  double timestamp = 0.0;
  std::vector<float> values;

  /// Empty for 0 channels, F32 for 1, F32Array otherwise.
  Message to_message() const;
};

/// Parses a header line. Returns nullopt for blank lines and the literal
/// `name,channels,rate` title; throws FormatError when malformed.
std::optional<LslStreamInfo> parse_lsl_header(std::string_view line, std::size_t line_no);

/// Parses a data row. Returns nullopt for blank lines; throws FormatError
/// with the line number on bad fields or a wrong column count.
std::optional<LslSample> parse_lsl_row(
  std::string_view line, const LslStreamInfo & info,
  std::size_t line_no);

/// Line reader for the LSL replay format: one header line, then rows of
/// `t,ch0..chN`. A literal `name,channels,rate` title line before the header
/// is skipped. Works on files and on FIFOs fed by a live bridge.
class LslStreamReader
{
public:
  /// Reads the header. Throws FormatError when it is malformed.
  explicit LslStreamReader(std::istream & in);

  const LslStreamInfo & info() const noexcept {return info_;}

  /// Next row, or nullopt at end of stream. Throws FormatError with the line
  /// number on a malformed row or a wrong column count.
  std::optional<LslSample> next();

private:
  std::istream & in_;
  LslStreamInfo info_;
  std::size_t line_ = 0;
};

/// Renders the header and rows back into the replay format.
std::string format_lsl_stream(const LslStreamInfo & info, const std::vector<LslSample> & rows);

}  // namespace biohub

#endif  // BIOHUB__LSL_HPP_

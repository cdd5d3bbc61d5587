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

#include "biohub/topic.hpp"

#include <utility>

#include "biohub/error.hpp"

namespace biohub
{

namespace
{
constexpr std::string_view kRoot = "/biosensors/";
constexpr std::string_view kFeatureSegment = "features";
}  // namespace

bool is_valid_token(std::string_view token) noexcept
{
  if (token.empty()) {
    return false;
  }
  for (char c : token) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    if (!ok) {
      return false;
    }
  }
  return true;
}

TopicName::TopicName(std::string sensor_name, std::string data_name, bool feature)
: sensor_(std::move(sensor_name)), data_(std::move(data_name)), feature_(feature)
{
  if (!is_valid_token(sensor_)) {
    throw TopicError("invalid sensor name token '" + sensor_ + "'");
  }
  if (!is_valid_token(data_)) {
    throw TopicError("invalid data name token '" + data_ + "'");
  }
}

TopicName TopicName::parse(std::string_view rendered)
{
  if (!rendered.starts_with(kRoot)) {
    throw TopicError("topic must start with /biosensors/: '" + std::string(rendered) + "'");
  }
  std::string_view rest = rendered.substr(kRoot.size());
  const auto first = rest.find('/');
  if (first == std::string_view::npos) {
    throw TopicError("topic is missing a data segment: '" + std::string(rendered) + "'");
  }
  std::string_view sensor = rest.substr(0, first);
  std::string_view tail = rest.substr(first + 1);
  bool feature = false;
  const auto second = tail.find('/');
  if (second != std::string_view::npos) {
    if (tail.substr(0, second) != kFeatureSegment) {
      throw TopicError("only a 'features' middle segment is allowed: '" +
              std::string(rendered) + "'");
    }
    feature = true;
    tail = tail.substr(second + 1);
  }
  return TopicName(std::string(sensor), std::string(tail), feature);
}

std::string TopicName::str() const
{
  std::string out(kRoot);
  out += sensor_;
  out += '/';
  if (feature_) {
    out += kFeatureSegment;
    out += '/';
  }
  out += data_;
  return out;
}

bool topic_matches(std::string_view pattern, std::string_view topic) noexcept
{
  if (pattern.ends_with("/**")) {
    const auto prefix = pattern.substr(0, pattern.size() - 2);
    return topic.size() > prefix.size() && topic.starts_with(prefix);
  }
  // Iterative glob with single-segment star.
  std::size_t p = 0;
  std::size_t t = 0;
  std::size_t star_p = std::string_view::npos;
  std::size_t star_t = 0;
  while (t < topic.size()) {
    if (p < pattern.size() && (pattern[p] == topic[t] || (pattern[p] == '?' && topic[t] != '/'))) {
      ++p;
      ++t;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star_p = p++;
      star_t = t;
    } else if (star_p != std::string_view::npos && topic[star_t] != '/') {
      p = star_p + 1;
      t = ++star_t;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') {
    ++p;
  }
  return p == pattern.size();
}

}  // namespace biohub

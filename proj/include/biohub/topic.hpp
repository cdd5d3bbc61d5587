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

#ifndef BIOHUB__TOPIC_HPP_
#define BIOHUB__TOPIC_HPP_

#include <compare>
#include <string>
#include <string_view>

namespace biohub
{

/// True when `token` is a non-empty run of [a-z0-9_].
bool is_valid_token(std::string_view token) noexcept;

/// A validated `/biosensors/<sensor>/<data>` name.
///
/// Feature outputs use the three-segment form
/// `/biosensors/<sensor>/features/<data>`.
class TopicName
{
public:
  TopicName() = default;

  /// Throws TopicError when either token is not [a-z0-9_]+.
  TopicName(std::string sensor_name, std::string data_name, bool feature = false);

  /// Parses a rendered name. Throws TopicError on anything outside the grammar.
  static TopicName parse(std::string_view rendered);

  const std::string & sensor_name() const noexcept {return sensor_;}
  const std::string & data_name() const noexcept {return data_;}
  bool is_feature() const noexcept {return feature_;}

  std::string str() const;

  auto operator<=>(const TopicName &) const = default;

private:
  std::string sensor_;
  std::string data_;
  bool feature_ = false;
};

/// Glob match of a rendered topic against a pattern. `*` matches any run of
/// characters within one path segment, `?` a single non-slash character.
/// A pattern ending in `/**` matches every topic below the prefix.
bool topic_matches(std::string_view pattern, std::string_view topic) noexcept;

}  // namespace biohub

#endif  // BIOHUB__TOPIC_HPP_

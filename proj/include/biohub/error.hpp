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

#ifndef BIOHUB__ERROR_HPP_
#define BIOHUB__ERROR_HPP_

#include <stdexcept>
#include <string>

namespace biohub
{

/// Base of every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

#define BIOHUB_DEFINE_ERROR(NAME) \
  class NAME : public Error \
  { \
public: \
    using Error::Error; \
  }

BIOHUB_DEFINE_ERROR(TopicError);
BIOHUB_DEFINE_ERROR(EncodeError);
BIOHUB_DEFINE_ERROR(ProtocolError);
BIOHUB_DEFINE_ERROR(IoError);
BIOHUB_DEFINE_ERROR(NodeNotFound);
BIOHUB_DEFINE_ERROR(ParamError);
BIOHUB_DEFINE_ERROR(CodecError);
BIOHUB_DEFINE_ERROR(BackendUnavailable);
BIOHUB_DEFINE_ERROR(FormatError);
BIOHUB_DEFINE_ERROR(InsufficientData);
BIOHUB_DEFINE_ERROR(InvalidData);
BIOHUB_DEFINE_ERROR(ConfigError);
BIOHUB_DEFINE_ERROR(TimeoutError);

#undef BIOHUB_DEFINE_ERROR

}  // namespace biohub

#endif  // BIOHUB__ERROR_HPP_

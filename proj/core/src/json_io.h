// Copyright (c) 2026 The PMVC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PMVC_SRC_JSON_IO_H_
#define PMVC_SRC_JSON_IO_H_

#include <string>

#include "json.hpp"
#include "pmvc/error.h"
#include "pmvc/mel.h"
#include "pmvc/model.h"
#include "pmvc/speaker_encoder.h"

namespace pmvc::internal {

using Json = nlohmann::ordered_json;

Json ToJson(const FrameParams& p);
FrameParams FrameParamsFromJson(const Json& j);

Json ToJson(const ModelConfig& c);
ModelConfig ModelConfigFromJson(const Json& j);

Json ToJson(const SpeakerEncoderConfig& c);
SpeakerEncoderConfig SpeakerEncoderConfigFromJson(const Json& j);

// Field lookup that reports the missing key instead of throwing a generic
// json exception.
template <typename T>
T Field(const Json& j, const char* key, const char* where) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw ValidationError(std::string(where) + ": missing field '" + key + "'");
  }
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(std::string(where) + ": field '" + key + "' has the wrong type");
  }
}

Json ParseJson(const std::string& text, const std::string& where);

}  // namespace pmvc::internal

#endif  // PMVC_SRC_JSON_IO_H_

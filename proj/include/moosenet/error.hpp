// moosenet/error.hpp

// Copyright 2026 The MooseNet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace moosenet {

enum class Errc {
  // input data
  MalformedRow,
  DuplicateId,
  RatingOutOfRange,
  InconsistentRatings,
  MissingFile,
  BadMagic,
  VersionMismatch,
  TruncatedFile,
  NonFiniteValue,
  UnsupportedFormat,
  DurationMismatch,
  MissingRecord,
  MissingSplit,
  NotEnoughRatings,
  KeyMismatch,
  LengthMismatch,
  Empty,
  // augmentation / batching
  EmptyClip,
  SilentClean,
  SilentNoise,
  TooFewRecords,
  UtteranceTooLong,
  // model
  EmptySequence,
  DimensionMismatch,
  NonFiniteLoss,
  TooFewSamples,
  TooFewDistinctValues,
  OutOfRange,
  NotNormalized,
  SingularWithinClass,
  MissingBin,
  NotFitted,
  DegenerateInput,
  TooFewMembers,
  // configuration
  InvalidConfig,
};

constexpr std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::MalformedRow: return "MalformedRow";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::RatingOutOfRange: return "RatingOutOfRange";
    case Errc::InconsistentRatings: return "InconsistentRatings";
    case Errc::MissingFile: return "MissingFile";
    case Errc::BadMagic: return "BadMagic";
    case Errc::VersionMismatch: return "VersionMismatch";
    case Errc::TruncatedFile: return "TruncatedFile";
    case Errc::NonFiniteValue: return "NonFiniteValue";
    case Errc::UnsupportedFormat: return "UnsupportedFormat";
    case Errc::DurationMismatch: return "DurationMismatch";
    case Errc::MissingRecord: return "MissingRecord";
    case Errc::MissingSplit: return "MissingSplit";
    case Errc::NotEnoughRatings: return "NotEnoughRatings";
    case Errc::KeyMismatch: return "KeyMismatch";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::Empty: return "Empty";
    case Errc::EmptyClip: return "EmptyClip";
    case Errc::SilentClean: return "SilentClean";
    case Errc::SilentNoise: return "SilentNoise";
    case Errc::TooFewRecords: return "TooFewRecords";
    case Errc::UtteranceTooLong: return "UtteranceTooLong";
    case Errc::EmptySequence: return "EmptySequence";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::TooFewDistinctValues: return "TooFewDistinctValues";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::NotNormalized: return "NotNormalized";
    case Errc::SingularWithinClass: return "SingularWithinClass";
    case Errc::MissingBin: return "MissingBin";
    case Errc::NotFitted: return "NotFitted";
    case Errc::DegenerateInput: return "DegenerateInput";
    case Errc::TooFewMembers: return "TooFewMembers";
    case Errc::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

/// Process exit code for an error: 2 usage, 3 data, 4 numerical failure.
constexpr int exit_code_for(Errc code) {
  switch (code) {
    case Errc::InvalidConfig:
      return 2;
    case Errc::NonFiniteLoss:
    case Errc::SingularWithinClass:
    case Errc::DegenerateInput:
    case Errc::NotNormalized:
      return 4;
    default:
      return 3;
  }
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace moosenet

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lund {

// Every failure the library reports. The CLI maps these onto exit codes
// through is_protocol_error().
enum class ErrorKind {
  // corpus
  EmptyText,
  MissingLabel,
  DuplicateId,
  // harmonize
  ParseError,
  UnmappedLabel,
  FieldMissing,
  InvalidManifest,
  // features
  EmptyCorpus,
  // classifiers
  NonFiniteFeature,
  VocabularyMismatch,
  VersionMismatch,
  CorruptModel,
  // ensemble
  NoVotes,
  AllPredictorsFailed,
  // scorer protocol
  Unreachable,
  VersionIncompatible,
  Timeout,
  MalformedResponse,
  ScorerError,
  // evaluate
  LengthMismatch,
  EmptyMatrix,
  UnknownSource,
  UnknownItemId,
  ConflictingVerdicts,
  // generic I/O
  Io,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string payload = {})
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        payload_(std::move(payload)) {}

  ErrorKind kind() const noexcept { return kind_; }

  // Offending raw data, when there is any (e.g. the response body of a
  // MalformedResponse).
  const std::string& payload() const noexcept { return payload_; }

 private:
  ErrorKind kind_;
  std::string payload_;
};

bool is_protocol_error(ErrorKind kind);

}  // namespace lund

#include "lund/error.hpp"

namespace lund {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EmptyText: return "EmptyText";
    case ErrorKind::MissingLabel: return "MissingLabel";
    case ErrorKind::DuplicateId: return "DuplicateId";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::UnmappedLabel: return "UnmappedLabel";
    case ErrorKind::FieldMissing: return "FieldMissing";
    case ErrorKind::InvalidManifest: return "InvalidManifest";
    case ErrorKind::EmptyCorpus: return "EmptyCorpus";
    case ErrorKind::NonFiniteFeature: return "NonFiniteFeature";
    case ErrorKind::VocabularyMismatch: return "VocabularyMismatch";
    case ErrorKind::VersionMismatch: return "VersionMismatch";
    case ErrorKind::CorruptModel: return "CorruptModel";
    case ErrorKind::NoVotes: return "NoVotes";
    case ErrorKind::AllPredictorsFailed: return "AllPredictorsFailed";
    case ErrorKind::Unreachable: return "Unreachable";
    case ErrorKind::VersionIncompatible: return "VersionIncompatible";
    case ErrorKind::Timeout: return "Timeout";
    case ErrorKind::MalformedResponse: return "MalformedResponse";
    case ErrorKind::ScorerError: return "ScorerError";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::EmptyMatrix: return "EmptyMatrix";
    case ErrorKind::UnknownSource: return "UnknownSource";
    case ErrorKind::UnknownItemId: return "UnknownItemId";
    case ErrorKind::ConflictingVerdicts: return "ConflictingVerdicts";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

bool is_protocol_error(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Unreachable:
    case ErrorKind::VersionIncompatible:
    case ErrorKind::Timeout:
    case ErrorKind::MalformedResponse:
    case ErrorKind::ScorerError:
      return true;
    default:
      return false;
  }
}

}  // namespace lund

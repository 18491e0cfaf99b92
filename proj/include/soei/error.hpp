#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace soei {

// Stable machine-readable error codes. The string form is part of the HTTP
// and CLI contract; do not rename existing entries.
enum class ErrorCode {
  InvalidArgument,
  InvalidTuple,
  TraitMismatch,
  WrongTurnOrder,
  MissingPlaceholder,
  Timeout,
  Transport,
  BadStatus,
  ExhaustedRetries,
  CassetteMiss,
  JudgeUnavailable,
  AnnotationFailure,
  RankParseFailure,
  UnknownItem,
  EmptyText,
  EmptyCorpus,
  ClassifierUnavailable,
  TooFewCohorts,
  EmptyGroup,
  UnequalRaters,
  DegenerateAgreement,
  LengthMismatch,
  ZeroVariance,
  TooFewGroups,
  DegenerateVariance,
  UnbalancedDesign,
  EmptyPredictions,
  StorageFailure,
  NotFound,
  SessionEnded,
  TurnInFlight,
  PendingTurnMismatch,
  NotEnded,
  TurnLimit,
  GatewayError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Error carrying an HTTP status from a chat backend.
class BadStatusError : public Error {
 public:
  BadStatusError(int status, const std::string& body)
      : Error(ErrorCode::BadStatus, "backend returned HTTP " + std::to_string(status) + ": " + body),
        status_(status) {}

  int status() const noexcept { return status_; }

 private:
  int status_;
};

}  // namespace soei

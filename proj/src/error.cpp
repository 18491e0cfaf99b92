#include "soei/error.hpp"

namespace soei {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::InvalidTuple: return "invalid_tuple";
    case ErrorCode::TraitMismatch: return "trait_mismatch";
    case ErrorCode::WrongTurnOrder: return "wrong_turn_order";
    case ErrorCode::MissingPlaceholder: return "missing_placeholder";
    case ErrorCode::Timeout: return "timeout";
    case ErrorCode::Transport: return "transport";
    case ErrorCode::BadStatus: return "bad_status";
    case ErrorCode::ExhaustedRetries: return "exhausted_retries";
    case ErrorCode::CassetteMiss: return "cassette_miss";
    case ErrorCode::JudgeUnavailable: return "judge_unavailable";
    case ErrorCode::AnnotationFailure: return "annotation_failure";
    case ErrorCode::RankParseFailure: return "rank_parse_failure";
    case ErrorCode::UnknownItem: return "unknown_item";
    case ErrorCode::EmptyText: return "empty_text";
    case ErrorCode::EmptyCorpus: return "empty_corpus";
    case ErrorCode::ClassifierUnavailable: return "classifier_unavailable";
    case ErrorCode::TooFewCohorts: return "too_few_cohorts";
    case ErrorCode::EmptyGroup: return "empty_group";
    case ErrorCode::UnequalRaters: return "unequal_raters";
    case ErrorCode::DegenerateAgreement: return "degenerate_agreement";
    case ErrorCode::LengthMismatch: return "length_mismatch";
    case ErrorCode::ZeroVariance: return "zero_variance";
    case ErrorCode::TooFewGroups: return "too_few_groups";
    case ErrorCode::DegenerateVariance: return "degenerate_variance";
    case ErrorCode::UnbalancedDesign: return "unbalanced_design";
    case ErrorCode::EmptyPredictions: return "empty_predictions";
    case ErrorCode::StorageFailure: return "storage_failure";
    case ErrorCode::NotFound: return "not_found";
    case ErrorCode::SessionEnded: return "session_ended";
    case ErrorCode::TurnInFlight: return "turn_in_flight";
    case ErrorCode::PendingTurnMismatch: return "pending_turn_mismatch";
    case ErrorCode::NotEnded: return "not_ended";
    case ErrorCode::TurnLimit: return "turn_limit";
    case ErrorCode::GatewayError: return "gateway_error";
  }
  return "unknown";
}

}  // namespace soei

#include "glassnav/error.hpp"

namespace glassnav {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kDegenerate: return "Degenerate";
    case ErrorCode::kDisjointInputs: return "DisjointInputs";
    case ErrorCode::kNonUnit: return "NonUnit";
    case ErrorCode::kEmptyMask: return "EmptyMask";
    case ErrorCode::kInvalidDepth: return "InvalidDepth";
    case ErrorCode::kPoseOutOfBounds: return "PoseOutOfBounds";
    case ErrorCode::kNotConfirmed: return "NotConfirmed";
    case ErrorCode::kNotPotential: return "NotPotential";
    case ErrorCode::kVerticalNormal: return "VerticalNormal";
    case ErrorCode::kOnPlane: return "OnPlane";
    case ErrorCode::kNotAtReadyPose: return "NotAtReadyPose";
    case ErrorCode::kStartOccupied: return "StartOccupied";
    case ErrorCode::kGoalOccupied: return "GoalOccupied";
    case ErrorCode::kSamplingExhausted: return "SamplingExhausted";
    case ErrorCode::kScenario: return "ScenarioError";
  }
  return "Unknown";
}

}  // namespace glassnav

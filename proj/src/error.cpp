#include "geoprop/error.hpp"

namespace geoprop {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::UnreadableFile: return "UnreadableFile";
    case ErrorKind::FormatMismatch: return "FormatMismatch";
    case ErrorKind::InsufficientEvidence: return "InsufficientEvidence";
    case ErrorKind::DegenerateMidpoint: return "DegenerateMidpoint";
    case ErrorKind::NoRegions: return "NoRegions";
    case ErrorKind::EmptySet: return "EmptySet";
    case ErrorKind::EmptySeries: return "EmptySeries";
    case ErrorKind::EmptyAfterPreprocess: return "EmptyAfterPreprocess";
    case ErrorKind::NoTokens: return "NoTokens";
    case ErrorKind::EmptyForest: return "EmptyForest";
    case ErrorKind::BadConfig: return "BadConfig";
  }
  return "Unknown";
}

}  // namespace geoprop

#include "binspp/error.hpp"

namespace binspp {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::SilentInput: return "SilentInput";
    case ErrorCode::EmptyDirectory: return "EmptyDirectory";
    case ErrorCode::InvalidLength: return "InvalidLength";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::BinCountMismatch: return "BinCountMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::AllSilent: return "AllSilent";
    case ErrorCode::InvalidDims: return "InvalidDims";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::StaleCache: return "StaleCache";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::BinOutOfRange: return "BinOutOfRange";
    case ErrorCode::EmptyManifest: return "EmptyManifest";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace binspp

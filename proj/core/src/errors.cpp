#include "podpipe/errors.hpp"

namespace podpipe {

const char* to_string(Errc c) {
  switch (c) {
    case Errc::validation: return "validation";
    case Errc::config: return "config";
    case Errc::not_found: return "not-found";
    case Errc::parse: return "parse";
    case Errc::integrity: return "integrity";
    case Errc::mode_unavailable: return "mode-unavailable";
    case Errc::lookup: return "lookup";
    case Errc::degenerate_series: return "degenerate-series";
    case Errc::insufficient_data: return "insufficient-data";
    case Errc::duplicate_side: return "duplicate-side";
    case Errc::unsupported_frame: return "unsupported-frame";
    case Errc::segmentation_mismatch: return "segmentation-mismatch";
    case Errc::empty_selection: return "empty-selection";
  }
  return "unknown";
}

int exit_code_for(Errc c) {
  switch (c) {
    case Errc::validation:
    case Errc::config:
      return 2;
    case Errc::mode_unavailable:
      return 3;
    default:
      return 4;
  }
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(message), code_(code) {}

Error::Error(Errc code, const std::string& file, int line, const std::string& message)
    : std::runtime_error(file + ":" + std::to_string(line) + ": " + message),
      code_(code),
      file_(file),
      line_(line) {}

void fail(Errc code, const std::string& message) { throw Error(code, message); }

void fail_at(Errc code, const std::string& file, int line, const std::string& message) {
  throw Error(code, file, line, message);
}

}  // namespace podpipe

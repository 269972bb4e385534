#pragma once

#include <stdexcept>
#include <string>

namespace podpipe {

/// Failure categories carried by every Error. CLI exit codes map onto
/// these: config/validation problems exit 2, an unavailable split mode
/// exits 3, and data problems (parse, integrity, lookup, ...) exit 4.
enum class Errc {
  validation,
  config,
  not_found,
  parse,
  integrity,
  mode_unavailable,
  lookup,
  degenerate_series,
  insufficient_data,
  duplicate_side,
  unsupported_frame,
  segmentation_mismatch,
  empty_selection,
};

const char* to_string(Errc c);
int exit_code_for(Errc c);

/// Exception used on all failure paths. Parse and integrity errors carry
/// the offending file and 1-based line; the message then starts with
/// "<file>:<line>:".
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);
  Error(Errc code, const std::string& file, int line, const std::string& message);

  Errc code() const { return code_; }
  const std::string& file() const { return file_; }
  int line() const { return line_; }

 private:
  Errc code_;
  std::string file_;
  int line_ = 0;
};

[[noreturn]] void fail(Errc code, const std::string& message);
[[noreturn]] void fail_at(Errc code, const std::string& file, int line, const std::string& message);

}  // namespace podpipe

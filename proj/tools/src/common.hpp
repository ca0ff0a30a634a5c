#pragma once

#include <json.hpp>

#include <stdexcept>
#include <string>

#include "iclflow/types.hpp"

namespace icltool {

using ordered_json = nlohmann::ordered_json;

// Exit codes shared by all subcommands.
inline constexpr int kOk = 0;
inline constexpr int kValidationFailure = 1;
inline constexpr int kBlowUp = 2;
inline constexpr int kUsage = 64;

// Bad user input detected after flag parsing (unknown system name,
// non-positive horizon, malformed matrix file, ...).  Mapped to kUsage.
struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Resolves a covariance argument:
//   "identity"        -> I_d (d from the flag, default 1)
//   "diag:a,b,..."    -> diagonal matrix; sets/validates d
//   anything else     -> path to a JSON file holding either a bare square
//                        row-major array or an object with a "lambda" key.
// On entry d holds the --d flag value (0 if the caller allows inference);
// on return d is the resolved dimension.
iclflow::Mat parse_lambda(const std::string& text, int& d);

// Shortest round-trip decimal form (std::to_chars), used for CSV output.
std::string format_double(double v);

// Writes payload to the path, or to stdout when path is empty or "-".
void write_output(const std::string& path, const std::string& payload);

// Report envelope: tool name, version, subcommand.
ordered_json make_envelope(const std::string& command);

// JSON forms of vectors/matrices.
ordered_json to_json(const iclflow::Vec& v);
ordered_json to_json(const iclflow::Mat& m);

}  // namespace icltool

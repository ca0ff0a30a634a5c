#pragma once

#include <string>
#include <string_view>

#include "iclflow/model.hpp"

namespace iclflow {

/// JSON text with fixed key order {"d", "N", "lambda"}; lambda is a nested
/// row-major array.
std::string to_json_string(const ModelSpec& spec);

/// Parses the representation produced by to_json_string.  Throws
/// std::invalid_argument on malformed input or shape mismatch.
ModelSpec model_spec_from_json(std::string_view text);

/// JSON text with fixed key order {"U", "z", "Z", "v"}.
std::string to_json_string(const FullState& state);

/// Parses the representation produced by to_json_string.  Throws
/// std::invalid_argument on malformed input, shape mismatch, or non-finite
/// entries.
FullState full_state_from_json(std::string_view text);

}  // namespace iclflow

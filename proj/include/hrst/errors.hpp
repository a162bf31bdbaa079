#pragma once

#include <stdexcept>
#include <string>

namespace hrst {

// Library errors are exceptions; the CLI maps ConfigError-family to exit
// code 2 and everything else to 3.
struct ConfigError : std::runtime_error { using std::runtime_error::runtime_error; };
struct RuntimeFailure : std::runtime_error { using std::runtime_error::runtime_error; };

struct UnreadableFile : ConfigError { using ConfigError::ConfigError; };
struct UnsupportedFormat : ConfigError { using ConfigError::ConfigError; };
struct InvalidTarget : ConfigError { using ConfigError::ConfigError; };
struct WrongRangeMode : RuntimeFailure { using RuntimeFailure::RuntimeFailure; };
struct InvalidSpec : ConfigError { using ConfigError::ConfigError; };
struct IndivisibleInput : RuntimeFailure { using RuntimeFailure::RuntimeFailure; };
struct ScaleMismatch : RuntimeFailure { using RuntimeFailure::RuntimeFailure; };
struct UnknownLayer : ConfigError { using ConfigError::ConfigError; };
struct ShapeMismatch : RuntimeFailure { using RuntimeFailure::RuntimeFailure; };
struct ChannelMismatch : RuntimeFailure { using RuntimeFailure::RuntimeFailure; };
struct MissingLayer : RuntimeFailure { using RuntimeFailure::RuntimeFailure; };
struct ExtractorUnavailable : ConfigError { using ConfigError::ConfigError; };
struct CorruptCheckpoint : RuntimeFailure { using RuntimeFailure::RuntimeFailure; };
struct TooSmall : RuntimeFailure { using RuntimeFailure::RuntimeFailure; };

} // namespace hrst

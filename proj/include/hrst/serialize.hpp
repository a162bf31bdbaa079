#pragma once

#include <string>
#include <vector>

#include "hrst/tensor.hpp"

namespace hrst::serialize {

// Binary container of named tensors with a free-form JSON metadata blob.
// Round-trips bit-exactly; used for extractor weight files (float32
// payload) and training checkpoints (float64 payload).
struct Container {
    std::string metadata_json;          // "{}" when unused
    std::vector<NamedTensor> tensors;
};

inline constexpr char kMagic[4] = {'H', 'R', 'T', 'C'};
inline constexpr std::uint32_t kVersion = 1;

enum class Payload : std::uint8_t { Float64 = 0, Float32 = 1 };

void write_container(const std::string& path, const Container& c, Payload p);
Container read_container(const std::string& path);

// Hex-encoded SHA-256 of a file's contents.
std::string sha256_file(const std::string& path);

} // namespace hrst::serialize

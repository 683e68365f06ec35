#pragma once

// File artifacts: atomic writes, line-delimited corpora, content hashes and
// the flat little-endian model format.

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "llmceg/lm.hpp"

namespace llmceg::io {

namespace fs = std::filesystem;

// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view bytes);
// Hash of lines joined with '\n' (each line terminated).
std::string hash_lines(std::span<const std::string> lines);

// Writes to a sibling temp file and renames over the target.
void atomic_write(const fs::path& path, std::string_view bytes);
std::string read_file(const fs::path& path);

void write_lines(const fs::path& path, std::span<const std::string> lines);
std::vector<std::string> read_lines(const fs::path& path);

// Little-endian 64-bit floats, in layout order.
std::string encode_params(const lm::ModelParams& params);
// JSON manifest describing config and tensor shapes.
std::string params_manifest(const lm::ModelParams& params);
// SHA-256 over the binary image followed by the manifest text.
std::string model_hash(const lm::ModelParams& params);

// Writes <stem>.bin and <stem>.json; returns the model hash.
std::string save_model(const fs::path& bin_path, const lm::ModelParams& params);
// Reads a model written by save_model (manifest at bin_path with extension .json).
lm::ModelParams load_model(const fs::path& bin_path);

fs::path manifest_path_for(const fs::path& bin_path);

}  // namespace llmceg::io

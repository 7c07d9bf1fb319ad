#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "lswjp/model.hpp"

namespace lswjp {

inline constexpr int kCheckpointVersion = 1;

// JSON document: format tag, version, model config, data-config hash and
// every parameter array (row-major).
void save_checkpoint(std::ostream& out, const Model& model, std::uint64_t data_hash);
void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     std::uint64_t data_hash);

// Throws DataError on a malformed file, a version or shape mismatch, or a
// data hash that differs from `expected_data_hash`.
Model load_checkpoint(std::istream& in, std::uint64_t expected_data_hash);
Model load_checkpoint(const std::filesystem::path& path, std::uint64_t expected_data_hash);

}  // namespace lswjp

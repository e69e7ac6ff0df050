// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vocalplan/vocal_features.hpp"

namespace vocalplan::cli {

struct ManifestRow {
  std::size_t line = 0;
  nlohmann::json fields;
};

/// JSON-lines manifest. Relative paths inside rows resolve against `base`.
struct Manifest {
  std::filesystem::path path;
  std::filesystem::path base;
  std::vector<ManifestRow> rows;

  std::string where(const ManifestRow& row) const;
  std::string text(const ManifestRow& row, const char* key) const;
  double number(const ManifestRow& row, const char* key) const;
  std::vector<std::uint32_t> codes(const ManifestRow& row, const char* key) const;
  std::filesystem::path resolve(const std::string& relative) const;
  /// Inline "plan" (array or JSON text) or a "plan_path" file; nullopt if neither.
  std::optional<VocalPlan> plan(const ManifestRow& row) const;
};

Manifest read_manifest(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
/// Writes to `path`, or to stdout when `path` is empty.
void emit(const std::filesystem::path& path, const std::string& content);

}  // namespace vocalplan::cli

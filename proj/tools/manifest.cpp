// SPDX-License-Identifier: Apache-2.0
#include "manifest.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "vocalplan/errors.hpp"

namespace vocalplan::cli {

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open manifest '{}'", path.string()));
  Manifest m;
  m.path = path;
  m.base = path.parent_path();
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ManifestRow row;
    row.line = n;
    try {
      row.fields = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw InputError(fmt::format("{}:{}: not valid JSON", path.string(), n));
    }
    if (!row.fields.is_object()) throw InputError(fmt::format("{}:{}: expected a JSON object", path.string(), n));
    m.rows.push_back(std::move(row));
  }
  return m;
}

std::string Manifest::where(const ManifestRow& row) const { return fmt::format("{}:{}", path.string(), row.line); }

std::string Manifest::text(const ManifestRow& row, const char* key) const {
  const auto it = row.fields.find(key);
  if (it == row.fields.end()) throw InputError(fmt::format("{}: missing field '{}'", where(row), key));
  if (!it->is_string()) throw InputError(fmt::format("{}: field '{}' must be a string", where(row), key));
  return it->get<std::string>();
}

double Manifest::number(const ManifestRow& row, const char* key) const {
  const auto it = row.fields.find(key);
  if (it == row.fields.end()) throw InputError(fmt::format("{}: missing field '{}'", where(row), key));
  if (!it->is_number()) throw InputError(fmt::format("{}: field '{}' must be a number", where(row), key));
  return it->get<double>();
}

std::vector<std::uint32_t> Manifest::codes(const ManifestRow& row, const char* key) const {
  const auto it = row.fields.find(key);
  if (it == row.fields.end()) throw InputError(fmt::format("{}: missing field '{}'", where(row), key));
  if (!it->is_array()) throw InputError(fmt::format("{}: field '{}' must be an array", where(row), key));
  std::vector<std::uint32_t> out;
  out.reserve(it->size());
  for (const auto& v : *it) {
    if (!v.is_number_unsigned() || v.get<std::uint64_t>() > UINT32_MAX) {
      throw InputError(fmt::format("{}: field '{}' holds {}, not a token code", where(row), key, v.dump()));
    }
    out.push_back(static_cast<std::uint32_t>(v.get<std::uint64_t>()));
  }
  return out;
}

std::filesystem::path Manifest::resolve(const std::string& relative) const {
  const std::filesystem::path p(relative);
  return p.is_absolute() ? p : base / p;
}

std::optional<VocalPlan> Manifest::plan(const ManifestRow& row) const {
  std::string text;
  if (const auto it = row.fields.find("plan"); it != row.fields.end() && !it->is_null()) {
    text = it->is_string() ? it->get<std::string>() : it->dump();
  } else if (const auto p = row.fields.find("plan_path"); p != row.fields.end() && !p->is_null()) {
    if (!p->is_string()) throw InputError(fmt::format("{}: field 'plan_path' must be a string", where(row)));
    text = read_file(resolve(p->get<std::string>()));
  } else {
    return std::nullopt;
  }
  try {
    return parse_plan(text);
  } catch (const SchemaError& e) {
    throw SchemaError(fmt::format("{}: {}", where(row), e.what()));
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit(const std::filesystem::path& path, const std::string& content) {
  if (path.empty()) {
    std::fwrite(content.data(), 1, content.size(), stdout);
    std::fflush(stdout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(fmt::format("cannot write '{}'", path.string()));
  out << content;
  if (!out) throw InputError(fmt::format("write to '{}' failed", path.string()));
}

}  // namespace vocalplan::cli

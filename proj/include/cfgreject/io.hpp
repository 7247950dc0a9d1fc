#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cfgreject/distribution.hpp"

namespace cfgreject {

/// Raised for unreadable, unwritable or malformed files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);
std::string format_optional(const std::optional<double>& value);

/// {classes: [{label, components: [{weight, mean, cov}]}], priors: [...]}.
nlohmann::json mixture_to_json(const MixtureDistribution& dist);
MixtureDistribution mixture_from_json(const nlohmann::json& doc);

void save_mixture(const MixtureDistribution& dist, const std::filesystem::path& path);
MixtureDistribution load_mixture(const std::filesystem::path& path);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view contents);

/// Minimal reader for the comma-separated numeric tables this tool writes
/// (no quoting, no embedded commas).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column position; throws IoError when absent.
  std::size_t column(std::string_view name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

}  // namespace cfgreject

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "proxybounds/types.hpp"

namespace proxybounds {

/// Which CSV columns play which role. Covariates are optional; a constant
/// column is prepended automatically.
struct ColumnMap {
  std::string outcome;
  std::string proxy1;
  std::string proxy2;
  std::vector<std::string> covariates;
  std::optional<std::string> cluster;
};

struct LoadedSample {
  Sample sample;
  std::size_t dropped_rows = 0;  // rows removed for missing values
};

/// Reads a UTF-8, comma-separated, header-first CSV and assembles a Sample
/// from the mapped columns. Cells equal to "", "NA", "na", "NaN" or "nan"
/// count as missing and drop the whole row; other non-numeric cells in
/// mapped columns are parse errors. Cluster labels must be integers.
LoadedSample load_sample_csv(const std::filesystem::path& path, const ColumnMap& columns);

}  // namespace proxybounds

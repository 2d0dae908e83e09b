#pragma once

#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "ndt/monitor.hpp"

namespace ndt {

/// Parsed dataset CSV. Throws SchemaError with a column diff when the header
/// does not match kDatasetColumns exactly.
std::vector<SampleRow> read_dataset(const std::filesystem::path& path);
std::vector<SampleRow> parse_dataset(std::string_view text);

/// Column values by schema name; absent latency stays nullopt.
std::vector<std::optional<double>> column(std::span<const SampleRow> rows, std::string_view name);
std::optional<double> field(const SampleRow& row, std::string_view name);
bool is_column(std::string_view name);

}  // namespace ndt

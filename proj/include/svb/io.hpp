#pragma once

// File formats: CSV for tabular data, JSON for structured results.
// Doubles are written in shortest round-trip form so output is bitwise
// reproducible.

#include "svb/distributions.hpp"
#include "svb/engine.hpp"
#include "svb/grid_oracle.hpp"
#include "svb/posterior.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <string_view>

namespace svb::io {

using json = nlohmann::ordered_json;

[[nodiscard]] std::string format_double(double value);

/// Throws svb::IoError.
void write_text(const std::filesystem::path& path, std::string_view content);
[[nodiscard]] std::string read_text(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& doc);
[[nodiscard]] json read_json(const std::filesystem::path& path);

/// Header `y`, one value per row.
[[nodiscard]] std::string data_to_csv(const Dataset& data);
/// Throws std::invalid_argument naming the offending line on parse errors.
[[nodiscard]] Dataset data_from_csv(std::string_view text);

[[nodiscard]] json posterior_to_json(const PosteriorSummary& posterior);
[[nodiscard]] PosteriorSummary posterior_from_json(const json& doc);

/// Header `epoch,step,F,kl,mc_loglik`.
[[nodiscard]] std::string trace_to_csv(const FreeEnergyTrace& trace);
[[nodiscard]] json config_to_json(const TrainConfig& config);
[[nodiscard]] json fit_to_json(const FitResult& fit);

/// Header `mu,logvar,mass`.
[[nodiscard]] std::string grid_to_csv(const GridResult& grid);
/// {means, variances, map, rho} plus the axis description.
[[nodiscard]] json grid_summary_to_json(const GridResult& grid, const GridSpec& spec);
[[nodiscard]] MomentSummary moments_from_grid_summary(const json& doc);
/// Accepts a fit document or a grid summary.
[[nodiscard]] MomentSummary moments_from_fit(const json& doc);

[[nodiscard]] json comparison_to_json(const ComparisonReport& report);
[[nodiscard]] std::string comparison_table(const ComparisonReport& report);

}  // namespace svb::io

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hetfl/config.hpp"
#include "hetfl/federation.hpp"

namespace hetfl {

/// Parses a flat `key = value` config ('#' starts a comment). Omitted keys take their
/// defaults; `num_clients` and `seed` are required. The result is validated.
FederationConfig parse_config(const std::string& path);
FederationConfig parse_config_text(const std::string& text);

/// Every key, one per line, in a form parse_config_text reads back to an equal config.
std::string format_config(const FederationConfig& config);

std::string config_to_json(const FederationConfig& config);
FederationConfig config_from_json(const std::string& json_text);

struct GridAxes {
  std::vector<double> mus;
  std::vector<NoiseKind> kinds;
  std::vector<Method> methods;
};

/// Cell configs in execution order: mu outermost, then noise kind, then method. Every
/// cell keeps the base seed so cells differ only along the grid axes.
std::vector<FederationConfig> grid_cells(const FederationConfig& base, const GridAxes& axes);

/// Runs every cell; a failing cell is recorded in its result and the others still run.
std::vector<ExperimentResult> run_grid(const FederationConfig& base, const GridAxes& axes);

/// Writes summary.csv, and cell_NNN/round_metrics.csv + cell_NNN/config.json per result.
void emit_metrics(const std::vector<ExperimentResult>& results, const std::string& out_dir);

struct SummaryRow {
  std::size_t cell = 0;
  std::string noise_kind;
  double noise_rate = 0.0;
  std::string method;
  std::uint64_t seed = 0;
  std::vector<std::string> arch_ids;
  std::vector<double> accuracy;
  double average = 0.0;
  std::string status;
};

struct SummaryTable {
  std::vector<std::string> header;
  std::vector<SummaryRow> rows;
};

SummaryTable read_summary(const std::string& path);
std::vector<RoundMetrics> read_round_metrics(const std::string& path);

/// printf("%.6g") as used by every emitted CSV.
std::string format_number(double value);

/// Splits one CSV line, honouring double-quoted fields.
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace hetfl

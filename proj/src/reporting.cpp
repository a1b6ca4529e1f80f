#include "hetfl/reporting.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hetfl/errors.hpp"

namespace hetfl {
namespace {

namespace fs = std::filesystem;

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string cell_dir_name(std::size_t cell) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "cell_%03zu", cell);
  return buf;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  if (lines.empty()) throw ParseError(path + ": missing header");
  return lines;
}

double parse_real(const std::string& path, std::size_t line, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ParseError(path + ":" + std::to_string(line) + ": expected a number, got '" + text + "'");
  }
}

std::string round_metrics_csv(const ExperimentResult& r) {
  const std::size_t clients = r.arch_ids.size();
  std::vector<std::string> header{"round"};
  for (std::size_t p = 0; p < clients; ++p) header.push_back("acc_client_" + std::to_string(p));
  for (const char* h : {"average_accuracy", "mean_pairwise_kl", "mean_local_loss", "mean_alignment_loss"}) {
    header.emplace_back(h);
  }
  std::string out = join(header, ',') + "\n";
  for (const auto& m : r.per_round) {
    std::vector<std::string> row{std::to_string(m.round)};
    for (double a : m.per_client_accuracy) row.push_back(format_number(a));
    row.push_back(format_number(m.average_accuracy));
    row.push_back(format_number(m.mean_pairwise_kl));
    row.push_back(format_number(m.mean_local_loss));
    row.push_back(format_number(m.mean_alignment_loss));
    out += join(row, ',') + "\n";
  }
  return out;
}

}  // namespace

std::string format_number(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", value);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<FederationConfig> grid_cells(const FederationConfig& base, const GridAxes& axes) {
  if (axes.mus.empty() || axes.kinds.empty() || axes.methods.empty()) {
    throw ValidationError("grid axes --mu, --kind and --method must all be non-empty");
  }
  std::vector<FederationConfig> cells;
  for (double mu : axes.mus) {
    for (NoiseKind kind : axes.kinds) {
      for (const Method& method : axes.methods) {
        FederationConfig c = base;
        c.noise_rate = mu;
        c.noise_kind = kind;
        c.use_symmetric_loss = method.use_symmetric_loss;
        c.use_collaboration = method.use_collaboration;
        cells.push_back(std::move(c));
      }
    }
  }
  return cells;
}

std::vector<ExperimentResult> run_grid(const FederationConfig& base, const GridAxes& axes) {
  std::vector<ExperimentResult> results;
  for (const auto& cell : grid_cells(base, axes)) {
    try {
      results.push_back(run_federation(cell));
    } catch (const std::exception& e) {
      ExperimentResult failed;
      failed.config = cell;
      failed.error = e.what();
      results.push_back(std::move(failed));
    }
  }
  return results;
}

void emit_metrics(const std::vector<ExperimentResult>& results, const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());

  std::size_t clients = 0;
  for (const auto& r : results) clients = std::max(clients, r.config.num_clients);

  std::vector<std::string> header{"cell", "noise_kind", "noise_rate", "method", "seed", "archs"};
  for (std::size_t p = 0; p < clients; ++p) header.push_back("acc_client_" + std::to_string(p));
  header.emplace_back("average");
  header.emplace_back("status");
  std::string summary = join(header, ',') + "\n";

  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    std::vector<std::string> row{std::to_string(i), to_string(r.config.noise_kind), format_number(r.config.noise_rate),
                                 method_name(r.config), std::to_string(r.config.seed), csv_field(join(r.arch_ids, ';'))};
    for (std::size_t p = 0; p < clients; ++p) {
      row.push_back(r.ok() && p < r.final_accuracy.size() ? format_number(r.final_accuracy[p]) : "");
    }
    row.push_back(r.ok() ? format_number(r.final_average) : "");
    row.push_back(csv_field(r.ok() ? "ok" : "failed: " + r.error));
    summary += join(row, ',') + "\n";

    const fs::path cell_dir = fs::path(out_dir) / cell_dir_name(i);
    fs::create_directories(cell_dir, ec);
    if (ec) throw IoError("cannot create " + cell_dir.string() + ": " + ec.message());
    write_file(cell_dir / "config.json", config_to_json(r.config));
    write_file(cell_dir / "round_metrics.csv", round_metrics_csv(r));
  }
  write_file(fs::path(out_dir) / "summary.csv", summary);
}

SummaryTable read_summary(const std::string& path) {
  const auto lines = read_lines(path);
  SummaryTable table;
  table.header = split_csv_line(lines[0]);
  const std::size_t cols = table.header.size();
  if (cols < 8 || table.header.front() != "cell" || table.header.back() != "status") {
    throw ParseError(path + ":1: unexpected summary header");
  }
  const std::size_t clients = cols - 8;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto f = split_csv_line(lines[li]);
    if (f.size() != cols) throw ParseError(path + ":" + std::to_string(li + 1) + ": expected " + std::to_string(cols) + " fields");
    SummaryRow row;
    row.cell = static_cast<std::size_t>(parse_real(path, li + 1, f[0]));
    row.noise_kind = f[1];
    row.noise_rate = parse_real(path, li + 1, f[2]);
    row.method = f[3];
    row.seed = std::stoull(f[4]);
    row.arch_ids = split(f[5], ';');
    row.status = f.back();
    if (row.status == "ok") {
      for (std::size_t p = 0; p < clients; ++p) {
        if (!f[6 + p].empty()) row.accuracy.push_back(parse_real(path, li + 1, f[6 + p]));
      }
      row.average = parse_real(path, li + 1, f[6 + clients]);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::vector<RoundMetrics> read_round_metrics(const std::string& path) {
  const auto lines = read_lines(path);
  const auto header = split_csv_line(lines[0]);
  if (header.size() < 6 || header.front() != "round") throw ParseError(path + ":1: unexpected round_metrics header");
  const std::size_t clients = header.size() - 5;
  std::vector<RoundMetrics> out;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto f = split_csv_line(lines[li]);
    if (f.size() != header.size()) throw ParseError(path + ":" + std::to_string(li + 1) + ": wrong field count");
    RoundMetrics m;
    m.round = static_cast<int>(parse_real(path, li + 1, f[0]));
    for (std::size_t p = 0; p < clients; ++p) m.per_client_accuracy.push_back(parse_real(path, li + 1, f[1 + p]));
    m.average_accuracy = parse_real(path, li + 1, f[1 + clients]);
    m.mean_pairwise_kl = parse_real(path, li + 1, f[2 + clients]);
    m.mean_local_loss = parse_real(path, li + 1, f[3 + clients]);
    m.mean_alignment_loss = parse_real(path, li + 1, f[4 + clients]);
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace hetfl

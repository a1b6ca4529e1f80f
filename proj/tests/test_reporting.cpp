#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "hetfl/errors.hpp"
#include "hetfl/reporting.hpp"

using namespace hetfl;
namespace fs = std::filesystem;

namespace {

const char* kSmall =
    "num_clients = 3\n"
    "seed = 4\n"
    "rounds = 2\n"
    "synthetic_samples = 650\n"
    "synthetic_dim = 16\n"
    "synthetic_classes = 5\n";

FederationConfig small_config() { return parse_config_text(kSmall); }

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "hetfl_test_reporting" / name;
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string error_of(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("omitted keys take the documented defaults") {
  const auto c = parse_config_text("num_clients = 4\nseed = 0\n");
  CHECK(c.learning_rate == 0.001);
  CHECK(c.batch_size == 16);
  CHECK(c.lambda == 0.1);
  CHECK(c.gamma == 0.5);
  CHECK(c.rounds == 40);
  CHECK(c.local_epochs == 1);
  CHECK(c == FederationConfig{});
}

TEST_CASE("invalid configs name the offending key") {
  CHECK(error_of("num_clients = 4\nseed = 0\nnoise_rate = 1.5\nnoise_kind = symmetric\n").find("noise_rate") !=
        std::string::npos);
  CHECK(error_of("num_clients = 4\n").find("seed") != std::string::npos);
  CHECK(error_of("num_clients = 4\nseed = 0\nlearning_rat = 0.1\n").find("learning_rat") != std::string::npos);
  CHECK(error_of("num_clients = 4\nseed = 0\nseed = 1\n").find("duplicate") != std::string::npos);
  CHECK(error_of("num_clients = 1\nseed = 0\n").find("num_clients") != std::string::npos);
  CHECK(error_of("num_clients = 4\nseed = 0\ngamma = 0\n").find("gamma") != std::string::npos);
  CHECK(error_of("num_clients = 4\nseed = 0\nbatch_size = 0\n").find("batch_size") != std::string::npos);
  CHECK(error_of("num_clients = 4\nseed = 0\nlearning_rate = 0\n").find("learning_rate") != std::string::npos);
  CHECK(error_of("num_clients = 4\nseed = 0\nlambda = -1\n").find("lambda") != std::string::npos);
  CHECK(error_of("num_clients = 4\nseed = 0\nrounds = -1\n").find("rounds") != std::string::npos);
  CHECK(error_of("num_clients = four\nseed = 0\n").find("num_clients") != std::string::npos);
  CHECK(error_of("num_clients = 4\nseed = 0\nnoise_kind = diagonal\n").find("noise_kind") != std::string::npos);
  CHECK(error_of("num_clients = 4\nseed = 0\njust words\n").find("line 3") != std::string::npos);
  CHECK_THROWS_AS(parse_config((fs::temp_directory_path() / "hetfl-no-such.cfg").string()), IoError);
}

TEST_CASE("comments and whitespace are ignored") {
  const auto c = parse_config_text("# experiment\n  num_clients=5   # five\n\nseed = 12\nnoise_kind = pair\nnoise_rate = 0.2\n");
  CHECK(c.num_clients == 5);
  CHECK(c.seed == 12);
  CHECK(c.noise_kind == NoiseKind::pair);
  CHECK(c.noise_rate == 0.2);
}

TEST_CASE("resolved configs round-trip through text and json") {
  FederationConfig c = small_config();
  c.learning_rate = 0.1 / 3.0;
  c.noise_kind = NoiseKind::pair;
  c.noise_rate = 0.3;
  c.use_collaboration = false;
  c.architecture = "mlp-32-16";
  CHECK(parse_config_text(format_config(c)) == c);
  CHECK(config_from_json(config_to_json(c)) == c);
  CHECK(parse_config_text(format_config(parse_config_text(format_config(c)))) == c);
}

TEST_CASE("methods") {
  CHECK(builtin_methods().size() == 4);
  CHECK(parse_method("full") == Method{"full", true, true});
  CHECK(parse_method("ce-local") == Method{"ce-local", false, false});
  CHECK_THROWS_AS(parse_method("fedavg"), ValidationError);
  FederationConfig c;
  c.use_symmetric_loss = false;
  CHECK(method_name(c) == "ce-collab");
}

TEST_CASE("a one-cell grid is a single run") {
  const auto base = small_config();
  const auto grid = run_grid(base, {{0.0}, {NoiseKind::none}, {parse_method("full")}});
  REQUIRE(grid.size() == 1);
  const auto single = run_federation(base);
  CHECK(grid[0].config == base);
  CHECK(grid[0].final_accuracy == single.final_accuracy);
  for (std::size_t i = 0; i < single.final_models.size(); ++i)
    CHECK(grid[0].final_models[i].same_parameters(single.final_models[i]));
}

TEST_CASE("grid cells follow mu, kind, method order and keep the base seed") {
  const auto cells = grid_cells(small_config(), {{0.1, 0.2, 0.3}, {NoiseKind::symmetric, NoiseKind::pair}, {parse_method("full")}});
  REQUIRE(cells.size() == 6);
  CHECK(cells[0].noise_rate == 0.1);
  CHECK(cells[1].noise_kind == NoiseKind::pair);
  CHECK(cells[5].noise_rate == 0.3);
  for (const auto& c : cells) CHECK(c.seed == 4);
  CHECK_THROWS_AS(grid_cells(small_config(), {{}, {NoiseKind::pair}, {parse_method("full")}}), ValidationError);
}

TEST_CASE("grid failures are recorded per cell") {
  auto base = small_config();
  const auto results = run_grid(base, {{0.2, 0.7}, {NoiseKind::pair}, {parse_method("full")}});
  REQUIRE(results.size() == 2);
  CHECK(results[0].ok());
  CHECK_FALSE(results[1].ok());
  const auto dir = fresh_dir("failed");
  emit_metrics(results, dir.string());
  const auto table = read_summary((dir / "summary.csv").string());
  CHECK(table.rows[0].status == "ok");
  CHECK(table.rows[1].status.rfind("failed: ", 0) == 0);
}

TEST_CASE("six-cell grid emits consistent, reproducible files") {
  const GridAxes axes{{0.1, 0.2, 0.3}, {NoiseKind::symmetric, NoiseKind::pair}, {parse_method("full")}};
  const auto results = run_grid(small_config(), axes);
  REQUIRE(results.size() == 6);
  const auto a = fresh_dir("grid_a");
  const auto b = fresh_dir("grid_b");
  emit_metrics(results, a.string());
  emit_metrics(run_grid(small_config(), axes), b.string());
  CHECK(slurp(a / "summary.csv") == slurp(b / "summary.csv"));

  const auto table = read_summary((a / "summary.csv").string());
  REQUIRE(table.rows.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    const auto& row = table.rows[i];
    CHECK(row.cell == i);
    CHECK(row.status == "ok");
    CHECK(row.noise_kind == to_string(results[i].config.noise_kind));
    CHECK(row.noise_rate == results[i].config.noise_rate);
    CHECK(row.method == "full");
    CHECK(row.seed == 4);
    CHECK(row.arch_ids == results[i].arch_ids);
    REQUIRE(row.accuracy.size() == 3);
    const double mean = std::accumulate(row.accuracy.begin(), row.accuracy.end(), 0.0) / 3.0;
    CHECK(std::abs(row.average - mean) <= 1e-5);
    for (std::size_t p = 0; p < 3; ++p) CHECK(std::abs(row.accuracy[p] - results[i].final_accuracy[p]) <= 1e-5);

    const auto cell = a / ("cell_" + std::string(3 - std::to_string(i).size(), '0') + std::to_string(i));
    CHECK(config_from_json(slurp(cell / "config.json")) == results[i].config);
    const auto rounds = read_round_metrics((cell / "round_metrics.csv").string());
    REQUIRE(rounds.size() == results[i].per_round.size());
    for (std::size_t r = 0; r < rounds.size(); ++r) {
      CHECK(rounds[r].round == results[i].per_round[r].round);
      CHECK(std::abs(rounds[r].average_accuracy - results[i].per_round[r].average_accuracy) <= 1e-5);
      CHECK(std::abs(rounds[r].mean_pairwise_kl - results[i].per_round[r].mean_pairwise_kl) <=
            1e-5 * std::max(1.0, results[i].per_round[r].mean_pairwise_kl));
    }
  }
}

TEST_CASE("emitted row counts") {
  const auto empty = fresh_dir("empty");
  emit_metrics({}, empty.string());
  const auto text = slurp(empty / "summary.csv");
  CHECK(std::count(text.begin(), text.end(), '\n') == 1);
  CHECK(read_summary((empty / "summary.csv").string()).rows.empty());

  auto config = small_config();
  config.rounds = 3;
  const auto dir = fresh_dir("three");
  emit_metrics({run_federation(config)}, dir.string());
  CHECK(read_round_metrics((dir / "cell_000" / "round_metrics.csv").string()).size() == 3);

  config.rounds = 0;
  emit_metrics({run_federation(config)}, dir.string());
  CHECK(read_round_metrics((dir / "cell_000" / "round_metrics.csv").string()).size() == 1);
}

TEST_CASE("csv helpers") {
  CHECK(format_number(0.123456789) == "0.123457");
  CHECK(format_number(0.0) == "0");
  CHECK(split_csv_line("a,\"b,c\",,d") == std::vector<std::string>{"a", "b,c", "", "d"});
  CHECK(split_csv_line("\"say \"\"hi\"\"\"") == std::vector<std::string>{"say \"hi\""});
}

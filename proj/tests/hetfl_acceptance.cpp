// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <utility>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hetfl/data.hpp"
#include "hetfl/federation.hpp"
#include "hetfl/losses.hpp"
#include "hetfl/models.hpp"
#include "hetfl/random.hpp"
#include "hetfl/reporting.hpp"
#include "oracles.hpp"

using namespace hetfl;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
  // Seconds spent in work shared with other criteria but attributed to this one.
  double extra_seconds = 0.0;
};

std::string fmt(const char* format, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, value);
  return buf;
}

std::string percent(double accuracy) { return fmt("%.2f", 100.0 * accuracy); }

// ---------------------------------------------------------------------------------------------
// 1. gradient oracle

Outcome gradient_oracle() {
  const auto zoo = register_builtin_zoo(64, 13);
  using LossFn = std::function<LossValue(const Tensor&, const ClassDistribution&)>;
  const std::vector<std::pair<std::string, LossFn>> losses = {
      {"ce", [](const Tensor& z, const ClassDistribution& t) { return cross_entropy(ClassDistribution::from_logits(z), t); }},
      {"rce", [](const Tensor& z, const ClassDistribution& t) { return reverse_cross_entropy(ClassDistribution::from_logits(z), t); }},
      {"symmetric", [](const Tensor& z, const ClassDistribution& t) { return symmetric_loss(ClassDistribution::from_logits(z), t, 0.1); }},
  };
  Outcome out;
  double worst = 0.0;
  std::size_t checked = 0, skipped = 0;
  std::mt19937_64 rng(2024);
  for (const auto& spec : zoo) {
    for (const auto& [name, loss] : losses) {
      for (int draw = 0; draw < 20; ++draw) {
        Model model = init_model(spec, rng());
        const Tensor batch = testing::random_tensor({6, 64}, rng);
        const auto target = ClassDistribution::one_hot(testing::random_labels(6, 13, rng), 13);
        backward(model, loss(forward(model, batch), target).grad_wrt_logits);
        const auto check = testing::check_parameter_gradients(
            model, batch, [&](const Tensor& z) { return loss(z, target).value; }, 6, rng());
        worst = std::max(worst, check.max_relative_error);
        checked += check.checked;
        skipped += check.skipped_kinks;
        if (check.max_relative_error > 1e-4 && out.pass) {
          out.pass = false;
          out.detail = spec.arch_id + "/" + name + " draw " + std::to_string(draw) + " failed; ";
        }
      }
    }
  }
  if (checked == 0) out.pass = false;
  out.detail += "4 archs x 3 losses x 20 draws, " + std::to_string(checked) + " coordinates (" +
                std::to_string(skipped) + " at relu kinks skipped), max rel err " + fmt("%.2e", worst) + " <= 1e-4";
  return out;
}

// ---------------------------------------------------------------------------------------------
// 2. loss value oracles

Outcome loss_values() {
  Outcome out;
  std::vector<std::string> failures;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  };

  const int y[] = {7};
  const double ce_uniform =
      cross_entropy(ClassDistribution(Tensor({1, 13}, 1.0 / 13.0)), ClassDistribution::one_hot(y, 13)).value;
  expect(std::abs(ce_uniform - std::log(13.0)) <= 1e-9, "CE(uniform) != ln 13");

  std::mt19937_64 rng(99);
  double rce_err = 0.0, kl_self = 0.0, kl_min = INFINITY, decomposition_err = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto pred = ClassDistribution(softmax(testing::random_tensor({1, 13}, rng, 2.0)));
    const auto label = testing::random_labels(1, 13, rng);
    const double rce = reverse_cross_entropy(pred, ClassDistribution::one_hot(label, 13)).value;
    rce_err = std::max(rce_err, std::abs(rce - 4.0 * (1.0 - pred.probs()[static_cast<std::size_t>(label[0])])));

    const Tensor g = testing::random_distribution(1, 13, rng);
    const Tensor p = testing::random_distribution(1, 13, rng);
    const ClassDistribution dg(g), dp(p);
    kl_self = std::max(kl_self, std::abs(kl_divergence(dg, dg)));
    const double kl = kl_divergence(dg, dp);
    kl_min = std::min(kl_min, kl);
    double h = 0.0, ce = 0.0;
    for (std::size_t j = 0; j < 13; ++j) {
      h -= g[j] * std::log(g[j]);
      ce -= g[j] * std::log(p[j]);
    }
    decomposition_err = std::max(decomposition_err, std::abs(kl - (ce - h)));
  }
  expect(rce_err <= 1e-12, "RCE closed form");
  expect(kl_self == 0.0, "KL(d,d) != 0");
  expect(kl_min >= 0.0, "KL < 0");
  expect(decomposition_err <= 1e-9, "KL = CE - H");

  out.pass = failures.empty();
  for (const auto& f : failures) out.detail += f + "; ";
  out.detail += "|CE-ln13| " + fmt("%.1e", std::abs(ce_uniform - std::log(13.0))) + ", RCE err " + fmt("%.1e", rce_err) +
                ", min KL " + fmt("%.2e", kl_min) + ", decomposition err " + fmt("%.1e", decomposition_err) +
                " over 1000 pairs";
  return out;
}

// ---------------------------------------------------------------------------------------------
// 3. noise models

Outcome noise_models() {
  Outcome out;
  const std::size_t n = 10000, classes = 13;
  const auto ds = generate_synthetic({.num_classes = classes, .dim = 4, .samples = n, .separation = 1.0, .seed = 3});
  std::ostringstream detail;
  for (NoiseKind kind : {NoiseKind::symmetric, NoiseKind::pair}) {
    for (double mu : {0.1, 0.2, 0.3}) {
      const auto m = build_transition_matrix(kind, mu, classes);
      for (std::size_t i = 0; i < classes; ++i) {
        double total = 0.0;
        for (std::size_t j = 0; j < classes; ++j) {
          if (m.m.at(i, j) < 0.0) out.pass = false;
          total += m.m.at(i, j);
        }
        if (std::abs(total - 1.0) > 1e-12 || std::abs(m.m.at(i, i) - (1.0 - mu)) > 1e-12) out.pass = false;
      }
      const auto noisy = corrupt_labels(ds, m, derive_seed(11, {static_cast<std::uint64_t>(mu * 10)}));
      const double rate = noisy.flip_fraction();
      const double bound = 3.0 * std::sqrt(mu * (1.0 - mu) / static_cast<double>(n));
      if (std::abs(rate - mu) > bound) out.pass = false;
      if (kind == NoiseKind::pair) {
        for (std::size_t i = 0; i < n; ++i) {
          if (noisy.labels[i] != ds.labels[i] && noisy.labels[i] != (ds.labels[i] + 1) % static_cast<int>(classes)) {
            out.pass = false;
          }
        }
      }
      detail << to_string(kind) << " " << mu << ": " << fmt("%.4f", rate) << " (+-" << fmt("%.4f", bound) << ") ";
    }
  }
  out.detail = "row-stochastic, diagonal 1-mu, flip rates " + detail.str() + "pair flips only to (i+1) mod C";
  return out;
}

// ---------------------------------------------------------------------------------------------
// 4. partitions

Outcome partitions() {
  Outcome out;
  const auto ds = generate_synthetic({.num_classes = 13, .dim = 4, .samples = 3900, .separation = 1.0, .seed = 5});
  std::size_t smallest = ds.size();
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto plan = dirichlet_partition(ds, 4, 0.5, seed);
    std::vector<int> seen(ds.size(), 0);
    for (const auto& client : plan.assignments) {
      smallest = std::min(smallest, client.size());
      for (auto i : client) ++seen[i];
    }
    if (plan.assignments.size() != 4 || smallest == 0 ||
        !std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; })) {
      out.pass = false;
    }
  }
  double worst = 0.0;
  const auto counts = ds.class_counts();
  const auto flat = dirichlet_partition(ds, 4, 1e6, 1);
  for (const auto& client : flat.assignments) {
    std::vector<double> per_class(13, 0.0);
    for (auto i : client) per_class[static_cast<std::size_t>(ds.labels[i])] += 1.0;
    for (std::size_t c = 0; c < 13; ++c) {
      worst = std::max(worst, std::abs(per_class[c] / static_cast<double>(counts[c]) / 0.25 - 1.0));
    }
  }
  if (worst > 0.05) out.pass = false;
  out.detail = "gamma=0.5, P=4: 100 seeds disjoint, exhaustive, smallest client " + std::to_string(smallest) +
               " samples; gamma=1e6 worst relative deviation from uniform " + fmt("%.2f%%", 100.0 * worst) + " <= 5%";
  return out;
}

// ---------------------------------------------------------------------------------------------
// Shared end-to-end runs for criteria 5-7.

FederationConfig trend_config(std::uint64_t seed, double mu, const std::string& method) {
  FederationConfig c;
  c.num_clients = 4;
  c.rounds = 10;
  c.local_epochs = 5;
  c.public_fraction = 0.2;
  c.synthetic_samples = 6500;
  c.synthetic_separation = 0.5;
  c.noise_kind = NoiseKind::symmetric;
  c.noise_rate = mu;
  c.seed = seed;
  const Method m = parse_method(method);
  c.use_symmetric_loss = m.use_symmetric_loss;
  c.use_collaboration = m.use_collaboration;
  return c;
}

struct TimedRun {
  ExperimentResult result;
  double seconds = 0.0;
};

class RunCache {
 public:
  const TimedRun& get(std::uint64_t seed, double mu, const std::string& method) {
    const auto key = std::to_string(seed) + "/" + fmt("%.2f", mu) + "/" + method;
    auto it = runs_.find(key);
    if (it == runs_.end()) {
      const auto start = Clock::now();
      TimedRun run{run_federation(trend_config(seed, mu, method)), 0.0};
      run.seconds = std::chrono::duration<double>(Clock::now() - start).count();
      it = runs_.emplace(key, std::move(run)).first;
    } else {
      reused_seconds_ += it->second.seconds;
    }
    return it->second;
  }
  // Time of cached runs handed out again since the last call.
  double take_reused_seconds() { return std::exchange(reused_seconds_, 0.0); }

 private:
  std::map<std::string, TimedRun> runs_;
  double reused_seconds_ = 0.0;
};

const std::vector<std::uint64_t> kSeeds = {1, 2, 3};
const std::vector<double> kMus = {0.0, 0.1, 0.2, 0.3};

// ---------------------------------------------------------------------------------------------
// 5. alignment

Outcome alignment(RunCache& cache) {
  Outcome out;
  const auto pub = generate_synthetic({.num_classes = 13, .dim = 64, .samples = 64, .separation = 1.0, .seed = 3});
  const auto priv = generate_synthetic({.num_classes = 13, .dim = 64, .samples = 130, .separation = 1.0, .seed = 4});
  const ArchitectureRegistry registry(64, 13);
  Client own{0, "mlp-shallow", init_model(registry, "mlp-shallow", 5), {}, priv, 0};
  own.optimizer = make_adam_state(own.model, 0.01);
  const Client peer{1, "mlp-pyramid", init_model(registry, "mlp-pyramid", 6), {}, priv, 0};
  const KnowledgeDistribution frozen[] = {compute_knowledge(peer, pub, 1)};
  std::vector<double> kl{kl_divergence(frozen[0].probs(), compute_knowledge(own, pub, 1).probs())};
  for (int step = 0; step < 10; ++step) {
    collaborative_update(own, frozen, pub, pub.size());
    kl.push_back(kl_divergence(frozen[0].probs(), compute_knowledge(own, pub, 1).probs()));
    if (!(kl.back() < kl[kl.size() - 2])) out.pass = false;
  }

  const auto& run = cache.get(1, 0.0, "full").result;
  const double first = run.per_round.front().mean_pairwise_kl;
  const double last = run.per_round.back().mean_pairwise_kl;
  if (!(run.per_round.size() == 10 && last < first)) out.pass = false;
  out.detail = "toy KL(peer||own) " + fmt("%.4f", kl.front()) + " -> " + fmt("%.4f", kl.back()) +
               " strictly decreasing over 10 updates; P=4 zoo mean pairwise KL round 1 " + fmt("%.4f", first) +
               " -> round 10 " + fmt("%.4f", last);
  out.extra_seconds = cache.get(1, 0.0, "full").seconds;
  cache.take_reused_seconds();
  return out;
}

// ---------------------------------------------------------------------------------------------
// 6. noise monotonicity

Outcome noise_monotonicity(RunCache& cache) {
  Outcome out;
  std::ostringstream detail;
  double total = 0.0;
  for (auto seed : kSeeds) {
    detail << "seed " << seed << ":";
    double previous = INFINITY;
    for (double mu : kMus) {
      const auto& run = cache.get(seed, mu, "full");
      total += run.seconds;
      const double acc = run.result.final_average;
      if (!(acc <= previous - 0.01)) out.pass = false;
      detail << " " << percent(acc);
      previous = acc;
    }
    detail << "; ";
  }
  cache.take_reused_seconds();
  out.extra_seconds = total;
  out.detail = "full method, symmetric flip, mu 0/0.1/0.2/0.3, average accuracy % " + detail.str() +
               "each seed strictly decreasing with gaps >= 1 point";
  return out;
}

// ---------------------------------------------------------------------------------------------
// 7. method ablation

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

Outcome method_ablation(RunCache& cache) {
  Outcome out;
  std::vector<double> full, ablation;
  double total = 0.0;
  for (auto seed : kSeeds) {
    const auto& f = cache.get(seed, 0.3, "full");
    const auto& a = cache.get(seed, 0.3, "ce-local");
    total += f.seconds + a.seconds;
    full.push_back(f.result.final_average);
    ablation.push_back(a.result.final_average);
  }
  cache.take_reused_seconds();
  const double gap = median(full) - median(ablation);
  out.pass = gap >= 0.02;
  out.extra_seconds = total;
  out.detail = "mu=0.3 symmetric, 3-seed median: full " + percent(median(full)) + "% vs ce-local " +
               percent(median(ablation)) + "%, gap " + fmt("%.2f", 100.0 * gap) + " points >= 2";
  return out;
}

// ---------------------------------------------------------------------------------------------
// 8. determinism and symmetry

FederationConfig small_config() {
  FederationConfig c;
  c.num_clients = 4;
  c.rounds = 3;
  c.synthetic_samples = 1300;
  c.seed = 21;
  c.noise_kind = NoiseKind::pair;
  c.noise_rate = 0.2;
  return c;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  Outcome out;
  std::vector<std::string> failures;
  const auto root = fs::temp_directory_path() / "hetfl_acceptance";
  fs::remove_all(root);
  const GridAxes axes{{0.1, 0.2}, {NoiseKind::symmetric, NoiseKind::pair}, {parse_method("full"), parse_method("ce-local")}};
  emit_metrics(run_grid(small_config(), axes), (root / "a").string());
  emit_metrics(run_grid(small_config(), axes), (root / "b").string());
  const std::string a = slurp(root / "a" / "summary.csv");
  if (a.empty() || a != slurp(root / "b" / "summary.csv")) failures.push_back("summary.csv differs");

  const auto data = prepare_data(small_config());
  const ArchitectureRegistry registry(data.public_set.dim(), data.public_set.num_classes);
  std::vector<Client> twins;
  for (int id = 0; id < 4; ++id) {
    Client c{id, "mlp-deep", init_model(registry, "mlp-deep", 8), {}, data.private_sets[0], 13};
    c.optimizer = make_adam_state(c.model, 0.001);
    twins.push_back(std::move(c));
  }
  ExchangeChannel twin_channel;
  for (int round = 1; round <= 3; ++round) {
    run_round(twins, data.public_set, round, {}, twin_channel);
    for (std::size_t i = 1; i < twins.size(); ++i) {
      if (!twins[i].model.same_parameters(twins[0].model)) failures.push_back("homogeneous twins diverged");
    }
  }

  auto ordered = make_clients(small_config(), data);
  auto permuted = ordered;
  ExchangeChannel c1, c2;
  RoundOptions forward_order, shuffled_order;
  shuffled_order.update_order = {3, 1, 0, 2};
  for (int round = 1; round <= 3; ++round) {
    run_round(ordered, data.public_set, round, forward_order, c1);
    run_round(permuted, data.public_set, round, shuffled_order, c2);
  }
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    if (!ordered[i].model.same_parameters(permuted[i].model)) failures.push_back("update order changed client " + std::to_string(i));
  }

  out.pass = failures.empty();
  for (const auto& f : failures) out.detail += f + "; ";
  out.detail += "8-cell grid summary.csv bit-identical across runs; 4 homogeneous twins identical over 3 rounds; "
                "update order {3,1,0,2} gives bit-identical parameters";
  return out;
}

// ---------------------------------------------------------------------------------------------
// 9. collaboration disabled equals isolated training

Outcome isolated_equivalence() {
  Outcome out;
  std::ostringstream detail;
  for (int rounds : {0, 4}) {
    auto config = small_config();
    config.rounds = rounds;
    config.use_collaboration = false;
    const auto result = run_federation(config);

    const auto data = prepare_data(config);
    auto isolated = make_clients(config, data);
    const int first = rounds == 0 ? 0 : 1;
    const int last = rounds == 0 ? 0 : rounds;
    for (auto& client : isolated) {
      for (int round = first; round <= last; ++round)
        for (int e = 0; e < config.local_epochs; ++e)
          local_train_epoch(client, config.lambda, config.batch_size, local_epoch_seed(client.train_seed, round, e));
    }
    bool same = result.exchanged_distributions == 0 && result.final_models.size() == isolated.size();
    for (std::size_t i = 0; same && i < isolated.size(); ++i) same = isolated[i].model.same_parameters(result.final_models[i]);
    if (!same) out.pass = false;
    detail << "E_c=" << rounds << (same ? " identical" : " DIFFERS") << "; ";
  }
  out.detail = detail.str() + "P=4 federation without collaboration vs 4 isolated local runs, parameter-bitwise";
  return out;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_seconds;  // 0 = no limit
    std::function<Outcome()> run;
  };
  RunCache cache;
  const std::vector<Criterion> criteria = {
      {1, "gradient oracle", 30, gradient_oracle},
      {2, "loss value oracles", 0, loss_values},
      {3, "noise-model suite", 0, noise_models},
      {4, "partition suite", 0, partitions},
      {5, "alignment", 120, [&] { return alignment(cache); }},
      {6, "noise monotonicity", 600, [&] { return noise_monotonicity(cache); }},
      {7, "method ablation", 900, [&] { return method_ablation(cache); }},
      {8, "determinism and symmetry", 0, determinism},
      {9, "collaboration-off equivalence", 0, isolated_equivalence},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("error: ") + e.what();
    }
    const double own = std::chrono::duration<double>(Clock::now() - start).count();
    // Runs shared with an earlier criterion are charged to every criterion that uses them.
    const double seconds = std::max(own, o.extra_seconds);
    std::string timing = fmt("%.1f s", seconds);
    if (c.limit_seconds > 0) {
      timing += fmt(" / limit %.0f s", c.limit_seconds);
      if (seconds > c.limit_seconds) {
        o.pass = false;
        o.detail += "; over time limit";
      }
    }
    if (!o.pass) ++failed;
    std::printf("[%s] criterion %d (%s): %s (%s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                timing.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}

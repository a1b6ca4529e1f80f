#include <algorithm>
#include <numeric>
#include <random>

#include "hetfl/data.hpp"
#include "hetfl/errors.hpp"

namespace hetfl {
namespace {

// Integer counts summing exactly to `total`; leftover units go to the largest fractional
// parts, ties to the lower client index.
std::vector<std::size_t> largest_remainder(const std::vector<double>& proportions, std::size_t total) {
  const std::size_t k = proportions.size();
  std::vector<std::size_t> counts(k);
  std::vector<double> remainder(k);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double exact = proportions[i] * static_cast<double>(total);
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    remainder[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < total; i = (i + 1) % k, ++assigned) ++counts[order[i]];
  while (assigned > total) {
    // Only reachable through floating-point overshoot; take from the largest count.
    auto it = std::max_element(counts.begin(), counts.end());
    --*it;
    --assigned;
  }
  return counts;
}

std::vector<double> sample_dirichlet(std::size_t k, double gamma, std::mt19937_64& rng) {
  std::gamma_distribution<double> dist(gamma, 1.0);
  std::vector<double> draws(k);
  for (;;) {
    double total = 0.0;
    for (auto& d : draws) {
      d = dist(rng);
      total += d;
    }
    if (total > 0.0) {
      for (auto& d : draws) d /= total;
      return draws;
    }
  }
}

}  // namespace

PartitionPlan dirichlet_partition(const LabeledDataset& dataset, std::size_t num_clients, double gamma,
                                  std::uint64_t seed) {
  if (num_clients < 2) throw ConfigError("dirichlet_partition needs at least 2 clients");
  if (!(gamma > 0.0)) throw ConfigError("dirichlet_partition needs gamma > 0");
  dataset.validate();

  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> by_class(dataset.num_classes);
  for (std::size_t i = 0; i < dataset.size(); ++i) by_class[static_cast<std::size_t>(dataset.labels[i])].push_back(i);
  for (auto& idx : by_class) std::shuffle(idx.begin(), idx.end(), rng);

  for (int attempt = 0; attempt < kPartitionRetries; ++attempt) {
    PartitionPlan plan{std::vector<std::vector<std::size_t>>(num_clients), gamma, seed};
    for (const auto& idx : by_class) {
      if (idx.empty()) continue;
      const auto counts = largest_remainder(sample_dirichlet(num_clients, gamma, rng), idx.size());
      std::size_t offset = 0;
      for (std::size_t c = 0; c < num_clients; ++c) {
        plan.assignments[c].insert(plan.assignments[c].end(), idx.begin() + static_cast<std::ptrdiff_t>(offset),
                                   idx.begin() + static_cast<std::ptrdiff_t>(offset + counts[c]));
        offset += counts[c];
      }
    }
    const bool all_non_empty =
        std::all_of(plan.assignments.begin(), plan.assignments.end(), [](const auto& a) { return !a.empty(); });
    if (all_non_empty) {
      for (auto& a : plan.assignments) std::sort(a.begin(), a.end());
      return plan;
    }
  }
  throw PartitionError("dirichlet partition left a client empty after " + std::to_string(kPartitionRetries) +
                       " attempts (n=" + std::to_string(dataset.size()) + ", gamma=" + std::to_string(gamma) +
                       "); use more samples or a larger gamma");
}

double partition_skew(const LabeledDataset& dataset, const PartitionPlan& plan) {
  const double uniform = 1.0 / static_cast<double>(dataset.num_classes);
  double total = 0.0;
  for (const auto& client : plan.assignments) {
    std::vector<double> counts(dataset.num_classes, 0.0);
    for (auto i : client) counts[static_cast<std::size_t>(dataset.labels.at(i))] += 1.0;
    double chi = 0.0;
    for (double c : counts) {
      const double q = c / static_cast<double>(client.size());
      chi += (q - uniform) * (q - uniform) / uniform;
    }
    total += chi;
  }
  return total / static_cast<double>(plan.assignments.size());
}

}  // namespace hetfl

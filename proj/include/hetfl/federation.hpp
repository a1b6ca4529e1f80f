#pragma once

#include <cstdint>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "hetfl/config.hpp"
#include "hetfl/data.hpp"
#include "hetfl/losses.hpp"
#include "hetfl/nn.hpp"

namespace hetfl {

/// A participant: its own model, optimizer and (noisy) private data. Nothing in here
/// refers to any other client.
struct Client {
  int id = 0;
  std::string arch_id;
  Model model;
  AdamState optimizer;
  LabeledDataset private_data;
  // Root of the client's mini-batch shuffling streams.
  std::uint64_t train_seed = 0;
};

/// A client's class-probability rows over the public set for one round. This is the only
/// value that ever travels between clients.
class KnowledgeDistribution {
 public:
  KnowledgeDistribution(int client_id, int round, ClassDistribution probs)
      : client_id_(client_id), round_(round), probs_(std::move(probs)) {}

  int client_id() const { return client_id_; }
  int round() const { return round_; }
  const ClassDistribution& probs() const { return probs_; }

 private:
  int client_id_;
  int round_;
  ClassDistribution probs_;
};

struct RoundSchedule {
  int e_c = 1;
  int e_l = 1;
  std::size_t batch_size = 16;
};

enum class LocalObjective { symmetric, cross_entropy };

/// Seed of the shuffling stream for one local epoch.
std::uint64_t local_epoch_seed(std::uint64_t train_seed, int round, int epoch);

/// One pass over the private data in shuffled mini-batches; returns the mean batch loss.
double local_train_epoch(Client& client, double lambda, std::size_t batch_size, std::uint64_t seed,
                         LocalObjective objective = LocalObjective::symmetric);

/// Softmax(logits / temperature) over every public sample. Leaves the model untouched.
KnowledgeDistribution compute_knowledge(const Client& client, const LabeledDataset& public_data, int round,
                                        double temperature = 1.0);

/// Mini-batch pass over the public set minimising (1 / #peers) * sum KL(peer || own) against
/// frozen peer rows; the learning rate is the client's optimizer alpha. Returns the mean
/// scaled alignment loss.
double collaborative_update(Client& client, std::span<const KnowledgeDistribution> peers,
                            const LabeledDataset& public_data, std::size_t batch_size, double temperature = 1.0);

/// Fraction of argmax(logits) == label; ties go to the lowest class index.
double evaluate(const Model& model, const LabeledDataset& test);

/// Mean over ordered pairs (i != j) of KL(D_i || D_j).
double mean_pairwise_kl(std::span<const KnowledgeDistribution> distributions);

/// Publication point for knowledge distributions; counts everything that crosses it.
class ExchangeChannel {
 public:
  void publish(KnowledgeDistribution knowledge);
  /// All distributions published for `round`, ordered by client id.
  std::vector<KnowledgeDistribution> round_snapshot(int round) const;
  /// Snapshot of `round` without the asking client's own distribution.
  std::vector<KnowledgeDistribution> peers_of(int client_id, int round) const;

  std::size_t publications() const;
  /// Total probability values carried so far.
  std::size_t values_carried() const;

 private:
  mutable std::mutex mutex_;
  std::vector<KnowledgeDistribution> published_;
  std::size_t values_ = 0;
};

/// Data for one experiment: clean test split, public set, and per-client noisy private sets.
struct FederationData {
  LabeledDataset test;
  LabeledDataset public_set;
  PartitionPlan plan;
  std::vector<LabeledDataset> private_sets;
};

FederationData prepare_data(const FederationConfig& config);

/// Arch ids per client for the config's assignment.
std::vector<std::string> architecture_assignment(const FederationConfig& config, std::size_t input_dim,
                                                 std::size_t num_classes);

std::vector<Client> make_clients(const FederationConfig& config, const FederationData& data);

struct RoundMetrics {
  int round = 0;
  std::vector<double> per_client_accuracy;
  double average_accuracy = 0.0;
  double mean_pairwise_kl = 0.0;
  double mean_local_loss = 0.0;
  double mean_alignment_loss = 0.0;
};

struct ExperimentResult {
  FederationConfig config;
  std::vector<std::string> arch_ids;
  std::vector<RoundMetrics> per_round;
  std::vector<double> final_accuracy;
  double final_average = 0.0;
  std::vector<Model> final_models;
  std::size_t exchanged_distributions = 0;
  // Non-empty when the run failed (grid cells record failures instead of throwing).
  std::string error;

  bool ok() const { return error.empty(); }
};

struct RoundOptions {
  double lambda = 0.1;
  std::size_t batch_size = 16;
  int local_epochs = 1;
  double temperature = 1.0;
  LocalObjective objective = LocalObjective::symmetric;
  bool collaborate = true;
  // Order in which collaborative updates are applied; empty means client order.
  std::vector<std::size_t> update_order;
};

struct RoundOutcome {
  std::vector<double> local_loss;
  std::vector<double> alignment_loss;
};

/// One round: local epochs, knowledge publication, then collaborative updates against the
/// round's frozen snapshot.
RoundOutcome run_round(std::span<Client> clients, const LabeledDataset& public_data, int round,
                       const RoundOptions& options, ExchangeChannel& channel);

/// Whole experiment; a pure function of the config.
ExperimentResult run_federation(const FederationConfig& config);

}  // namespace hetfl

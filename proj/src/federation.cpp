#include "hetfl/federation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <numeric>
#include <random>

#include "hetfl/errors.hpp"
#include "hetfl/models.hpp"
#include "hetfl/parallel.hpp"
#include "hetfl/random.hpp"

namespace hetfl {
namespace {

constexpr std::size_t kInferenceBatch = 256;

void require_feature_dim(const Model& model, const LabeledDataset& data, const char* what) {
  if (data.features.rank() != 2 || data.dim() != model.input_dim()) {
    throw ConfigError(std::string(what) + " has " + std::to_string(data.features.rank() == 2 ? data.dim() : 0) +
                      " features but model " + model.arch_id() + " expects " + std::to_string(model.input_dim()));
  }
}

// Runs task(i) over all clients, re-labelling failures with the round and client.
void for_each_client(std::size_t n, int round, const char* phase, const std::function<void(std::size_t)>& task) {
  parallel_for(n, [&](std::size_t i) {
    try {
      task(i);
    } catch (const std::exception& e) {
      throw RunError("round " + std::to_string(round) + ", client " + std::to_string(i) + " (" + phase +
                     "): " + e.what());
    }
  });
}

}  // namespace

std::uint64_t local_epoch_seed(std::uint64_t train_seed, int round, int epoch) {
  return derive_seed(train_seed, {static_cast<std::uint64_t>(round), static_cast<std::uint64_t>(epoch)});
}

double local_train_epoch(Client& client, double lambda, std::size_t batch_size, std::uint64_t seed,
                         LocalObjective objective) {
  const LabeledDataset& data = client.private_data;
  if (data.size() == 0) throw ConfigError("client " + std::to_string(client.id) + " has no private data");
  if (batch_size == 0) throw ConfigError("batch size must be >= 1");
  require_feature_dim(client.model, data, "private data");

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t classes = client.model.output_dim();
  double total = 0.0;
  std::size_t batches = 0;
  std::vector<int> targets;
  for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
    const std::size_t end = std::min(order.size(), begin + batch_size);
    const std::span<const std::size_t> idx(order.data() + begin, end - begin);
    const Tensor batch = data.features.gather_rows(idx);
    targets.clear();
    for (auto i : idx) targets.push_back(data.labels[i]);

    const Tensor logits = forward(client.model, batch);
    const auto pred = ClassDistribution::from_logits(logits);
    const auto target = ClassDistribution::one_hot(targets, classes);
    const LossValue loss =
        objective == LocalObjective::symmetric ? symmetric_loss(pred, target, lambda) : cross_entropy(pred, target);
    backward(client.model, loss.grad_wrt_logits);
    adam_step(client.model, client.optimizer);
    total += loss.value;
    ++batches;
  }
  return total / static_cast<double>(batches);
}

KnowledgeDistribution compute_knowledge(const Client& client, const LabeledDataset& public_data, int round,
                                        double temperature) {
  require_feature_dim(client.model, public_data, "public data");
  const std::size_t n = public_data.size();
  const std::size_t classes = client.model.output_dim();
  Tensor probs({n, classes});
  for (std::size_t begin = 0; begin < n; begin += kInferenceBatch) {
    const std::size_t end = std::min(n, begin + kInferenceBatch);
    const Tensor p = softmax(client.model.predict(public_data.features.slice_rows(begin, end)), temperature);
    std::copy(p.values().begin(), p.values().end(), probs.data() + begin * classes);
  }
  return KnowledgeDistribution(client.id, round, ClassDistribution(std::move(probs), temperature));
}

double collaborative_update(Client& client, std::span<const KnowledgeDistribution> peers,
                            const LabeledDataset& public_data, std::size_t batch_size, double temperature) {
  if (peers.empty()) throw ConfigError("collaborative_update needs at least one peer distribution");
  if (batch_size == 0) throw ConfigError("batch size must be >= 1");
  require_feature_dim(client.model, public_data, "public data");
  for (const auto& peer : peers) {
    if (peer.client_id() == client.id) {
      throw ConfigError("client " + std::to_string(client.id) + " was handed its own distribution as a peer");
    }
    if (peer.probs().rows() != public_data.size() || peer.probs().classes() != client.model.output_dim()) {
      throw DimensionError("peer " + std::to_string(peer.client_id()) + " distribution " +
                           shape_to_string(peer.probs().probs().shape()) + " does not cover the public set");
    }
  }

  const double peer_scale = 1.0 / static_cast<double>(peers.size());
  const std::size_t n = public_data.size();
  std::vector<ClassDistribution> peer_rows(peers.size());
  double total = 0.0;
  std::size_t batches = 0;
  for (std::size_t begin = 0; begin < n; begin += batch_size) {
    const std::size_t end = std::min(n, begin + batch_size);
    for (std::size_t k = 0; k < peers.size(); ++k) peer_rows[k] = peers[k].probs().slice_rows(begin, end);

    const Tensor logits = forward(client.model, public_data.features.slice_rows(begin, end));
    const auto own = ClassDistribution::from_logits(logits, temperature);
    LossValue loss = peer_learning_loss(own, peer_rows);
    for (auto& g : loss.grad_wrt_logits.values()) g *= peer_scale;
    backward(client.model, loss.grad_wrt_logits);
    adam_step(client.model, client.optimizer);
    total += loss.value * peer_scale;
    ++batches;
  }
  return total / static_cast<double>(batches);
}

double evaluate(const Model& model, const LabeledDataset& test) {
  require_feature_dim(model, test, "test data");
  if (test.size() == 0) throw ConfigError("empty test set");
  std::size_t correct = 0;
  for (std::size_t begin = 0; begin < test.size(); begin += kInferenceBatch) {
    const std::size_t end = std::min(test.size(), begin + kInferenceBatch);
    const Tensor logits = model.predict(test.features.slice_rows(begin, end));
    for (std::size_t r = 0; r < end - begin; ++r) {
      const auto row = logits.row(r);
      const auto best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
      correct += best == test.labels[begin + r];
    }
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

double mean_pairwise_kl(std::span<const KnowledgeDistribution> distributions) {
  if (distributions.size() < 2) return 0.0;
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < distributions.size(); ++i) {
    for (std::size_t j = 0; j < distributions.size(); ++j) {
      if (i == j) continue;
      total += kl_divergence(distributions[i].probs(), distributions[j].probs());
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

void ExchangeChannel::publish(KnowledgeDistribution knowledge) {
  std::lock_guard lock(mutex_);
  for (const auto& k : published_) {
    if (k.client_id() == knowledge.client_id() && k.round() == knowledge.round()) {
      throw StateError("client " + std::to_string(knowledge.client_id()) + " already published for round " +
                       std::to_string(knowledge.round()));
    }
  }
  values_ += knowledge.probs().probs().size();
  published_.push_back(std::move(knowledge));
}

std::vector<KnowledgeDistribution> ExchangeChannel::round_snapshot(int round) const {
  std::lock_guard lock(mutex_);
  std::vector<KnowledgeDistribution> out;
  for (const auto& k : published_) {
    if (k.round() == round) out.push_back(k);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.client_id() < b.client_id(); });
  return out;
}

std::vector<KnowledgeDistribution> ExchangeChannel::peers_of(int client_id, int round) const {
  auto all = round_snapshot(round);
  std::erase_if(all, [client_id](const auto& k) { return k.client_id() == client_id; });
  return all;
}

std::size_t ExchangeChannel::publications() const {
  std::lock_guard lock(mutex_);
  return published_.size();
}

std::size_t ExchangeChannel::values_carried() const {
  std::lock_guard lock(mutex_);
  return values_;
}

FederationData prepare_data(const FederationConfig& config) {
  LabeledDataset base;
  if (config.dataset == kSyntheticDataset) {
    base = generate_synthetic({config.synthetic_classes, config.synthetic_dim, config.synthetic_samples,
                               config.synthetic_separation, derive_seed(config.seed, {stream::data})});
  } else {
    base = load_dataset(config.dataset);
  }
  base.validate();

  const std::size_t n = base.size();
  const auto n_test = static_cast<std::size_t>(std::llround(config.test_fraction * static_cast<double>(n)));
  const auto n_public = static_cast<std::size_t>(std::llround(config.public_fraction * static_cast<double>(n)));
  if (n_test == 0 || n_public == 0 || n_test + n_public + config.num_clients > n) {
    throw ConfigError("dataset of " + std::to_string(n) + " samples is too small for the requested test/public split");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(derive_seed(config.seed, {stream::split}));
  std::shuffle(order.begin(), order.end(), rng);
  auto take = [&](std::size_t begin, std::size_t end) {
    std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                 order.begin() + static_cast<std::ptrdiff_t>(end));
    std::sort(idx.begin(), idx.end());
    return base.subset(idx);
  };

  FederationData out;
  out.test = take(0, n_test);
  out.public_set = take(n_test, n_test + n_public);
  const LabeledDataset pool = take(n_test + n_public, n);
  out.plan = dirichlet_partition(pool, config.num_clients, config.gamma, derive_seed(config.seed, {stream::partition}));

  const auto matrix = build_transition_matrix(config.noise_kind, config.noise_rate, pool.num_classes);
  for (std::size_t p = 0; p < config.num_clients; ++p) {
    const LabeledDataset clean = pool.subset(out.plan.assignments[p]);
    out.private_sets.push_back(corrupt_labels(clean, matrix, derive_seed(config.seed, {stream::noise, p})));
  }
  return out;
}

std::vector<std::string> architecture_assignment(const FederationConfig& config, std::size_t input_dim,
                                                 std::size_t num_classes) {
  const ArchitectureRegistry registry(input_dim, num_classes);
  if (config.architecture == kHeterogeneousZoo) return heterogeneous_assignment(registry.zoo(), config.num_clients);
  return homogeneous_assignment(registry.at(config.architecture), config.num_clients);
}

std::vector<Client> make_clients(const FederationConfig& config, const FederationData& data) {
  const std::size_t input_dim = data.public_set.dim();
  const std::size_t classes = data.public_set.num_classes;
  const ArchitectureRegistry registry(input_dim, classes);
  const auto arch_ids = architecture_assignment(config, input_dim, classes);
  std::vector<Client> clients;
  for (std::size_t p = 0; p < config.num_clients; ++p) {
    Client c;
    c.id = static_cast<int>(p);
    c.arch_id = arch_ids[p];
    c.model = init_model(registry, arch_ids[p], derive_seed(config.seed, {stream::model, p}));
    c.optimizer = make_adam_state(c.model, config.learning_rate);
    c.private_data = data.private_sets[p];
    c.train_seed = derive_seed(config.seed, {stream::shuffle, p});
    clients.push_back(std::move(c));
  }
  return clients;
}

RoundOutcome run_round(std::span<Client> clients, const LabeledDataset& public_data, int round,
                       const RoundOptions& options, ExchangeChannel& channel) {
  const std::size_t n = clients.size();
  RoundOutcome outcome{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};

  for_each_client(n, round, "local training", [&](std::size_t i) {
    for (int e = 0; e < options.local_epochs; ++e) {
      outcome.local_loss[i] = local_train_epoch(clients[i], options.lambda, options.batch_size,
                                                local_epoch_seed(clients[i].train_seed, round, e), options.objective);
    }
  });
  if (!options.collaborate) return outcome;

  for_each_client(n, round, "knowledge publication", [&](std::size_t i) {
    channel.publish(compute_knowledge(clients[i], public_data, round, options.temperature));
  });

  std::vector<std::size_t> order = options.update_order;
  if (order.empty()) {
    order.resize(n);
    std::iota(order.begin(), order.end(), 0);
  }
  if (order.size() != n) throw ConfigError("update order must list every client once");
  for_each_client(n, round, "collaborative update", [&](std::size_t k) {
    Client& client = clients[order[k]];
    const auto peers = channel.peers_of(client.id, round);
    outcome.alignment_loss[order[k]] =
        collaborative_update(client, peers, public_data, options.batch_size, options.temperature);
  });
  return outcome;
}

ExperimentResult run_federation(const FederationConfig& config) {
  config.validate();
  const FederationData data = prepare_data(config);
  std::vector<Client> clients = make_clients(config, data);

  ExperimentResult result;
  result.config = config;
  for (const auto& c : clients) result.arch_ids.push_back(c.arch_id);

  RoundOptions options;
  options.lambda = config.lambda;
  options.batch_size = config.batch_size;
  options.local_epochs = config.local_epochs;
  options.temperature = config.temperature;
  options.objective = config.use_symmetric_loss ? LocalObjective::symmetric : LocalObjective::cross_entropy;
  options.collaborate = config.use_collaboration && config.rounds > 0;

  ExchangeChannel channel;
  // E_c = 0 still trains locally once, recorded as round 0.
  const int first = config.rounds == 0 ? 0 : 1;
  const int last = config.rounds == 0 ? 0 : config.rounds;
  const std::size_t n = clients.size();
  for (int round = first; round <= last; ++round) {
    const RoundOutcome outcome = run_round(clients, data.public_set, round, options, channel);

    RoundMetrics metrics;
    metrics.round = round;
    metrics.per_client_accuracy.assign(n, 0.0);
    std::vector<std::optional<KnowledgeDistribution>> measured(n);
    for_each_client(n, round, "evaluation", [&](std::size_t i) {
      metrics.per_client_accuracy[i] = evaluate(clients[i].model, data.test);
      measured[i] = compute_knowledge(clients[i], data.public_set, round, config.temperature);
    });
    std::vector<KnowledgeDistribution> snapshot;
    for (auto& m : measured) snapshot.push_back(std::move(*m));
    metrics.average_accuracy =
        std::accumulate(metrics.per_client_accuracy.begin(), metrics.per_client_accuracy.end(), 0.0) /
        static_cast<double>(n);
    metrics.mean_pairwise_kl = mean_pairwise_kl(snapshot);
    metrics.mean_local_loss =
        std::accumulate(outcome.local_loss.begin(), outcome.local_loss.end(), 0.0) / static_cast<double>(n);
    metrics.mean_alignment_loss =
        std::accumulate(outcome.alignment_loss.begin(), outcome.alignment_loss.end(), 0.0) / static_cast<double>(n);
    result.per_round.push_back(std::move(metrics));
  }

  result.final_accuracy = result.per_round.back().per_client_accuracy;
  result.final_average = result.per_round.back().average_accuracy;
  result.exchanged_distributions = channel.publications();
  for (auto& c : clients) result.final_models.push_back(std::move(c.model));
  return result;
}

}  // namespace hetfl

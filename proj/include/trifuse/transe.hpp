#pragma once

// Translational knowledge-graph embeddings: d(h + r, t) scoring trained with a
// margin ranking loss and type-constrained negative sampling.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "trifuse/embedding_io.hpp"

namespace trifuse {

struct Triple {
  std::size_t head = 0;
  std::size_t relation = 0;
  std::size_t tail = 0;
  friend bool operator==(const Triple&, const Triple&) = default;
};

struct TripleHash {
  std::size_t operator()(const Triple& t) const noexcept {
    std::size_t h = std::hash<std::size_t>{}(t.head);
    h ^= std::hash<std::size_t>{}(t.relation) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= std::hash<std::size_t>{}(t.tail) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }
};

class TripleStore {
 public:
  std::size_t entity_id(const std::string& name);  // interns
  std::size_t relation_id(const std::string& name);  // interns
  std::optional<std::size_t> find_entity(const std::string& name) const;
  std::optional<std::size_t> find_relation(const std::string& name) const;

  // Returns false (and stores nothing) for a duplicate.
  bool add(const Triple& t);
  bool contains(const Triple& t) const;

  const std::vector<std::string>& entities() const noexcept { return entities_; }
  const std::vector<std::string>& relations() const noexcept { return relations_; }
  const std::vector<Triple>& triples() const noexcept { return triples_; }

  // Explicit domain/range per relation; overrides the observed heads/tails.
  void constrain_head(std::size_t relation, std::size_t entity);
  void constrain_tail(std::size_t relation, std::size_t entity);
  bool has_constraints(std::size_t relation) const;

  // Candidate replacement entities for a relation. With `type_constrained`
  // these are the declared domain/range, else the entities observed as heads
  // (tails) of that relation; otherwise all entities. Sorted ascending.
  std::vector<std::size_t> head_candidates(std::size_t relation, bool type_constrained) const;
  std::vector<std::size_t> tail_candidates(std::size_t relation, bool type_constrained) const;

 private:
  std::vector<std::string> entities_, relations_;
  std::unordered_map<std::string, std::size_t> entity_index_, relation_index_;
  std::vector<Triple> triples_;
  std::unordered_set<Triple, TripleHash> triple_set_;
  std::unordered_map<std::size_t, std::vector<std::size_t>> domain_, range_;
};

struct LoadedTriples {
  TripleStore store;
  std::size_t duplicates_dropped = 0;
};

// TSV "head<TAB>relation<TAB>tail".
LoadedTriples load_triples(const std::filesystem::path& path);
// TSV "relation<TAB>domain|range<TAB>entity"; entities are interned into `store`.
void load_type_constraints(const std::filesystem::path& path, TripleStore& store);

enum class Distance { L1, L2 };

struct TransEConfig {
  int rank = 50;
  double gamma = 0.3;
  double lr_embeddings = 0.2;  // entity vectors
  double lr_parameters = 0.5;  // relation vectors
  int epochs = 100;
  std::uint64_t seed = 0;
  Distance distance = Distance::L2;
  bool type_constraints = true;

  void validate() const;
};

struct TransEModel {
  Eigen::MatrixXd entity_vectors;    // |E| x rank
  Eigen::MatrixXd relation_vectors;  // |R| x rank
  Distance distance = Distance::L2;
};

double transe_score(const TransEModel& model, std::size_t head, std::size_t relation,
                    std::size_t tail);

// Gradients of max(0, gamma + d(h, r, t) - d(h', r, t')) for a positive
// triple and its corruption sharing the relation.
struct MarginGradient {
  double loss = 0.0;
  Eigen::VectorXd head, relation, tail;          // positive triple
  Eigen::VectorXd neg_head, neg_tail;            // corrupted triple
};

MarginGradient margin_loss_gradient(const TransEModel& model, const Triple& positive,
                                    const Triple& negative, double gamma);

struct TrainingLog {
  std::vector<double> epoch_loss;  // mean margin loss per positive triple
  bool record_negatives = false;
  std::vector<Triple> negatives;
};

TransEModel transe_train(const TripleStore& store, const TransEConfig& config,
                         TrainingLog* log = nullptr);

enum class Side { Head, Tail };

// Filtered 1-based rank of the true entity on `side`; ties go to the lower
// entity index.
std::size_t rank_entities(const TransEModel& model, const TripleStore& store, const Triple& triple,
                          Side side, bool filtered = true);

struct LinkPredictionSummary {
  double mean_rank = 0.0;
  double hits_at_k = 0.0;
  int k = 10;
};

// Averages over both sides of every triple.
LinkPredictionSummary link_prediction(const TransEModel& model, const TripleStore& store,
                                      const std::vector<Triple>& triples, int k = 10);

EmbeddingSpace entity_space(const TransEModel& model, const TripleStore& store);

}  // namespace trifuse

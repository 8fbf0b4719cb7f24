#pragma once

// Small synthetic inputs shared by the unit and acceptance suites.

#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "oracles.hpp"
#include "trifuse/alignment.hpp"
#include "trifuse/evaluation.hpp"
#include "trifuse/transe.hpp"

namespace fixture {

// WordNet-shaped tree: 6 internal synsets, 10 covered leaves.
inline trifuse::SynsetHierarchy toy_wordnet() {
  trifuse::SynsetHierarchy h;
  h.edges = {{"animal.n.01", "entity.n.01"},  {"artifact.n.01", "entity.n.01"},
             {"dog.n.01", "animal.n.01"},     {"cat.n.01", "animal.n.01"},
             {"bird.n.01", "animal.n.01"},    {"robin.n.01", "bird.n.01"},
             {"eagle.n.01", "bird.n.01"},     {"instrument.n.01", "artifact.n.01"},
             {"vehicle.n.01", "artifact.n.01"}, {"violin.n.01", "instrument.n.01"},
             {"harp.n.01", "instrument.n.01"}, {"flute.n.01", "instrument.n.01"},
             {"car.n.01", "vehicle.n.01"},    {"bike.n.01", "vehicle.n.01"},
             {"truck.n.01", "vehicle.n.01"}};
  h.synset_lexemes = {{"dog.n.01", "dog"},         {"dog.n.01", "domestic_dog"},
                      {"cat.n.01", "cat"},         {"bird.n.01", "bird"},
                      {"robin.n.01", "robin"},     {"eagle.n.01", "eagle"},
                      {"violin.n.01", "violin"},   {"violin.n.01", "fiddle"},
                      {"harp.n.01", "harp"},       {"flute.n.01", "flute"},
                      {"instrument.n.01", "instrument"}, {"car.n.01", "car"},
                      {"car.n.01", "auto"},        {"truck.n.01", "truck"},
                      {"bike.n.01", "bike"},       {"vehicle.n.01", "vehicle"},
                      {"animal.n.01", "animal"},   {"artifact.n.01", "artifact"},
                      {"entity.n.01", "entity"},   {"eagle.n.01", "bird"},
                      {"unicorn.n.01", "unicorn"}, {"car.n.01", "machine"},
                      {"artifact.n.01", "machine"}};
  return h;
}

inline std::vector<std::string> toy_leaves() {
  return {"dog.n.01",    "cat.n.01",  "robin.n.01", "eagle.n.01", "violin.n.01",
          "harp.n.01",   "flute.n.01", "car.n.01",  "bike.n.01",  "truck.n.01"};
}

inline trifuse::EmbeddingSpace toy_leaf_space(std::mt19937_64& rng, Eigen::Index dim) {
  const auto names = toy_leaves();
  return trifuse::EmbeddingSpace(
      names, oracle::random_matrix(rng, static_cast<Eigen::Index>(names.size()), dim), "visual");
}

// Random aligned space with concept names c0..c{n-1}.
inline trifuse::AlignedConceptSpace random_space(std::mt19937_64& rng, Eigen::Index n,
                                                 Eigen::Index t, Eigen::Index g, Eigen::Index v) {
  trifuse::AlignedConceptSpace s;
  for (Eigen::Index i = 0; i < n; ++i) s.concepts.push_back("c" + std::to_string(i));
  s.text = oracle::random_matrix(rng, t, n);
  s.kg = oracle::random_matrix(rng, g, n);
  s.visual = oracle::random_matrix(rng, v, n);
  return s;
}

// Every unordered concept pair once, with gold scores drawn uniformly.
inline trifuse::SimilarityDataset all_pairs(const trifuse::AlignedConceptSpace& s,
                                            const std::string& name, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 10.0);
  trifuse::SimilarityDataset ds{name, {}};
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = i + 1; j < s.size(); ++j)
      ds.pairs.push_back({s.concepts[i], s.concepts[j], u(rng)});
  return ds;
}

// 14 entities, 3 relations: two parallel 7-chains (a_i, b_i) linked by
// "partner" a_i -> b_i, "next" a_i -> a_{i+1}, "next_partner" a_i -> b_{i+1}.
inline trifuse::TripleStore toy_family_graph() {
  trifuse::TripleStore store;
  std::vector<std::size_t> a, b;
  for (int i = 0; i < 7; ++i) a.push_back(store.entity_id("a" + std::to_string(i)));
  for (int i = 0; i < 7; ++i) b.push_back(store.entity_id("b" + std::to_string(i)));
  const auto partner = store.relation_id("partner");
  const auto next = store.relation_id("next");
  const auto next_partner = store.relation_id("next_partner");
  for (int i = 0; i < 7; ++i) store.add({a[i], partner, b[i]});
  for (int i = 0; i + 1 < 7; ++i) store.add({a[i], next, a[i + 1]});
  for (int i = 0; i + 1 < 7; ++i) store.add({a[i], next_partner, b[i + 1]});
  return store;
}

}  // namespace fixture

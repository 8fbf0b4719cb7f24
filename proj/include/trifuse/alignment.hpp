#pragma once

// Word-level alignment of the three modalities: image pooling, WordNet-style
// subtree abstraction, synset-to-lexeme projection, KG surface-form selection
// and the final vocabulary intersection.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "trifuse/embedding_io.hpp"

namespace trifuse {

enum class Modality { Text, Kg, Visual };

const char* modality_name(Modality m) noexcept;

struct SynsetHierarchy {
  std::vector<std::pair<std::string, std::string>> edges;  // (child, parent)
  std::vector<std::pair<std::string, std::string>> synset_lexemes;  // (synset, lexeme)
};

struct SurfaceForm {
  std::string concept_id;
  std::string form;
  std::uint64_t count = 0;
};

struct SurfaceFormTable {
  std::vector<SurfaceForm> rows;
};

// Concepts are columns: T is t x n, G is g x n, V is v x n.
struct AlignedConceptSpace {
  std::vector<std::string> concepts;
  Eigen::MatrixXd text;
  Eigen::MatrixXd kg;
  Eigen::MatrixXd visual;

  std::size_t size() const noexcept { return concepts.size(); }
  const Eigen::MatrixXd& matrix(Modality m) const noexcept;
  // Throws ValidationError unless column counts agree, entries are finite and
  // no modality has an all-zero column.
  void validate() const;
};

struct ImageGroup {
  std::string synset;
  Eigen::MatrixXd vectors;  // one image per row
};

// Splits tokens "synset/image" on the first '/' and groups rows by synset, in
// order of first appearance.
std::vector<ImageGroup> group_image_vectors(const EmbeddingSpace& images);

EmbeddingSpace pool_image_vectors(const std::vector<ImageGroup>& groups);

// Every synset without its own vector that has at least one covered descendant
// receives the componentwise max over all covered synsets in its subtree.
// Output: the input rows in order, then the abstracted synsets sorted by id.
EmbeddingSpace abstract_hierarchy(const SynsetHierarchy& hierarchy, const EmbeddingSpace& leaves);

struct LexemeProjection {
  EmbeddingSpace lexemes;  // sorted by lexeme
  std::size_t dropped = 0;  // lexemes without any covered synset
};

LexemeProjection project_synsets_to_lexemes(
    const EmbeddingSpace& synsets,
    const std::vector<std::pair<std::string, std::string>>& synset_lexemes);

struct SurfaceFormSelection {
  EmbeddingSpace words;  // sorted by surface form
  std::size_t dropped_without_form = 0;
  std::size_t dropped_collisions = 0;
};

// Re-keys each KG concept to its most frequent surface form (ties: the
// lexicographically smaller form; spaces become '_'). When two concepts land on
// the same form the higher count keeps it (ties: smaller concept id).
SurfaceFormSelection select_surface_forms(const EmbeddingSpace& concepts,
                                          const SurfaceFormTable& table);

struct AlignmentResult {
  AlignedConceptSpace space;
  std::vector<std::string> dropped_zero;  // concepts with an all-zero vector somewhere
};

AlignmentResult build_aligned_space(const EmbeddingSpace& text, const EmbeddingSpace& kg,
                                    const EmbeddingSpace& visual);

// Per-modality EmbeddingSpace views of an aligned space, in concept order.
EmbeddingSpace modality_space(const AlignedConceptSpace& space, Modality modality);

SynsetHierarchy load_hierarchy(const std::filesystem::path& edges_tsv,
                               const std::filesystem::path& synset_lexemes_tsv);
std::vector<std::pair<std::string, std::string>> load_string_pairs(const std::filesystem::path& tsv);
SurfaceFormTable load_surface_forms(const std::filesystem::path& tsv);

}  // namespace trifuse

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace trifuse {

// One modality's vocabulary: unique whitespace-free tokens, each with a finite
// vector of length dim(). Row i of vectors() belongs to tokens()[i].
class EmbeddingSpace {
 public:
  EmbeddingSpace() = default;

  // Validates every invariant; throws ValidationError on violation.
  EmbeddingSpace(std::vector<std::string> tokens, Eigen::MatrixXd vectors,
                 std::string modality = {});

  std::size_t size() const noexcept { return tokens_.size(); }
  bool empty() const noexcept { return tokens_.empty(); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(vectors_.cols()); }

  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  const Eigen::MatrixXd& vectors() const noexcept { return vectors_; }
  const std::string& modality() const noexcept { return modality_; }

  std::optional<std::size_t> find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token).has_value(); }

  auto row(std::size_t i) const { return vectors_.row(static_cast<Eigen::Index>(i)); }

 private:
  std::vector<std::string> tokens_;
  Eigen::MatrixXd vectors_;
  std::string modality_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct LoadOptions {
  // Fold ASCII letters to lower case; later duplicates are dropped.
  bool lowercase = false;
  std::string modality;
};

// Format: "<count> <dim>" header, then one "<token> v1 ... v_dim" line per token.
EmbeddingSpace load_embeddings_text(const std::filesystem::path& path,
                                    const LoadOptions& options = {});

// Same format, read from a string; `source` only labels error messages.
EmbeddingSpace parse_embeddings_text(std::string_view content, const LoadOptions& options = {},
                                     const std::string& source = "<memory>");

void write_embeddings_text(const EmbeddingSpace& space, const std::filesystem::path& path);
std::string format_embeddings_text(const EmbeddingSpace& space);

struct EmbeddingStats {
  std::size_t count = 0;
  std::size_t dim = 0;
  double min_norm = 0.0;
  double max_norm = 0.0;
  double mean_norm = 0.0;
};

EmbeddingStats embedding_stats(const EmbeddingSpace& space);

}  // namespace trifuse

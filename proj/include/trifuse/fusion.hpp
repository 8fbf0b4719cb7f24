#pragma once

#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "trifuse/alignment.hpp"

namespace trifuse {

enum class FusionMethod { Avg, Conc, Svd, Pca };

std::string_view method_name(FusionMethod m) noexcept;
// Accepts "avg", "conc", "svd", "pca" (any case).
FusionMethod parse_method(std::string_view name);

struct ModalityWeights {
  double text = 1.0;
  double kg = 1.0;
  double visual = 1.0;

  double sum() const noexcept { return text + kg + visual; }
  double operator[](Modality m) const noexcept;
  friend bool operator==(const ModalityWeights&, const ModalityWeights&) = default;
};

inline constexpr int kDefaultReducedDim = 100;

struct FusionConfig {
  FusionMethod method = FusionMethod::Conc;
  bool normalize = false;
  ModalityWeights weights;
  int k = kDefaultReducedDim;  // only read by Svd and Pca

  // Weights finite, non-negative and not all zero; k positive.
  void validate() const;
};

// Divides each column by its Euclidean norm. `names` (optional) labels the
// error raised for an all-zero column.
Eigen::MatrixXd normalize_unit_columns(const Eigen::MatrixXd& m,
                                       std::span<const std::string> names = {});

// [w_T * T; w_G * G; w_V * V]
Eigen::MatrixXd scale_and_stack(const Eigen::MatrixXd& text, const Eigen::MatrixXd& kg,
                                const Eigen::MatrixXd& visual, const ModalityWeights& weights);

double cosine_similarity(const Eigen::Ref<const Eigen::VectorXd>& u,
                         const Eigen::Ref<const Eigen::VectorXd>& v);

// Weighted mean of the three per-modality cosines between concepts i and j.
double avg_similarity(const AlignedConceptSpace& space, const ModalityWeights& weights,
                      std::size_t i, std::size_t j);

// Result of a truncated decomposition: `scores` is k x n, one column per concept.
struct Reduction {
  Eigen::MatrixXd scores;
  Eigen::VectorXd singular_values;  // all of them, descending
  Eigen::Index effective_rank = 0;
};

// SVD of X = M^T (concepts as rows); concept vectors are the rows of U_k S_k.
// Each left singular vector is signed so its largest-magnitude entry is
// positive.
Reduction svd_reduce(const Eigen::MatrixXd& m, int k);

// Feature rows are centred across concepts, then projected onto the top-k
// principal directions. Same sign convention as svd_reduce.
Reduction pca_reduce(const Eigen::MatrixXd& m, int k);

class FusedSpace {
 public:
  struct PerModality {
    Eigen::MatrixXd text, kg, visual;
    ModalityWeights weights;
  };
  struct Joint {
    Eigen::MatrixXd matrix;  // d x n
  };

  FusedSpace(std::vector<std::string> concepts, PerModality rep);
  FusedSpace(std::vector<std::string> concepts, Joint rep);

  const std::vector<std::string>& concepts() const noexcept { return concepts_; }
  std::size_t size() const noexcept { return concepts_.size(); }
  bool is_joint() const noexcept { return std::holds_alternative<Joint>(rep_); }
  const Eigen::MatrixXd& joint() const { return std::get<Joint>(rep_).matrix; }
  const PerModality& per_modality() const { return std::get<PerModality>(rep_); }

  // Reduced dimension actually used (k after clamping) for Svd/Pca, d otherwise.
  Eigen::Index dimension() const noexcept;
  bool rank_clamped() const noexcept { return rank_clamped_; }
  void set_rank_clamped(bool v) noexcept { rank_clamped_ = v; }

  // Cosine between concepts i and j (Joint), or the weighted cosine mean (PerModality).
  double similarity(std::size_t i, std::size_t j) const;

 private:
  std::vector<std::string> concepts_;
  std::variant<PerModality, Joint> rep_;
  // Cached reciprocal column norms, per block: Joint uses [0], PerModality [0..2].
  std::vector<Eigen::VectorXd> inv_norms_;
  bool rank_clamped_ = false;
};

FusedSpace conc_representation(const AlignedConceptSpace& space, const ModalityWeights& weights,
                               bool normalize);

enum class RankPolicy {
  Strict,  // require k <= min(t+g+v, n)
  Clamp,   // additionally drop components beyond the numerical rank
};

FusedSpace fuse(const AlignedConceptSpace& space, const FusionConfig& config,
                RankPolicy policy = RankPolicy::Strict);

}  // namespace trifuse

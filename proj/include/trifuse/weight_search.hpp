#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "trifuse/evaluation.hpp"

namespace trifuse {

struct WeightGridPoint {
  ModalityWeights weights;
  double score = 0.0;  // weighted-average rho
};

struct GridSearchResult {
  std::vector<WeightGridPoint> points;  // lexicographic in (w_T, w_G, w_V)
  WeightGridPoint best;
  std::size_t rank_clamped_points = 0;
};

// All (w_T, w_G, w_V) on the unit simplex whose entries are multiples of
// `step`, in lexicographic order. 1/step must be an integer.
std::vector<ModalityWeights> enumerate_simplex(double step);

struct GridSearchOptions {
  double step = 0.05;
  // 0 picks TRIFUSE_THREADS from the environment, else the hardware count.
  unsigned threads = 0;
};

// Evaluates `base` (method, normalize, k) at every simplex point. For Svd/Pca
// the reduced dimension is clamped to the numerical rank of each weighted stack.
GridSearchResult grid_search(const AlignedConceptSpace& space, const FusionConfig& base,
                             std::span<const SimilarityDataset> datasets,
                             const GridSearchOptions& options = {});

// Highest score; ties go to the lexicographically smallest weights.
WeightGridPoint select_best(std::span<const WeightGridPoint> points);

// Lines starting with '#' in `preamble` are written first, then a
// "# optimum" line, then "w_T<TAB>w_G<TAB>w_V<TAB>score" per point.
void export_heatmap(const GridSearchResult& result, const std::filesystem::path& path,
                    std::span<const std::string> preamble = {});
std::string format_heatmap(const GridSearchResult& result, std::span<const std::string> preamble = {});

struct LoadedHeatmap {
  GridSearchResult result;
  std::vector<std::string> preamble;
};

LoadedHeatmap load_heatmap(const std::filesystem::path& path);

unsigned resolve_thread_count(unsigned requested);

}  // namespace trifuse

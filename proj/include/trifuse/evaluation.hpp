#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "trifuse/fusion.hpp"

namespace trifuse {

struct WordPair {
  std::string word1;
  std::string word2;
  double gold = 0.0;
};

struct SimilarityDataset {
  std::string name;
  std::vector<WordPair> pairs;
};

struct DatasetScore {
  std::string name;
  std::size_t pair_count = 0;
  double rho = 0.0;
};

struct EvaluationReport {
  std::vector<DatasetScore> per_dataset;
  double weighted_average = 0.0;
};

// TSV "word1<TAB>word2<TAB>score"; blank lines are ignored.
SimilarityDataset load_pairs(const std::filesystem::path& path, const std::string& name,
                             bool skip_header = false);

SimilarityDataset restrict_to_vocabulary(const SimilarityDataset& dataset,
                                         const std::unordered_set<std::string>& vocabulary);
SimilarityDataset restrict_to_vocabulary(const SimilarityDataset& dataset,
                                         std::span<const std::string> vocabulary);

// Mean rank (1-based) for tied values.
std::vector<double> fractional_ranks(std::span<const double> values);

// Pearson correlation of fractional ranks. Throws ValidationError for lengths
// that differ or are below 2, and for a constant argument.
double spearman_rho(std::span<const double> x, std::span<const double> y);

// Size-weighted mean of the per-dataset correlations.
double weighted_average(std::span<const DatasetScore> scores);

// Words of every pair must be concepts of `fused`.
EvaluationReport evaluate_fused(const FusedSpace& fused, std::span<const SimilarityDataset> datasets);

EvaluationReport evaluate_suite(const AlignedConceptSpace& space, const FusionConfig& config,
                                std::span<const SimilarityDataset> datasets,
                                RankPolicy policy = RankPolicy::Strict);

// "dataset<TAB>pairs<TAB>rho" rows then a WEIGHTED_AVG row.
void write_report_tsv(const EvaluationReport& report, std::ostream& out);
// Fixed-width table: one column per dataset in input order, then the weighted mean.
void write_report_table(const EvaluationReport& report, const std::string& row_label,
                        std::ostream& out);

}  // namespace trifuse

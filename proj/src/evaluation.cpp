#include "trifuse/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "trifuse/errors.hpp"
#include "trifuse/tsv.hpp"

namespace trifuse {

SimilarityDataset load_pairs(const std::filesystem::path& path, const std::string& name,
                             bool skip_header) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  SimilarityDataset ds{name, {}};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (skip_header && line_no == 1) continue;
    const auto line = text::trim_eol(raw);
    if (line.empty()) continue;
    const auto f = text::split(line, '\t');
    if (f.size() != 3 || f[0].empty() || f[1].empty()) {
      throw ParseError(path.string(), line_no, "expected 'word1<TAB>word2<TAB>score'");
    }
    const auto gold = text::parse_double(f[2]);
    if (!gold || !std::isfinite(*gold)) {
      throw ParseError(path.string(), line_no, "invalid score '" + std::string(f[2]) + "'");
    }
    ds.pairs.push_back({std::string(f[0]), std::string(f[1]), *gold});
  }
  return ds;
}

SimilarityDataset restrict_to_vocabulary(const SimilarityDataset& dataset,
                                         const std::unordered_set<std::string>& vocabulary) {
  SimilarityDataset out{dataset.name, {}};
  for (const auto& p : dataset.pairs) {
    if (vocabulary.count(p.word1) && vocabulary.count(p.word2)) out.pairs.push_back(p);
  }
  return out;
}

SimilarityDataset restrict_to_vocabulary(const SimilarityDataset& dataset,
                                         std::span<const std::string> vocabulary) {
  return restrict_to_vocabulary(dataset,
                                std::unordered_set<std::string>(vocabulary.begin(), vocabulary.end()));
}

std::vector<double> fractional_ranks(std::span<const double> values) {
  const auto n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // positions i..j-1 hold ranks i+1..j
    const double mean_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) ranks[order[t]] = mean_rank;
    i = j;
  }
  return ranks;
}

double spearman_rho(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("spearman: inputs differ in length");
  if (x.size() < 2) throw ValidationError("spearman: need at least two observations");
  const auto rx = fractional_ranks(x);
  const auto ry = fractional_ranks(y);
  const double n = static_cast<double>(x.size());
  // Both rank vectors have mean (n+1)/2.
  const double mean = 0.5 * (n + 1.0);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw ValidationError("spearman: constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double weighted_average(std::span<const DatasetScore> scores) {
  double num = 0.0;
  std::size_t den = 0;
  for (const auto& s : scores) {
    num += static_cast<double>(s.pair_count) * s.rho;
    den += s.pair_count;
  }
  if (den == 0) throw ValidationError("weighted average over zero pairs");
  return num / static_cast<double>(den);
}

EvaluationReport evaluate_fused(const FusedSpace& fused, std::span<const SimilarityDataset> datasets) {
  std::unordered_map<std::string, std::size_t> index;
  index.reserve(fused.size());
  for (std::size_t i = 0; i < fused.size(); ++i) index.emplace(fused.concepts()[i], i);
  auto lookup = [&](const std::string& word, const std::string& dataset) {
    const auto it = index.find(word);
    if (it == index.end()) {
      throw ValidationError("dataset '" + dataset + "': word '" + word +
                            "' is not in the concept space (restrict the dataset first)");
    }
    return it->second;
  };

  EvaluationReport report;
  for (const auto& ds : datasets) {
    std::vector<double> model, gold;
    model.reserve(ds.pairs.size());
    gold.reserve(ds.pairs.size());
    for (const auto& p : ds.pairs) {
      model.push_back(fused.similarity(lookup(p.word1, ds.name), lookup(p.word2, ds.name)));
      gold.push_back(p.gold);
    }
    double rho = 0.0;
    try {
      rho = spearman_rho(model, gold);
    } catch (const ValidationError& e) {
      throw ValidationError("dataset '" + ds.name + "': " + e.what());
    }
    report.per_dataset.push_back({ds.name, ds.pairs.size(), rho});
  }
  report.weighted_average = weighted_average(report.per_dataset);
  return report;
}

EvaluationReport evaluate_suite(const AlignedConceptSpace& space, const FusionConfig& config,
                                std::span<const SimilarityDataset> datasets, RankPolicy policy) {
  return evaluate_fused(fuse(space, config, policy), datasets);
}

void write_report_tsv(const EvaluationReport& report, std::ostream& out) {
  std::size_t total = 0;
  for (const auto& s : report.per_dataset) {
    out << s.name << '\t' << s.pair_count << '\t' << text::format_double(s.rho) << '\n';
    total += s.pair_count;
  }
  out << "WEIGHTED_AVG\t" << total << '\t' << text::format_double(report.weighted_average) << '\n';
}

void write_report_table(const EvaluationReport& report, const std::string& row_label,
                        std::ostream& out) {
  std::size_t label_width = std::max<std::size_t>(row_label.size(), 8);
  std::ostringstream head, pairs, row;
  head << std::left << std::setw(static_cast<int>(label_width)) << "" << " |";
  pairs << std::left << std::setw(static_cast<int>(label_width)) << "pairs" << " |";
  row << std::left << std::setw(static_cast<int>(label_width)) << row_label << " |";
  std::size_t total = 0;
  for (const auto& s : report.per_dataset) {
    const int w = static_cast<int>(std::max<std::size_t>(s.name.size(), 6));
    head << ' ' << std::right << std::setw(w) << s.name;
    pairs << ' ' << std::right << std::setw(w) << s.pair_count;
    row << ' ' << std::right << std::setw(w) << std::fixed << std::setprecision(3) << s.rho;
    total += s.pair_count;
  }
  head << ' ' << std::right << std::setw(8) << "weighted";
  pairs << ' ' << std::right << std::setw(8) << total;
  row << ' ' << std::right << std::setw(8) << std::fixed << std::setprecision(3)
      << report.weighted_average;
  out << head.str() << '\n' << pairs.str() << '\n' << row.str() << '\n';
}

}  // namespace trifuse

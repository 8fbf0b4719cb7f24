#include "trifuse/weight_search.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "trifuse/errors.hpp"
#include "trifuse/tsv.hpp"

namespace trifuse {

std::vector<ModalityWeights> enumerate_simplex(double step) {
  if (!std::isfinite(step) || step <= 0.0 || step > 1.0) {
    throw ValidationError("grid step must lie in (0, 1]");
  }
  const double inverse = 1.0 / step;
  const long long divisions = std::llround(inverse);
  if (divisions < 1 || std::abs(inverse - static_cast<double>(divisions)) > 1e-9 * inverse) {
    throw ValidationError("grid step " + text::format_double(step) + " does not divide 1");
  }
  const double n = static_cast<double>(divisions);
  std::vector<ModalityWeights> out;
  out.reserve(static_cast<std::size_t>((divisions + 1) * (divisions + 2) / 2));
  for (long long i = 0; i <= divisions; ++i) {
    for (long long j = 0; i + j <= divisions; ++j) {
      out.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n,
                     static_cast<double>(divisions - i - j) / n});
    }
  }
  return out;
}

unsigned resolve_thread_count(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("TRIFUSE_THREADS")) {
    const auto parsed = text::parse_int(env);
    if (parsed && *parsed > 0) return static_cast<unsigned>(*parsed);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

WeightGridPoint select_best(std::span<const WeightGridPoint> points) {
  if (points.empty()) throw ValidationError("no grid points");
  const auto lex_less = [](const ModalityWeights& a, const ModalityWeights& b) {
    if (a.text != b.text) return a.text < b.text;
    if (a.kg != b.kg) return a.kg < b.kg;
    return a.visual < b.visual;
  };
  WeightGridPoint best = points.front();
  for (const auto& p : points.subspan(1)) {
    if (p.score > best.score || (p.score == best.score && lex_less(p.weights, best.weights))) {
      best = p;
    }
  }
  return best;
}

GridSearchResult grid_search(const AlignedConceptSpace& space, const FusionConfig& base,
                             std::span<const SimilarityDataset> datasets,
                             const GridSearchOptions& options) {
  const auto grid = enumerate_simplex(options.step);
  space.validate();

  GridSearchResult result;
  result.points.resize(grid.size());
  std::vector<char> clamped(grid.size(), 0);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    while (true) {
      const auto idx = next.fetch_add(1);
      if (idx >= grid.size()) return;
      try {
        FusionConfig config = base;
        config.weights = grid[idx];
        const auto fused = fuse(space, config, RankPolicy::Clamp);
        result.points[idx] = {grid[idx], evaluate_fused(fused, datasets).weighted_average};
        clamped[idx] = fused.rank_clamped() ? 1 : 0;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(grid.size());
        return;
      }
    }
  };

  const auto threads = std::min<std::size_t>(resolve_thread_count(options.threads), grid.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  for (const char c : clamped) result.rank_clamped_points += static_cast<std::size_t>(c);
  result.best = select_best(result.points);
  return result;
}

std::string format_heatmap(const GridSearchResult& result, std::span<const std::string> preamble) {
  std::ostringstream out;
  for (const auto& line : preamble) out << line << '\n';
  const auto& b = result.best;
  out << "# optimum\t" << text::format_double(b.weights.text) << '\t'
      << text::format_double(b.weights.kg) << '\t' << text::format_double(b.weights.visual) << '\t'
      << text::format_double(b.score) << '\n';
  for (const auto& p : result.points) {
    out << text::format_double(p.weights.text) << '\t' << text::format_double(p.weights.kg) << '\t'
        << text::format_double(p.weights.visual) << '\t' << text::format_double(p.score) << '\n';
  }
  return out.str();
}

void export_heatmap(const GridSearchResult& result, const std::filesystem::path& path,
                    std::span<const std::string> preamble) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << format_heatmap(result, preamble);
  if (!out.flush()) throw IoError("write to '" + path.string() + "' failed");
}

LoadedHeatmap load_heatmap(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  LoadedHeatmap loaded;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = text::trim_eol(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line.rfind("# optimum", 0) != 0) loaded.preamble.emplace_back(line);
      continue;
    }
    const auto f = text::split(line, '\t');
    if (f.size() != 4) throw ParseError(path.string(), line_no, "expected 4 tab-separated fields");
    double v[4];
    for (int c = 0; c < 4; ++c) {
      const auto parsed = text::parse_double(f[static_cast<std::size_t>(c)]);
      if (!parsed) throw ParseError(path.string(), line_no, "invalid number");
      v[c] = *parsed;
    }
    loaded.result.points.push_back({{v[0], v[1], v[2]}, v[3]});
  }
  loaded.result.best = select_best(loaded.result.points);
  return loaded;
}

}  // namespace trifuse

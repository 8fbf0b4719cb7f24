#include "trifuse/embedding_io.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "trifuse/errors.hpp"
#include "trifuse/tsv.hpp"

namespace trifuse {

EmbeddingSpace::EmbeddingSpace(std::vector<std::string> tokens, Eigen::MatrixXd vectors,
                               std::string modality)
    : tokens_(std::move(tokens)), vectors_(std::move(vectors)), modality_(std::move(modality)) {
  if (static_cast<Eigen::Index>(tokens_.size()) != vectors_.rows()) {
    throw ValidationError("embedding space: " + std::to_string(tokens_.size()) + " tokens but " +
                          std::to_string(vectors_.rows()) + " vectors");
  }
  if (vectors_.cols() < 1) throw ValidationError("embedding space: dimension must be positive");
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    const auto& token = tokens_[i];
    if (token.empty() || text::has_whitespace(token)) {
      throw ValidationError("embedding space: invalid token '" + token + "'");
    }
    if (!index_.emplace(token, i).second) {
      throw ValidationError("embedding space: duplicate token '" + token + "'");
    }
    if (!vectors_.row(static_cast<Eigen::Index>(i)).allFinite()) {
      throw ValidationError("embedding space: non-finite value in vector of '" + token + "'");
    }
  }
}

std::optional<std::size_t> EmbeddingSpace::find(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

namespace {

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

EmbeddingSpace parse_embeddings_text(std::string_view content, const LoadOptions& options,
                                     const std::string& source) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto next_line = [&](std::string_view& line) {
    if (pos >= content.size()) return false;
    auto end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    line = text::trim_eol(content.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    return true;
  };

  std::string_view line;
  if (!next_line(line)) throw ParseError(source, 1, "missing header line");
  const auto header = text::split_ws(line);
  if (header.size() != 2) throw ParseError(source, line_no, "header must be '<count> <dim>'");
  const auto count = text::parse_int(header[0]);
  const auto dim = text::parse_int(header[1]);
  if (!count || !dim || *count < 0 || *dim < 1) {
    throw ParseError(source, line_no, "header must hold a non-negative count and positive dim");
  }

  std::vector<std::string> tokens;
  tokens.reserve(static_cast<std::size_t>(*count));
  Eigen::MatrixXd vectors(*count, *dim);
  std::unordered_map<std::string, std::size_t> seen;
  std::size_t body_rows = 0;
  Eigen::Index kept = 0;

  while (next_line(line)) {
    const auto fields = text::split_ws(line);
    if (fields.empty()) continue;
    if (static_cast<long long>(body_rows) == *count) {
      throw ParseError(source, line_no,
                       "header declares " + std::to_string(*count) + " vectors but body has more");
    }
    ++body_rows;
    if (static_cast<long long>(fields.size()) - 1 != *dim) {
      throw ParseError(source, line_no,
                       "dimension mismatch: expected " + std::to_string(*dim) + " values, found " +
                           std::to_string(fields.size() - 1));
    }
    std::string token = options.lowercase ? to_lower_ascii(fields[0]) : std::string(fields[0]);
    if (seen.count(token)) {
      if (options.lowercase) continue;
      throw ParseError(source, line_no, "duplicate token '" + token + "'");
    }
    for (long long d = 0; d < *dim; ++d) {
      const auto value = text::parse_double(fields[static_cast<std::size_t>(d) + 1]);
      if (!value) {
        throw ParseError(source, line_no,
                         "invalid number '" + std::string(fields[static_cast<std::size_t>(d) + 1]) +
                             "'");
      }
      if (!std::isfinite(*value)) throw ParseError(source, line_no, "non-finite value");
      vectors(kept, d) = *value;
    }
    seen.emplace(token, tokens.size());
    tokens.push_back(std::move(token));
    ++kept;
  }
  if (static_cast<long long>(body_rows) != *count) {
    throw ParseError(source, line_no + 1,
                     "header declares " + std::to_string(*count) + " vectors but body has " +
                         std::to_string(body_rows));
  }
  vectors.conservativeResize(kept, Eigen::NoChange);
  return EmbeddingSpace(std::move(tokens), std::move(vectors), options.modality);
}

EmbeddingSpace load_embeddings_text(const std::filesystem::path& path, const LoadOptions& options) {
  return parse_embeddings_text(read_file(path), options, path.string());
}

std::string format_embeddings_text(const EmbeddingSpace& space) {
  std::string out;
  out += std::to_string(space.size()) + " " + std::to_string(space.dim()) + "\n";
  const auto& m = space.vectors();
  for (std::size_t i = 0; i < space.size(); ++i) {
    out += space.tokens()[i];
    for (Eigen::Index d = 0; d < m.cols(); ++d) {
      out += ' ';
      out += text::format_double(m(static_cast<Eigen::Index>(i), d));
    }
    out += '\n';
  }
  return out;
}

void write_embeddings_text(const EmbeddingSpace& space, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << format_embeddings_text(space);
  if (!out.flush()) throw IoError("write to '" + path.string() + "' failed");
}

EmbeddingStats embedding_stats(const EmbeddingSpace& space) {
  EmbeddingStats stats;
  stats.count = space.size();
  stats.dim = space.dim();
  if (space.empty()) return stats;
  const Eigen::VectorXd norms = space.vectors().rowwise().norm();
  stats.min_norm = norms.minCoeff();
  stats.max_norm = norms.maxCoeff();
  stats.mean_norm = norms.mean();
  return stats;
}

}  // namespace trifuse

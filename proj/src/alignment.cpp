#include "trifuse/alignment.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "trifuse/errors.hpp"
#include "trifuse/tsv.hpp"

namespace trifuse {

const char* modality_name(Modality m) noexcept {
  switch (m) {
    case Modality::Text: return "text";
    case Modality::Kg: return "kg";
    case Modality::Visual: return "visual";
  }
  return "?";
}

const Eigen::MatrixXd& AlignedConceptSpace::matrix(Modality m) const noexcept {
  switch (m) {
    case Modality::Text: return text;
    case Modality::Kg: return kg;
    case Modality::Visual: return visual;
  }
  return text;
}

void AlignedConceptSpace::validate() const {
  const auto n = static_cast<Eigen::Index>(concepts.size());
  for (const auto m : {Modality::Text, Modality::Kg, Modality::Visual}) {
    const auto& mat = matrix(m);
    if (mat.cols() != n) {
      throw ValidationError(std::string("aligned space: ") + modality_name(m) + " matrix has " +
                            std::to_string(mat.cols()) + " columns, expected " + std::to_string(n));
    }
    if (mat.rows() < 1) {
      throw ValidationError(std::string("aligned space: ") + modality_name(m) + " has no rows");
    }
    if (!mat.allFinite()) {
      throw ValidationError(std::string("aligned space: non-finite entry in ") + modality_name(m));
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      if ((mat.col(j).array() == 0.0).all()) {
        throw ValidationError(std::string("aligned space: all-zero ") + modality_name(m) +
                              " vector for '" + concepts[static_cast<std::size_t>(j)] + "'");
      }
    }
  }
}

std::vector<ImageGroup> group_image_vectors(const EmbeddingSpace& images) {
  std::vector<ImageGroup> groups;
  std::unordered_map<std::string, std::size_t> slot;
  std::vector<std::vector<Eigen::Index>> members;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto& token = images.tokens()[i];
    const auto slash = token.find('/');
    if (slash == std::string::npos || slash == 0) {
      throw ValidationError("image token '" + token + "' is not of the form synset/image");
    }
    const auto synset = token.substr(0, slash);
    auto [it, inserted] = slot.emplace(synset, groups.size());
    if (inserted) {
      groups.push_back({synset, {}});
      members.emplace_back();
    }
    members[it->second].push_back(static_cast<Eigen::Index>(i));
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    groups[g].vectors = images.vectors()(members[g], Eigen::all);
  }
  return groups;
}

EmbeddingSpace pool_image_vectors(const std::vector<ImageGroup>& groups) {
  if (groups.empty()) throw ValidationError("no image groups to pool");
  const auto dim = groups.front().vectors.cols();
  Eigen::MatrixXd pooled(static_cast<Eigen::Index>(groups.size()), dim);
  std::vector<std::string> tokens;
  tokens.reserve(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& group = groups[g];
    if (group.vectors.rows() == 0) {
      throw ValidationError("image group '" + group.synset + "' is empty");
    }
    if (group.vectors.cols() != dim) {
      throw ValidationError("image group '" + group.synset + "' has dimension " +
                            std::to_string(group.vectors.cols()) + ", expected " +
                            std::to_string(dim));
    }
    pooled.row(static_cast<Eigen::Index>(g)) = group.vectors.colwise().maxCoeff();
    tokens.push_back(group.synset);
  }
  return EmbeddingSpace(std::move(tokens), std::move(pooled), "visual");
}

namespace {

struct Graph {
  std::vector<std::string> names;
  std::unordered_map<std::string, std::size_t> ids;
  std::vector<std::vector<std::size_t>> children;

  std::size_t intern(const std::string& name) {
    auto [it, inserted] = ids.emplace(name, names.size());
    if (inserted) {
      names.push_back(name);
      children.emplace_back();
    }
    return it->second;
  }
};

// Post-order over child edges (children before parents). Throws on a cycle
// with the offending path as witness.
std::vector<std::size_t> post_order(const Graph& graph) {
  enum class Mark : unsigned char { Unseen, Active, Done };
  const auto n = graph.names.size();
  std::vector<Mark> mark(n, Mark::Unseen);
  std::vector<std::size_t> order;
  order.reserve(n);
  std::vector<std::pair<std::size_t, std::size_t>> stack;  // (node, next child)

  for (std::size_t root = 0; root < n; ++root) {
    if (mark[root] != Mark::Unseen) continue;
    stack.push_back({root, 0});
    mark[root] = Mark::Active;
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < graph.children[node].size()) {
        const auto child = graph.children[node][next++];
        if (mark[child] == Mark::Active) {
          std::string witness;
          auto it = std::find_if(stack.begin(), stack.end(),
                                 [&](const auto& frame) { return frame.first == child; });
          for (; it != stack.end(); ++it) witness += graph.names[it->first] + " -> ";
          witness += graph.names[child];
          throw ValidationError("synset hierarchy has a cycle: " + witness);
        }
        if (mark[child] == Mark::Unseen) {
          mark[child] = Mark::Active;
          stack.push_back({child, 0});
        }
      } else {
        mark[node] = Mark::Done;
        order.push_back(node);
        stack.pop_back();
      }
    }
  }
  return order;
}

}  // namespace

EmbeddingSpace abstract_hierarchy(const SynsetHierarchy& hierarchy, const EmbeddingSpace& leaves) {
  Graph graph;
  for (const auto& [child, parent] : hierarchy.edges) {
    const auto c = graph.intern(child);
    const auto p = graph.intern(parent);
    graph.children[p].push_back(c);
  }
  const auto order = post_order(graph);

  const auto dim = static_cast<Eigen::Index>(leaves.dim());
  const auto n = graph.names.size();
  // Max over covered synsets in each node's subtree, the node itself included.
  std::vector<std::optional<Eigen::VectorXd>> pooled(n);
  for (const auto node : order) {
    std::optional<Eigen::VectorXd> acc;
    if (const auto row = leaves.find(graph.names[node])) acc = leaves.row(*row).transpose();
    for (const auto child : graph.children[node]) {
      if (!pooled[child]) continue;
      if (acc) {
        *acc = acc->cwiseMax(*pooled[child]);
      } else {
        acc = pooled[child];
      }
    }
    pooled[node] = std::move(acc);
  }

  std::vector<std::size_t> added;
  for (std::size_t node = 0; node < n; ++node) {
    if (pooled[node] && !leaves.contains(graph.names[node])) added.push_back(node);
  }
  std::sort(added.begin(), added.end(),
            [&](std::size_t a, std::size_t b) { return graph.names[a] < graph.names[b]; });

  std::vector<std::string> tokens = leaves.tokens();
  Eigen::MatrixXd vectors(static_cast<Eigen::Index>(leaves.size() + added.size()), dim);
  vectors.topRows(static_cast<Eigen::Index>(leaves.size())) = leaves.vectors();
  for (std::size_t k = 0; k < added.size(); ++k) {
    tokens.push_back(graph.names[added[k]]);
    vectors.row(static_cast<Eigen::Index>(leaves.size() + k)) = pooled[added[k]]->transpose();
  }
  return EmbeddingSpace(std::move(tokens), std::move(vectors), leaves.modality());
}

LexemeProjection project_synsets_to_lexemes(
    const EmbeddingSpace& synsets,
    const std::vector<std::pair<std::string, std::string>>& synset_lexemes) {
  std::map<std::string, Eigen::VectorXd> acc;
  std::set<std::string> all_lexemes;
  for (const auto& [synset, lexeme] : synset_lexemes) {
    all_lexemes.insert(lexeme);
    const auto row = synsets.find(synset);
    if (!row) continue;
    const Eigen::VectorXd v = synsets.row(*row).transpose();
    auto [it, inserted] = acc.emplace(lexeme, v);
    if (!inserted) it->second = it->second.cwiseMax(v);
  }

  std::vector<std::string> tokens;
  tokens.reserve(acc.size());
  Eigen::MatrixXd vectors(static_cast<Eigen::Index>(acc.size()),
                          static_cast<Eigen::Index>(synsets.dim()));
  Eigen::Index r = 0;
  for (auto& [lexeme, v] : acc) {
    tokens.push_back(lexeme);
    vectors.row(r++) = v.transpose();
  }
  LexemeProjection out{EmbeddingSpace(std::move(tokens), std::move(vectors), synsets.modality()),
                       all_lexemes.size() - acc.size()};
  return out;
}

namespace {

std::string normalize_form(const std::string& form) {
  std::string out = form;
  for (auto& c : out) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') c = '_';
  }
  return out;
}

}  // namespace

SurfaceFormSelection select_surface_forms(const EmbeddingSpace& concepts,
                                          const SurfaceFormTable& table) {
  struct Choice {
    std::string form;
    std::uint64_t count = 0;
  };
  // Best form per concept row.
  std::vector<std::optional<Choice>> best(concepts.size());
  for (const auto& row : table.rows) {
    const auto idx = concepts.find(row.concept_id);
    if (!idx) continue;
    auto form = normalize_form(row.form);
    if (form.empty()) continue;
    auto& slot = best[*idx];
    if (!slot || row.count > slot->count || (row.count == slot->count && form < slot->form)) {
      slot = Choice{std::move(form), row.count};
    }
  }

  SurfaceFormSelection out;
  // form -> winning concept row
  std::map<std::string, std::size_t> owner;
  for (std::size_t i = 0; i < concepts.size(); ++i) {
    if (!best[i]) {
      ++out.dropped_without_form;
      continue;
    }
    auto [it, inserted] = owner.emplace(best[i]->form, i);
    if (inserted) continue;
    ++out.dropped_collisions;
    const auto& incumbent = *best[it->second];
    const bool challenger_wins =
        best[i]->count > incumbent.count ||
        (best[i]->count == incumbent.count && concepts.tokens()[i] < concepts.tokens()[it->second]);
    if (challenger_wins) it->second = i;
  }

  std::vector<std::string> tokens;
  Eigen::MatrixXd vectors(static_cast<Eigen::Index>(owner.size()),
                          static_cast<Eigen::Index>(concepts.dim()));
  Eigen::Index r = 0;
  for (const auto& [form, i] : owner) {
    tokens.push_back(form);
    vectors.row(r++) = concepts.row(i);
  }
  out.words = EmbeddingSpace(std::move(tokens), std::move(vectors), concepts.modality());
  return out;
}

AlignmentResult build_aligned_space(const EmbeddingSpace& text, const EmbeddingSpace& kg,
                                    const EmbeddingSpace& visual) {
  std::vector<std::string> shared;
  for (const auto& token : text.tokens()) {
    if (kg.contains(token) && visual.contains(token)) shared.push_back(token);
  }
  std::sort(shared.begin(), shared.end());

  AlignmentResult result;
  std::vector<std::size_t> ti, gi, vi;
  for (const auto& token : shared) {
    const auto t = *text.find(token);
    const auto g = *kg.find(token);
    const auto v = *visual.find(token);
    const bool zero = (text.row(t).array() == 0.0).all() || (kg.row(g).array() == 0.0).all() ||
                      (visual.row(v).array() == 0.0).all();
    if (zero) {
      result.dropped_zero.push_back(token);
      continue;
    }
    result.space.concepts.push_back(token);
    ti.push_back(t);
    gi.push_back(g);
    vi.push_back(v);
  }
  if (result.space.concepts.empty()) {
    throw ValidationError("vocabulary intersection of the three modalities is empty");
  }
  const auto pick = [](const EmbeddingSpace& s, const std::vector<std::size_t>& rows) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(s.dim()), static_cast<Eigen::Index>(rows.size()));
    for (std::size_t j = 0; j < rows.size(); ++j) {
      m.col(static_cast<Eigen::Index>(j)) = s.row(rows[j]).transpose();
    }
    return m;
  };
  result.space.text = pick(text, ti);
  result.space.kg = pick(kg, gi);
  result.space.visual = pick(visual, vi);
  return result;
}

EmbeddingSpace modality_space(const AlignedConceptSpace& space, Modality modality) {
  return EmbeddingSpace(space.concepts, space.matrix(modality).transpose(),
                        modality_name(modality));
}

namespace {

template <typename RowFn>
void for_each_tsv_row(const std::filesystem::path& path, std::size_t fields_expected, RowFn&& fn) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = text::trim_eol(raw);
    if (line.empty()) continue;
    const auto fields = text::split(line, '\t');
    if (fields.size() != fields_expected) {
      throw ParseError(path.string(), line_no,
                       "expected " + std::to_string(fields_expected) + " tab-separated fields, found " +
                           std::to_string(fields.size()));
    }
    for (const auto f : fields) {
      if (f.empty()) throw ParseError(path.string(), line_no, "empty field");
    }
    fn(fields, line_no);
  }
}

}  // namespace

std::vector<std::pair<std::string, std::string>> load_string_pairs(const std::filesystem::path& tsv) {
  std::vector<std::pair<std::string, std::string>> out;
  for_each_tsv_row(tsv, 2, [&](const auto& f, std::size_t) {
    out.emplace_back(std::string(f[0]), std::string(f[1]));
  });
  return out;
}

SynsetHierarchy load_hierarchy(const std::filesystem::path& edges_tsv,
                               const std::filesystem::path& synset_lexemes_tsv) {
  SynsetHierarchy h;
  h.edges = load_string_pairs(edges_tsv);
  if (!synset_lexemes_tsv.empty()) h.synset_lexemes = load_string_pairs(synset_lexemes_tsv);
  return h;
}

SurfaceFormTable load_surface_forms(const std::filesystem::path& tsv) {
  SurfaceFormTable table;
  std::set<std::pair<std::string, std::string>> seen;
  for_each_tsv_row(tsv, 3, [&](const auto& f, std::size_t line_no) {
    const auto count = text::parse_int(f[2]);
    if (!count || *count < 0) {
      throw ParseError(tsv.string(), line_no, "count must be a non-negative integer");
    }
    if (!seen.emplace(std::string(f[0]), std::string(f[1])).second) {
      throw ParseError(tsv.string(), line_no, "duplicate (concept, surface form) pair");
    }
    table.rows.push_back({std::string(f[0]), std::string(f[1]), static_cast<std::uint64_t>(*count)});
  });
  return table;
}

}  // namespace trifuse

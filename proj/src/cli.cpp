#include "trifuse/cli.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trifuse/alignment.hpp"
#include "trifuse/embedding_io.hpp"
#include "trifuse/errors.hpp"
#include "trifuse/evaluation.hpp"
#include "trifuse/fusion.hpp"
#include "trifuse/transe.hpp"
#include "trifuse/tsv.hpp"
#include "trifuse/weight_search.hpp"

namespace trifuse::cli {
namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Accumulates "key=value" pairs into the one-line resolved configuration that
// heads every TSV output and closes every run's stdout.
class ConfigLine {
 public:
  explicit ConfigLine(std::string subcommand) : line_("# trifuse " + std::move(subcommand)) {}

  template <typename T>
  ConfigLine& add(const std::string& key, const T& value) {
    std::ostringstream s;
    s << value;
    line_ += " " + key + "=" + s.str();
    return *this;
  }
  ConfigLine& add_double(const std::string& key, double value) {
    line_ += " " + key + "=" + text::format_double(value);
    return *this;
  }

  const std::string& str() const noexcept { return line_; }

 private:
  std::string line_;
};

std::string weights_string(const ModalityWeights& w) {
  return text::format_double(w.text) + "," + text::format_double(w.kg) + "," +
         text::format_double(w.visual);
}

ModalityWeights parse_weights(const std::string& s) {
  const auto parts = text::split(s, ',');
  if (parts.size() != 3) throw UsageError("--weights expects wT,wG,wV");
  double v[3];
  for (std::size_t i = 0; i < 3; ++i) {
    const auto p = text::parse_double(parts[i]);
    if (!p || !std::isfinite(*p) || *p < 0.0) throw UsageError("--weights: invalid value '" + std::string(parts[i]) + "'");
    v[i] = *p;
  }
  if (v[0] + v[1] + v[2] <= 0.0) throw UsageError("--weights must not all be zero");
  return {v[0], v[1], v[2]};
}

void require_file(const std::string& path, const std::string& flag) {
  if (!fs::is_regular_file(path)) throw UsageError(flag + ": file not found: " + path);
}

struct DatasetSpec {
  std::string name;
  std::string path;
};

DatasetSpec parse_dataset_spec(const std::string& arg) {
  const auto eq = arg.find('=');
  DatasetSpec spec;
  if (eq == std::string::npos) {
    spec.path = arg;
    spec.name = fs::path(arg).stem().string();
  } else {
    spec.name = arg.substr(0, eq);
    spec.path = arg.substr(eq + 1);
  }
  if (spec.name.empty() || spec.path.empty()) throw UsageError("--dataset expects NAME=PATH or PATH");
  require_file(spec.path, "--dataset");
  return spec;
}

// Flags shared by eval and gridsearch.
struct FusionArgs {
  std::string text, kg, visual;
  std::vector<std::string> datasets;
  bool dataset_header = false;
  bool lowercase = false;
  std::string method = "conc";
  int k = kDefaultReducedDim;
  CLI::Option* k_opt = nullptr;
  CLI::Option* method_opt = nullptr;
};

void add_fusion_flags(CLI::App& sub, FusionArgs& a) {
  sub.add_option("--text", a.text, "Text-modality embedding file")->required();
  sub.add_option("--kg", a.kg, "KG-modality embedding file (word level)")->required();
  sub.add_option("--visual", a.visual, "Visual-modality embedding file (word level)")->required();
  sub.add_option("--dataset", a.datasets, "Similarity dataset TSV, NAME=PATH or PATH (repeatable)")
      ->required();
  sub.add_flag("--dataset-header", a.dataset_header, "Skip the first line of each dataset file");
  sub.add_flag("--lowercase", a.lowercase, "Fold embedding tokens to lower case");
  a.method_opt = sub.add_option("--method", a.method, "avg | conc | svd | pca")
                     ->check(CLI::IsMember({"avg", "conc", "svd", "pca"}, CLI::ignore_case));
  a.k_opt = sub.add_option("--k", a.k, "Reduced dimension for svd/pca")->check(CLI::PositiveNumber);
}

struct Inputs {
  AlignedConceptSpace space;
  std::vector<SimilarityDataset> datasets;
};

Inputs load_inputs(const FusionArgs& a, std::ostream& err) {
  for (const auto& [path, flag] : {std::pair{a.text, "--text"}, {a.kg, "--kg"}, {a.visual, "--visual"}}) {
    require_file(path, flag);
  }
  std::vector<DatasetSpec> specs;
  for (const auto& d : a.datasets) specs.push_back(parse_dataset_spec(d));

  auto load = [&](const std::string& path, const char* modality) {
    return load_embeddings_text(path, LoadOptions{a.lowercase, modality});
  };
  auto aligned = build_aligned_space(load(a.text, "text"), load(a.kg, "kg"), load(a.visual, "visual"));
  for (const auto& c : aligned.dropped_zero) {
    err << "warning: dropped concept '" << c << "' with an all-zero vector\n";
  }
  Inputs in{std::move(aligned.space), {}};
  for (const auto& spec : specs) {
    auto full = load_pairs(spec.path, spec.name, a.dataset_header);
    auto subset = restrict_to_vocabulary(full, in.space.concepts);
    if (subset.pairs.size() < 2) {
      err << "warning: dataset '" << spec.name << "' keeps " << subset.pairs.size() << " of "
          << full.pairs.size() << " pairs after restriction; skipped\n";
      continue;
    }
    in.datasets.push_back(std::move(subset));
  }
  if (in.datasets.empty()) throw ValidationError("no dataset has at least two covered pairs");
  return in;
}

void add_inputs_to_config(ConfigLine& cfg, const FusionArgs& a) {
  cfg.add("text", a.text).add("kg", a.kg).add("visual", a.visual);
  std::string ds;
  for (const auto& d : a.datasets) ds += (ds.empty() ? "" : ",") + d;
  cfg.add("datasets", ds).add("dataset_header", a.dataset_header).add("lowercase", a.lowercase);
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << content;
  if (!out.flush()) throw IoError("write to '" + path.string() + "' failed");
}

std::string row_label(const FusionConfig& c) {
  std::string label(method_name(c.method));
  for (auto& ch : label) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  if (c.normalize) label += "-N";
  return label;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  FusionArgs fusion;
  std::string weights = "1,1,1";
  bool normalize = false;
  std::string out;
};

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  FusionConfig config;
  config.method = parse_method(a.fusion.method);
  config.normalize = a.normalize;
  config.weights = parse_weights(a.weights);
  config.k = a.fusion.k;

  ConfigLine cfg("eval");
  cfg.add("method", method_name(config.method)).add("normalize", config.normalize)
      .add("weights", weights_string(config.weights));
  if (config.method == FusionMethod::Svd || config.method == FusionMethod::Pca) cfg.add("k", config.k);
  add_inputs_to_config(cfg, a.fusion);

  const auto in = load_inputs(a.fusion, err);
  const auto report = evaluate_suite(in.space, config, in.datasets);

  std::ostringstream tsv;
  tsv << cfg.str() << '\n';
  tsv << "# concepts=" << in.space.size() << '\n';
  write_report_tsv(report, tsv);
  if (a.out.empty()) {
    out << tsv.str();
  } else {
    write_text_file(a.out, tsv.str());
    write_report_table(report, row_label(config), out);
  }
  out << cfg.str() << '\n';
  return 0;
}

// ---------------------------------------------------------- gridsearch

struct GridArgs {
  FusionArgs fusion;
  double step = 0.05;
  bool no_normalize = false;
  unsigned threads = 0;
  std::string out;
};

int cmd_gridsearch(const GridArgs& a, std::ostream& out, std::ostream& err) {
  FusionConfig config;
  config.method = parse_method(a.fusion.method);
  config.normalize = !a.no_normalize;
  config.k = a.fusion.k;
  std::size_t grid_size = 0;
  try {
    grid_size = enumerate_simplex(a.step).size();
  } catch (const ValidationError& e) {
    throw UsageError(std::string("--step: ") + e.what());
  }

  ConfigLine cfg("gridsearch");
  cfg.add("method", method_name(config.method)).add("normalize", config.normalize)
      .add_double("step", a.step);
  if (config.method == FusionMethod::Svd || config.method == FusionMethod::Pca) cfg.add("k", config.k);
  add_inputs_to_config(cfg, a.fusion);

  const auto in = load_inputs(a.fusion, err);
  const auto result = grid_search(in.space, config, in.datasets, {a.step, a.threads});
  if (result.rank_clamped_points > 0) {
    err << "warning: k clamped to the numerical rank at " << result.rank_clamped_points
        << " grid point(s)\n";
  }
  const std::vector<std::string> preamble{cfg.str()};
  export_heatmap(result, a.out, preamble);

  const auto& b = result.best;
  out << "grid points\t" << grid_size << '\n'
      << "optimum\t" << weights_string(b.weights) << '\t' << text::format_double(b.score) << '\n'
      << cfg.str() << '\n';
  return 0;
}

// --------------------------------------------------------------- align

struct AlignArgs {
  std::string text, kg, surface_forms, visual, images, hierarchy, synset_lexemes, out_dir;
  bool lowercase = false;
};

int cmd_align(const AlignArgs& a, std::ostream& out, std::ostream& err) {
  const bool word_visual = !a.visual.empty();
  const bool image_visual = !a.images.empty();
  if (word_visual == image_visual) throw UsageError("give exactly one of --visual or --images");
  if (image_visual && a.synset_lexemes.empty()) throw UsageError("--images requires --synset-lexemes");
  if (word_visual && (!a.hierarchy.empty() || !a.synset_lexemes.empty())) {
    throw UsageError("--hierarchy/--synset-lexemes only apply with --images");
  }
  for (const auto& [path, flag] :
       {std::pair{a.text, "--text"}, {a.kg, "--kg"}, {a.surface_forms, "--surface-forms"},
        {a.visual, "--visual"}, {a.images, "--images"}, {a.hierarchy, "--hierarchy"},
        {a.synset_lexemes, "--synset-lexemes"}}) {
    if (!path.empty()) require_file(path, flag);
  }

  ConfigLine cfg("align");
  cfg.add("text", a.text).add("kg", a.kg).add("surface_forms", a.surface_forms)
      .add("visual", a.visual).add("images", a.images).add("hierarchy", a.hierarchy)
      .add("synset_lexemes", a.synset_lexemes).add("lowercase", a.lowercase).add("out_dir", a.out_dir);

  std::vector<std::pair<std::string, std::string>> stats;
  const auto text_space = load_embeddings_text(a.text, {a.lowercase, "text"});
  stats.emplace_back("text_tokens", std::to_string(text_space.size()));

  auto kg_space = load_embeddings_text(a.kg, {a.lowercase && a.surface_forms.empty(), "kg"});
  if (!a.surface_forms.empty()) {
    const auto selection = select_surface_forms(kg_space, load_surface_forms(a.surface_forms));
    stats.emplace_back("kg_concepts", std::to_string(kg_space.size()));
    stats.emplace_back("kg_dropped_without_form", std::to_string(selection.dropped_without_form));
    stats.emplace_back("kg_dropped_collisions", std::to_string(selection.dropped_collisions));
    kg_space = selection.words;
  }
  stats.emplace_back("kg_words", std::to_string(kg_space.size()));

  EmbeddingSpace visual_space;
  if (word_visual) {
    visual_space = load_embeddings_text(a.visual, {a.lowercase, "visual"});
  } else {
    auto synsets = pool_image_vectors(group_image_vectors(load_embeddings_text(a.images, {false, "visual"})));
    stats.emplace_back("pooled_synsets", std::to_string(synsets.size()));
    if (!a.hierarchy.empty()) {
      const auto before = synsets.size();
      synsets = abstract_hierarchy(SynsetHierarchy{load_string_pairs(a.hierarchy), {}}, synsets);
      stats.emplace_back("abstracted_synsets", std::to_string(synsets.size() - before));
    }
    const auto projection = project_synsets_to_lexemes(synsets, load_string_pairs(a.synset_lexemes));
    stats.emplace_back("lexemes", std::to_string(projection.lexemes.size()));
    stats.emplace_back("lexemes_dropped", std::to_string(projection.dropped));
    visual_space = projection.lexemes;
  }
  stats.emplace_back("visual_words", std::to_string(visual_space.size()));

  const auto aligned = build_aligned_space(text_space, kg_space, visual_space);
  for (const auto& c : aligned.dropped_zero) {
    err << "warning: dropped concept '" << c << "' with an all-zero vector\n";
  }
  stats.emplace_back("dropped_zero", std::to_string(aligned.dropped_zero.size()));
  stats.emplace_back("concepts", std::to_string(aligned.space.size()));

  fs::create_directories(a.out_dir);
  const fs::path dir(a.out_dir);
  write_embeddings_text(modality_space(aligned.space, Modality::Text), dir / "text.vec");
  write_embeddings_text(modality_space(aligned.space, Modality::Kg), dir / "kg.vec");
  write_embeddings_text(modality_space(aligned.space, Modality::Visual), dir / "visual.vec");

  std::string report = cfg.str() + "\n";
  for (const auto& [k, v] : stats) report += k + "\t" + v + "\n";
  write_text_file(dir / "alignment.tsv", report);
  out << report.substr(report.find('\n') + 1) << cfg.str() << '\n';
  return 0;
}

// --------------------------------------------------------- pool-images

struct PoolArgs {
  std::string images, hierarchy, out;
};

int cmd_pool(const PoolArgs& a, std::ostream& out) {
  require_file(a.images, "--images");
  if (!a.hierarchy.empty()) require_file(a.hierarchy, "--hierarchy");
  ConfigLine cfg("pool-images");
  cfg.add("images", a.images).add("hierarchy", a.hierarchy).add("out", a.out);

  auto synsets = pool_image_vectors(group_image_vectors(load_embeddings_text(a.images, {false, "visual"})));
  const auto pooled = synsets.size();
  if (!a.hierarchy.empty()) {
    synsets = abstract_hierarchy(SynsetHierarchy{load_string_pairs(a.hierarchy), {}}, synsets);
  }
  write_embeddings_text(synsets, a.out);
  out << "pooled_synsets\t" << pooled << '\n'
      << "abstracted_synsets\t" << synsets.size() - pooled << '\n'
      << cfg.str() << '\n';
  return 0;
}

// ---------------------------------------------------------------- stats

int cmd_stats(const std::string& input, bool lowercase, std::ostream& out) {
  require_file(input, "--input");
  ConfigLine cfg("stats");
  cfg.add("input", input).add("lowercase", lowercase);
  const auto s = embedding_stats(load_embeddings_text(input, {lowercase, {}}));
  out << "count\t" << s.count << '\n'
      << "dim\t" << s.dim << '\n'
      << "min_norm\t" << text::format_double(s.min_norm) << '\n'
      << "max_norm\t" << text::format_double(s.max_norm) << '\n'
      << "mean_norm\t" << text::format_double(s.mean_norm) << '\n'
      << cfg.str() << '\n';
  return 0;
}

// --------------------------------------------------------- train-transe

struct TransEArgs {
  std::string triples, constraints, out;
  TransEConfig config;
  std::string distance = "l2";
  bool no_type_constraints = false;
};

int cmd_train_transe(TransEArgs a, std::ostream& out) {
  require_file(a.triples, "--triples");
  if (!a.constraints.empty()) require_file(a.constraints, "--constraints");
  a.config.distance = (a.distance == "l1" || a.distance == "L1") ? Distance::L1 : Distance::L2;
  a.config.type_constraints = !a.no_type_constraints;
  a.config.validate();

  ConfigLine cfg("train-transe");
  cfg.add("triples", a.triples).add("constraints", a.constraints).add("rank", a.config.rank)
      .add_double("gamma", a.config.gamma).add_double("lr_embeddings", a.config.lr_embeddings)
      .add_double("lr_parameters", a.config.lr_parameters).add("epochs", a.config.epochs)
      .add("seed", a.config.seed).add("distance", a.config.distance == Distance::L1 ? "l1" : "l2")
      .add("type_constraints", a.config.type_constraints).add("out", a.out);

  auto loaded = load_triples(a.triples);
  if (!a.constraints.empty()) load_type_constraints(a.constraints, loaded.store);
  TrainingLog log;
  const auto model = transe_train(loaded.store, a.config, &log);
  write_embeddings_text(entity_space(model, loaded.store), a.out);
  const auto lp = link_prediction(model, loaded.store, loaded.store.triples(), 10);

  out << "entities\t" << loaded.store.entities().size() << '\n'
      << "relations\t" << loaded.store.relations().size() << '\n'
      << "triples\t" << loaded.store.triples().size() << '\n'
      << "duplicates_dropped\t" << loaded.duplicates_dropped << '\n'
      << "final_epoch_loss\t" << text::format_double(log.epoch_loss.back()) << '\n'
      << "train_mean_rank\t" << text::format_double(lp.mean_rank) << '\n'
      << "train_hits_at_10\t" << text::format_double(lp.hits_at_k) << '\n'
      << cfg.str() << '\n';
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Align, fuse and evaluate text, knowledge-graph and visual embeddings", "trifuse"};
  app.require_subcommand(1);

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate one fusion configuration");
  add_fusion_flags(*eval_cmd, eval.fusion);
  eval_cmd->add_option("--weights", eval.weights, "Modality weights wT,wG,wV");
  eval_cmd->add_flag("--normalize", eval.normalize, "Unit-normalize each modality's vectors");
  eval_cmd->add_option("--out", eval.out, "Report TSV path (default: stdout)");

  GridArgs grid;
  auto* grid_cmd = app.add_subcommand("gridsearch", "Search modality weights on the simplex");
  add_fusion_flags(*grid_cmd, grid.fusion);
  grid_cmd->add_option("--step", grid.step, "Grid step; 1/step must be an integer");
  grid_cmd->add_flag("--no-normalize", grid.no_normalize, "Skip unit normalization");
  grid_cmd->add_option("--threads", grid.threads, "Worker threads (default: TRIFUSE_THREADS or all cores)");
  grid_cmd->add_option("--out", grid.out, "Heatmap TSV path")->required();

  AlignArgs align;
  auto* align_cmd = app.add_subcommand("align", "Build the aligned tri-modal concept space");
  align_cmd->add_option("--text", align.text, "Text embedding file")->required();
  align_cmd->add_option("--kg", align.kg, "KG embedding file")->required();
  align_cmd->add_option("--surface-forms", align.surface_forms,
                        "concept<TAB>form<TAB>count; maps KG concepts to words");
  align_cmd->add_option("--visual", align.visual, "Word-level visual embedding file");
  align_cmd->add_option("--images", align.images, "Image vectors with synset/image tokens");
  align_cmd->add_option("--hierarchy", align.hierarchy, "child<TAB>parent synset edges");
  align_cmd->add_option("--synset-lexemes", align.synset_lexemes, "synset<TAB>lexeme pairs");
  align_cmd->add_option("--out-dir", align.out_dir, "Output directory")->required();
  align_cmd->add_flag("--lowercase", align.lowercase, "Fold word tokens to lower case");

  PoolArgs pool;
  auto* pool_cmd = app.add_subcommand("pool-images", "Max-pool image vectors per synset");
  pool_cmd->add_option("--images", pool.images, "Image vectors with synset/image tokens")->required();
  pool_cmd->add_option("--hierarchy", pool.hierarchy, "child<TAB>parent edges for abstraction");
  pool_cmd->add_option("--out", pool.out, "Output embedding file")->required();

  std::string stats_input;
  bool stats_lowercase = false;
  auto* stats_cmd = app.add_subcommand("stats", "Summarize an embedding file");
  stats_cmd->add_option("--input", stats_input, "Embedding file")->required();
  stats_cmd->add_flag("--lowercase", stats_lowercase, "Fold tokens to lower case");

  TransEArgs transe;
  auto* transe_cmd = app.add_subcommand("train-transe", "Train TransE entity embeddings");
  transe_cmd->add_option("--triples", transe.triples, "head<TAB>relation<TAB>tail")->required();
  transe_cmd->add_option("--constraints", transe.constraints, "relation<TAB>domain|range<TAB>entity");
  transe_cmd->add_option("--rank", transe.config.rank)->check(CLI::PositiveNumber);
  transe_cmd->add_option("--gamma", transe.config.gamma)->check(CLI::PositiveNumber);
  transe_cmd->add_option("--lr-embeddings", transe.config.lr_embeddings)->check(CLI::PositiveNumber);
  transe_cmd->add_option("--lr-parameters", transe.config.lr_parameters)->check(CLI::PositiveNumber);
  transe_cmd->add_option("--epochs", transe.config.epochs)->check(CLI::PositiveNumber);
  transe_cmd->add_option("--seed", transe.config.seed);
  transe_cmd->add_option("--distance", transe.distance)
      ->check(CLI::IsMember({"l1", "l2"}, CLI::ignore_case));
  transe_cmd->add_flag("--no-type-constraints", transe.no_type_constraints,
                       "Corrupt with any entity instead of the relation's observed domain/range");
  transe_cmd->add_option("--out", transe.out, "Entity embedding output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  try {
    for (auto* fusion_cmd : {eval_cmd, grid_cmd}) {
      if (!fusion_cmd->parsed()) continue;
      auto& fa = fusion_cmd == eval_cmd ? eval.fusion : grid.fusion;
      for (auto& c : fa.method) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      const bool reduces = fa.method == "svd" || fa.method == "pca";
      if (fa.k_opt->count() > 0 && !reduces) {
        throw UsageError("--k only applies to --method svd or pca");
      }
    }
    if (eval_cmd->parsed()) return cmd_eval(eval, out, err);
    if (grid_cmd->parsed()) return cmd_gridsearch(grid, out, err);
    if (align_cmd->parsed()) return cmd_align(align, out, err);
    if (pool_cmd->parsed()) return cmd_pool(pool, out);
    if (stats_cmd->parsed()) return cmd_stats(stats_input, stats_lowercase, out);
    if (transe_cmd->parsed()) return cmd_train_transe(transe, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace trifuse::cli

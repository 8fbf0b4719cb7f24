#include "trifuse/transe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "trifuse/errors.hpp"
#include "trifuse/tsv.hpp"

namespace trifuse {

std::size_t TripleStore::entity_id(const std::string& name) {
  auto [it, inserted] = entity_index_.emplace(name, entities_.size());
  if (inserted) entities_.push_back(name);
  return it->second;
}

std::size_t TripleStore::relation_id(const std::string& name) {
  auto [it, inserted] = relation_index_.emplace(name, relations_.size());
  if (inserted) relations_.push_back(name);
  return it->second;
}

std::optional<std::size_t> TripleStore::find_entity(const std::string& name) const {
  const auto it = entity_index_.find(name);
  if (it == entity_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> TripleStore::find_relation(const std::string& name) const {
  const auto it = relation_index_.find(name);
  if (it == relation_index_.end()) return std::nullopt;
  return it->second;
}

bool TripleStore::add(const Triple& t) {
  if (t.head >= entities_.size() || t.tail >= entities_.size() || t.relation >= relations_.size()) {
    throw ValidationError("triple index out of range");
  }
  if (!triple_set_.insert(t).second) return false;
  triples_.push_back(t);
  return true;
}

bool TripleStore::contains(const Triple& t) const { return triple_set_.count(t) > 0; }

void TripleStore::constrain_head(std::size_t relation, std::size_t entity) {
  auto& v = domain_[relation];
  if (std::find(v.begin(), v.end(), entity) == v.end()) v.push_back(entity);
}

void TripleStore::constrain_tail(std::size_t relation, std::size_t entity) {
  auto& v = range_[relation];
  if (std::find(v.begin(), v.end(), entity) == v.end()) v.push_back(entity);
}

bool TripleStore::has_constraints(std::size_t relation) const {
  return domain_.count(relation) || range_.count(relation);
}

namespace {

std::vector<std::size_t> all_entities(std::size_t n) {
  std::vector<std::size_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = i;
  return out;
}

}  // namespace

std::vector<std::size_t> TripleStore::head_candidates(std::size_t relation,
                                                      bool type_constrained) const {
  if (!type_constrained) return all_entities(entities_.size());
  if (const auto it = domain_.find(relation); it != domain_.end()) {
    auto out = it->second;
    std::sort(out.begin(), out.end());
    return out;
  }
  if (has_constraints(relation)) return all_entities(entities_.size());
  std::set<std::size_t> seen;
  for (const auto& t : triples_) {
    if (t.relation == relation) seen.insert(t.head);
  }
  return {seen.begin(), seen.end()};
}

std::vector<std::size_t> TripleStore::tail_candidates(std::size_t relation,
                                                      bool type_constrained) const {
  if (!type_constrained) return all_entities(entities_.size());
  if (const auto it = range_.find(relation); it != range_.end()) {
    auto out = it->second;
    std::sort(out.begin(), out.end());
    return out;
  }
  if (has_constraints(relation)) return all_entities(entities_.size());
  std::set<std::size_t> seen;
  for (const auto& t : triples_) {
    if (t.relation == relation) seen.insert(t.tail);
  }
  return {seen.begin(), seen.end()};
}

namespace {

template <typename RowFn>
void for_each_row(const std::filesystem::path& path, RowFn&& fn) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = text::trim_eol(raw);
    if (line.empty()) continue;
    const auto f = text::split(line, '\t');
    if (f.size() != 3 || f[0].empty() || f[1].empty() || f[2].empty()) {
      throw ParseError(path.string(), line_no, "expected three non-empty tab-separated fields");
    }
    fn(std::string(f[0]), std::string(f[1]), std::string(f[2]), line_no);
  }
}

}  // namespace

LoadedTriples load_triples(const std::filesystem::path& path) {
  LoadedTriples out;
  for_each_row(path, [&](const std::string& h, const std::string& r, const std::string& t,
                         std::size_t) {
    // Preserve first-occurrence order: head, then tail, for entities.
    const auto hi = out.store.entity_id(h);
    const auto ri = out.store.relation_id(r);
    const auto ti = out.store.entity_id(t);
    if (!out.store.add({hi, ri, ti})) ++out.duplicates_dropped;
  });
  return out;
}

void load_type_constraints(const std::filesystem::path& path, TripleStore& store) {
  for_each_row(path, [&](const std::string& rel, const std::string& kind, const std::string& ent,
                         std::size_t line_no) {
    const auto r = store.relation_id(rel);
    const auto e = store.entity_id(ent);
    if (kind == "domain") {
      store.constrain_head(r, e);
    } else if (kind == "range") {
      store.constrain_tail(r, e);
    } else {
      throw ParseError(path.string(), line_no, "second field must be 'domain' or 'range'");
    }
  });
}

void TransEConfig::validate() const {
  if (rank < 1) throw ValidationError("TransE rank must be positive");
  if (!(gamma > 0.0)) throw ValidationError("TransE margin gamma must be positive");
  if (!(lr_embeddings > 0.0) || !(lr_parameters > 0.0)) {
    throw ValidationError("TransE learning rates must be positive");
  }
  if (epochs < 1) throw ValidationError("TransE epochs must be positive");
}

namespace {

double distance(const Eigen::Ref<const Eigen::VectorXd>& x, Distance d) {
  return d == Distance::L1 ? x.lpNorm<1>() : x.norm();
}

// Subgradient of the distance at x.
Eigen::VectorXd distance_gradient(const Eigen::VectorXd& x, Distance d) {
  if (d == Distance::L1) {
    return x.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
  }
  const double n = x.norm();
  if (n == 0.0) return Eigen::VectorXd::Zero(x.size());
  return x / n;
}

Eigen::VectorXd translation(const TransEModel& m, std::size_t h, std::size_t r, std::size_t t) {
  return m.entity_vectors.row(static_cast<Eigen::Index>(h)).transpose() +
         m.relation_vectors.row(static_cast<Eigen::Index>(r)).transpose() -
         m.entity_vectors.row(static_cast<Eigen::Index>(t)).transpose();
}

}  // namespace

double transe_score(const TransEModel& model, std::size_t head, std::size_t relation,
                    std::size_t tail) {
  return distance(translation(model, head, relation, tail), model.distance);
}

MarginGradient margin_loss_gradient(const TransEModel& model, const Triple& positive,
                                    const Triple& negative, double gamma) {
  const auto rank = model.entity_vectors.cols();
  const Eigen::VectorXd x = translation(model, positive.head, positive.relation, positive.tail);
  const Eigen::VectorXd xn = translation(model, negative.head, negative.relation, negative.tail);
  MarginGradient g;
  g.loss = gamma + distance(x, model.distance) - distance(xn, model.distance);
  if (g.loss <= 0.0) {
    g.loss = 0.0;
    g.head = g.relation = g.tail = g.neg_head = g.neg_tail = Eigen::VectorXd::Zero(rank);
    return g;
  }
  const Eigen::VectorXd gp = distance_gradient(x, model.distance);
  const Eigen::VectorXd gn = distance_gradient(xn, model.distance);
  g.head = gp;
  g.tail = -gp;
  g.relation = gp - gn;
  g.neg_head = -gn;
  g.neg_tail = gn;
  return g;
}

namespace {

class CorruptionSampler {
 public:
  CorruptionSampler(const TripleStore& store, bool type_constrained) : store_(store) {
    const auto nr = store.relations().size();
    heads_.resize(nr);
    tails_.resize(nr);
    std::vector<char> used(nr, 0);
    for (const auto& t : store.triples()) used[t.relation] = 1;
    for (std::size_t r = 0; r < nr; ++r) {
      if (!used[r]) continue;
      heads_[r] = store.head_candidates(r, type_constrained);
      tails_[r] = store.tail_candidates(r, type_constrained);
      if (heads_[r].empty() || tails_[r].empty()) {
        throw ValidationError("relation '" + store.relations()[r] +
                              "' has an empty candidate set for corruption");
      }
    }
  }

  Triple sample(const Triple& t, std::mt19937_64& rng) const {
    const bool head_first = (rng() & 1u) == 0u;
    for (const bool corrupt_head : {head_first, !head_first}) {
      if (auto c = sample_side(t, corrupt_head, rng)) return *c;
    }
    throw ValidationError("relation '" + store_.relations()[t.relation] +
                          "': no unobserved corruption exists for a training triple");
  }

 private:
  std::optional<Triple> sample_side(const Triple& t, bool corrupt_head, std::mt19937_64& rng) const {
    const auto& cands = corrupt_head ? heads_[t.relation] : tails_[t.relation];
    auto make = [&](std::size_t e) {
      Triple c = t;
      (corrupt_head ? c.head : c.tail) = e;
      return c;
    };
    std::uniform_int_distribution<std::size_t> pick(0, cands.size() - 1);
    for (int attempt = 0; attempt < 32; ++attempt) {
      const auto c = make(cands[pick(rng)]);
      if (!store_.contains(c)) return c;
    }
    std::vector<std::size_t> valid;
    for (const auto e : cands) {
      if (!store_.contains(make(e))) valid.push_back(e);
    }
    if (valid.empty()) return std::nullopt;
    std::uniform_int_distribution<std::size_t> pick_valid(0, valid.size() - 1);
    return make(valid[pick_valid(rng)]);
  }

  const TripleStore& store_;
  std::vector<std::vector<std::size_t>> heads_, tails_;
};

void project_to_unit_ball(Eigen::MatrixXd& rows) {
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const double n = rows.row(i).norm();
    if (n > 1.0) rows.row(i) /= n;
  }
}

}  // namespace

TransEModel transe_train(const TripleStore& store, const TransEConfig& config, TrainingLog* log) {
  config.validate();
  if (store.triples().empty()) throw ValidationError("cannot train TransE on an empty triple store");
  const CorruptionSampler sampler(store, config.type_constraints);

  std::mt19937_64 rng(config.seed);
  const double bound = 6.0 / std::sqrt(static_cast<double>(config.rank));
  std::uniform_real_distribution<double> init(-bound, bound);
  TransEModel model;
  model.distance = config.distance;
  model.entity_vectors = Eigen::MatrixXd::NullaryExpr(
      static_cast<Eigen::Index>(store.entities().size()), config.rank, [&] { return init(rng); });
  model.relation_vectors = Eigen::MatrixXd::NullaryExpr(
      static_cast<Eigen::Index>(store.relations().size()), config.rank, [&] { return init(rng); });
  model.relation_vectors.rowwise().normalize();
  model.entity_vectors.rowwise().normalize();

  std::vector<std::size_t> order(store.triples().size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto& E = model.entity_vectors;
  auto& R = model.relation_vectors;
  const double lr_e = config.lr_embeddings;
  const double lr_r = config.lr_parameters;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (const auto idx : order) {
      const auto& pos = store.triples()[idx];
      const auto neg = sampler.sample(pos, rng);
      if (log && log->record_negatives) log->negatives.push_back(neg);
      const auto g = margin_loss_gradient(model, pos, neg, config.gamma);
      total += g.loss;
      if (g.loss <= 0.0) continue;
      E.row(static_cast<Eigen::Index>(pos.head)) -= lr_e * g.head.transpose();
      E.row(static_cast<Eigen::Index>(pos.tail)) -= lr_e * g.tail.transpose();
      E.row(static_cast<Eigen::Index>(neg.head)) -= lr_e * g.neg_head.transpose();
      E.row(static_cast<Eigen::Index>(neg.tail)) -= lr_e * g.neg_tail.transpose();
      R.row(static_cast<Eigen::Index>(pos.relation)) -= lr_r * g.relation.transpose();
    }
    project_to_unit_ball(E);
    if (log) log->epoch_loss.push_back(total / static_cast<double>(order.size()));
  }
  return model;
}

std::size_t rank_entities(const TransEModel& model, const TripleStore& store, const Triple& triple,
                          Side side, bool filtered) {
  const double truth = transe_score(model, triple.head, triple.relation, triple.tail);
  const std::size_t true_entity = side == Side::Head ? triple.head : triple.tail;
  std::size_t rank = 1;
  for (std::size_t e = 0; e < store.entities().size(); ++e) {
    if (e == true_entity) continue;
    Triple c = triple;
    (side == Side::Head ? c.head : c.tail) = e;
    if (filtered && store.contains(c)) continue;
    const double s = transe_score(model, c.head, c.relation, c.tail);
    if (s < truth || (s == truth && e < true_entity)) ++rank;
  }
  return rank;
}

LinkPredictionSummary link_prediction(const TransEModel& model, const TripleStore& store,
                                      const std::vector<Triple>& triples, int k) {
  LinkPredictionSummary out;
  out.k = k;
  if (triples.empty()) return out;
  double rank_sum = 0.0;
  std::size_t hits = 0;
  for (const auto& t : triples) {
    for (const auto side : {Side::Head, Side::Tail}) {
      const auto r = rank_entities(model, store, t, side);
      rank_sum += static_cast<double>(r);
      if (r <= static_cast<std::size_t>(k)) ++hits;
    }
  }
  const double n = 2.0 * static_cast<double>(triples.size());
  out.mean_rank = rank_sum / n;
  out.hits_at_k = static_cast<double>(hits) / n;
  return out;
}

EmbeddingSpace entity_space(const TransEModel& model, const TripleStore& store) {
  return EmbeddingSpace(store.entities(), model.entity_vectors, "kg");
}

}  // namespace trifuse

#include "trifuse/fusion.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "trifuse/errors.hpp"

namespace trifuse {

std::string_view method_name(FusionMethod m) noexcept {
  switch (m) {
    case FusionMethod::Avg: return "avg";
    case FusionMethod::Conc: return "conc";
    case FusionMethod::Svd: return "svd";
    case FusionMethod::Pca: return "pca";
  }
  return "?";
}

FusionMethod parse_method(std::string_view name) {
  std::string lower(name);
  for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (const auto m : {FusionMethod::Avg, FusionMethod::Conc, FusionMethod::Svd, FusionMethod::Pca}) {
    if (lower == method_name(m)) return m;
  }
  throw ValidationError("unknown fusion method '" + std::string(name) + "'");
}

double ModalityWeights::operator[](Modality m) const noexcept {
  switch (m) {
    case Modality::Text: return text;
    case Modality::Kg: return kg;
    case Modality::Visual: return visual;
  }
  return 0.0;
}

void FusionConfig::validate() const {
  for (const double w : {weights.text, weights.kg, weights.visual}) {
    if (!std::isfinite(w) || w < 0.0) {
      throw ValidationError("modality weights must be finite and non-negative");
    }
  }
  if (weights.sum() <= 0.0) throw ValidationError("modality weights must not all be zero");
  if (k < 1) throw ValidationError("reduced dimension k must be positive");
}

Eigen::MatrixXd normalize_unit_columns(const Eigen::MatrixXd& m, std::span<const std::string> names) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double norm = m.col(j).norm();
    if (norm == 0.0) {
      const auto label = static_cast<std::size_t>(j) < names.size()
                             ? "'" + names[static_cast<std::size_t>(j)] + "'"
                             : "column " + std::to_string(j);
      throw ValidationError("cannot normalize all-zero vector of " + label);
    }
    out.col(j) = m.col(j) / norm;
  }
  return out;
}

Eigen::MatrixXd scale_and_stack(const Eigen::MatrixXd& text, const Eigen::MatrixXd& kg,
                                const Eigen::MatrixXd& visual, const ModalityWeights& weights) {
  if (text.cols() != kg.cols() || text.cols() != visual.cols()) {
    throw ValidationError("cannot stack matrices with differing column counts (" +
                          std::to_string(text.cols()) + ", " + std::to_string(kg.cols()) + ", " +
                          std::to_string(visual.cols()) + ")");
  }
  Eigen::MatrixXd m(text.rows() + kg.rows() + visual.rows(), text.cols());
  m.topRows(text.rows()) = weights.text * text;
  m.middleRows(text.rows(), kg.rows()) = weights.kg * kg;
  m.bottomRows(visual.rows()) = weights.visual * visual;
  return m;
}

namespace {

double clamp_unit(double c) { return std::clamp(c, -1.0, 1.0); }

}  // namespace

double cosine_similarity(const Eigen::Ref<const Eigen::VectorXd>& u,
                         const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (u.size() != v.size()) throw ValidationError("cosine of vectors with different lengths");
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) throw ValidationError("cosine similarity of a zero vector");
  return clamp_unit(u.dot(v) / (nu * nv));
}

double avg_similarity(const AlignedConceptSpace& space, const ModalityWeights& weights,
                      std::size_t i, std::size_t j) {
  const auto a = static_cast<Eigen::Index>(i);
  const auto b = static_cast<Eigen::Index>(j);
  double acc = 0.0;
  for (const auto m : {Modality::Text, Modality::Kg, Modality::Visual}) {
    const double w = weights[m];
    if (w == 0.0) continue;
    const auto& mat = space.matrix(m);
    acc += w * cosine_similarity(mat.col(a), mat.col(b));
  }
  return acc / weights.sum();
}

namespace {

void fix_signs(Eigen::MatrixXd& u, Eigen::Index k) {
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::Index arg = 0;
    u.col(c).cwiseAbs().maxCoeff(&arg);
    if (u(arg, c) < 0.0) u.col(c) = -u.col(c);
  }
}

void check_k(const Eigen::MatrixXd& m, int k) {
  const auto limit = std::min(m.rows(), m.cols());
  if (k < 1 || k > limit) {
    throw ValidationError("reduced dimension k=" + std::to_string(k) + " outside [1, " +
                          std::to_string(limit) + "]");
  }
}

}  // namespace

Reduction svd_reduce(const Eigen::MatrixXd& m, int k) {
  check_k(m, k);
  const Eigen::MatrixXd x = m.transpose();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success || !svd.singularValues().allFinite()) {
    throw NumericalError("singular value decomposition did not converge");
  }
  Eigen::MatrixXd u = svd.matrixU().leftCols(k);
  fix_signs(u, k);

  Reduction out;
  out.singular_values = svd.singularValues();
  const double top = out.singular_values.size() ? out.singular_values(0) : 0.0;
  const double tol = static_cast<double>(std::max(x.rows(), x.cols())) *
                     std::numeric_limits<double>::epsilon() * top;
  out.effective_rank = (out.singular_values.array() > tol).count();
  out.scores = (u * out.singular_values.head(k).asDiagonal()).transpose();
  return out;
}

Reduction pca_reduce(const Eigen::MatrixXd& m, int k) {
  check_k(m, k);
  const Eigen::MatrixXd centred = m.colwise() - m.rowwise().mean();
  return svd_reduce(centred, k);
}

FusedSpace::FusedSpace(std::vector<std::string> concepts, PerModality rep)
    : concepts_(std::move(concepts)), rep_(std::move(rep)) {
  const auto& p = std::get<PerModality>(rep_);
  for (const auto* mat : {&p.text, &p.kg, &p.visual}) {
    inv_norms_.push_back(mat->colwise().norm().cwiseInverse().transpose());
  }
}

FusedSpace::FusedSpace(std::vector<std::string> concepts, Joint rep)
    : concepts_(std::move(concepts)), rep_(std::move(rep)) {
  const auto& j = std::get<Joint>(rep_);
  if (!j.matrix.allFinite()) throw NumericalError("fused representation has non-finite entries");
  inv_norms_.push_back(j.matrix.colwise().norm().cwiseInverse().transpose());
}

Eigen::Index FusedSpace::dimension() const noexcept {
  if (const auto* j = std::get_if<Joint>(&rep_)) return j->matrix.rows();
  const auto& p = std::get<PerModality>(rep_);
  return p.text.rows() + p.kg.rows() + p.visual.rows();
}

double FusedSpace::similarity(std::size_t i, std::size_t j) const {
  const auto a = static_cast<Eigen::Index>(i);
  const auto b = static_cast<Eigen::Index>(j);
  auto block_cosine = [&](const Eigen::MatrixXd& mat, const Eigen::VectorXd& inv) {
    const double scale = inv(a) * inv(b);
    if (!std::isfinite(scale)) {
      throw ValidationError("similarity undefined: zero vector for '" +
                            concepts_[std::isfinite(inv(a)) ? j : i] + "'");
    }
    return clamp_unit(mat.col(a).dot(mat.col(b)) * scale);
  };
  if (const auto* joint = std::get_if<Joint>(&rep_)) {
    return block_cosine(joint->matrix, inv_norms_[0]);
  }
  const auto& p = std::get<PerModality>(rep_);
  double acc = 0.0;
  if (p.weights.text != 0.0) acc += p.weights.text * block_cosine(p.text, inv_norms_[0]);
  if (p.weights.kg != 0.0) acc += p.weights.kg * block_cosine(p.kg, inv_norms_[1]);
  if (p.weights.visual != 0.0) acc += p.weights.visual * block_cosine(p.visual, inv_norms_[2]);
  return acc / p.weights.sum();
}

namespace {

struct Blocks {
  Eigen::MatrixXd text, kg, visual;
};

Blocks prepared_blocks(const AlignedConceptSpace& space, bool normalize) {
  if (!normalize) return {space.text, space.kg, space.visual};
  return {normalize_unit_columns(space.text, space.concepts),
          normalize_unit_columns(space.kg, space.concepts),
          normalize_unit_columns(space.visual, space.concepts)};
}

}  // namespace

FusedSpace conc_representation(const AlignedConceptSpace& space, const ModalityWeights& weights,
                               bool normalize) {
  auto b = prepared_blocks(space, normalize);
  return FusedSpace(space.concepts, FusedSpace::Joint{scale_and_stack(b.text, b.kg, b.visual, weights)});
}

FusedSpace fuse(const AlignedConceptSpace& space, const FusionConfig& config, RankPolicy policy) {
  config.validate();
  space.validate();
  auto blocks = prepared_blocks(space, config.normalize);

  if (config.method == FusionMethod::Avg) {
    return FusedSpace(space.concepts,
                      FusedSpace::PerModality{std::move(blocks.text), std::move(blocks.kg),
                                              std::move(blocks.visual), config.weights});
  }
  Eigen::MatrixXd stacked = scale_and_stack(blocks.text, blocks.kg, blocks.visual, config.weights);
  if (config.method == FusionMethod::Conc) {
    return FusedSpace(space.concepts, FusedSpace::Joint{std::move(stacked)});
  }

  auto reduction = config.method == FusionMethod::Svd ? svd_reduce(stacked, config.k)
                                                      : pca_reduce(stacked, config.k);
  bool clamped = false;
  if (policy == RankPolicy::Clamp && reduction.effective_rank < config.k) {
    const auto keep = std::max<Eigen::Index>(1, reduction.effective_rank);
    reduction.scores.conservativeResize(keep, Eigen::NoChange);
    clamped = true;
  }
  FusedSpace fused(space.concepts, FusedSpace::Joint{std::move(reduction.scores)});
  fused.set_rank_clamped(clamped);
  return fused;
}

}  // namespace trifuse

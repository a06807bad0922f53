#include "rsdesign/criteria.hpp"

#include <algorithm>
#include <stdexcept>

namespace rsd {

std::string_view family_name(Family f) {
  switch (f) {
  case Family::mse_d:
    return "MSE.D";
  case Family::mse_p:
    return "MSE.P";
  case Family::mse_l:
    return "MSE.L";
  }
  return "?";
}

Family parse_family(std::string_view name) {
  if (name == "MSE.D")
    return Family::mse_d;
  if (name == "MSE.P")
    return Family::mse_p;
  if (name == "MSE.L")
    return Family::mse_l;
  throw std::invalid_argument("criterion must be one of MSE.D, MSE.P, MSE.L (got '" +
                              std::string(name) + "')");
}

void CriterionConfig::validate() const {
  for (double k : {kappa.primary, kappa.lof, kappa.mse})
    if (!(k >= 0.0) || !std::isfinite(k))
      throw std::invalid_argument("kappa: weights must be non-negative");
  if (std::abs(kappa.primary + kappa.lof + kappa.mse - 1.0) > 1e-12)
    throw std::invalid_argument("kappa: weights must sum to 1");
  if (!(tau2 > 0.0) || !std::isfinite(tau2))
    throw std::invalid_argument("tau2: must be positive");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("alpha: must lie in (0, 1)");
  if (!(alpha_lof > 0.0 && alpha_lof < 1.0))
    throw std::invalid_argument("alpha_lof: must lie in (0, 1)");
  if (mc_samples < 1)
    throw std::invalid_argument("mc_samples: must be at least 1");
}

void ExperimentSpec::validate() const {
  criterion.validate();
  if (grid.factors() < 1)
    throw std::invalid_argument("factors: at least one factor is required");
  if (primary.empty())
    throw std::invalid_argument("primary: the primary model needs at least one term");
  for (const TermSet *set : {&primary, &potential})
    for (const auto &t : set->terms())
      if (static_cast<int>(t.exponents.size()) != grid.factors())
        throw std::invalid_argument("term " + t.name() + " does not match the factor count");
  require_disjoint(primary, potential);
  if (runs < p() + 1)
    throw std::invalid_argument("runs: need at least p + 1 = " + std::to_string(p() + 1) +
                                " runs to estimate the primary model");
}

// ---------------------------------------------------------------------------

double phi_ds(const Matrix &info) {
  const auto f = SpdFactor::factor(info);
  return f ? std::exp(-f->log_det()) : kInf;
}

double phi_l(const Matrix &info, const Vector &weights) {
  const auto f = SpdFactor::factor(info);
  return f ? weights.dot(f->inverse_diagonal()) : kInf;
}

double phi_dp(double phi_ds_value, int p, int pe_df, double alpha) {
  if (pe_df <= 0 || !std::isfinite(phi_ds_value))
    return kInf;
  return std::pow(f_quantile(p, pe_df, 1.0 - alpha), p) * phi_ds_value;
}

double phi_lp(double phi_l_value, int pe_df, double alpha) {
  if (pe_df <= 0 || !std::isfinite(phi_l_value))
    return kInf;
  return f_quantile(1, pe_df, 1.0 - alpha) * phi_l_value;
}

CenteredBlocks centered_blocks(const Matrix &x1, const Matrix &x2) {
  return {centered_info(x1), centered_cross(x1, x2), centered_info(x2)};
}

CenteredBlocks centered_blocks_from_gram(const Matrix &gram, int p, int q) {
  const double n = gram(0, 0);
  const Vector s1 = gram.block(1, 0, p, 1);
  const Vector s2 = gram.block(1 + p, 0, q, 1);
  CenteredBlocks b{gram.block(1, 1, p, p) - s1 * s1.transpose() / n,
                   gram.block(1, 1 + p, p, q) - s1 * s2.transpose() / n,
                   gram.block(1 + p, 1 + p, q, q) - s2 * s2.transpose() / n};
  b.info = 0.5 * (b.info + b.info.transpose()).eval();
  b.potential = 0.5 * (b.potential + b.potential.transpose()).eval();
  return b;
}

namespace {

// L^-1 * cross, so that C = W^T W and R = potential - W^T W.
Matrix whitened_cross(const SpdFactor &info, const Matrix &cross) {
  return info.lower().triangularView<Eigen::Lower>().solve(cross);
}

Matrix residual_from(const CenteredBlocks &b, const Matrix &w) {
  Matrix r = b.potential - w.transpose() * w;
  return 0.5 * (r + r.transpose());
}

double mean_log1p_quadratic(const Matrix &w, const Matrix &draws) {
  if (draws.rows() == 0)
    return 0.0;
  const Matrix proj = draws * w.transpose(); // B x p
  double acc = 0.0;
  for (Eigen::Index b = 0; b < proj.rows(); ++b)
    acc += std::log1p(proj.row(b).squaredNorm());
  return acc / static_cast<double>(proj.rows());
}

Matrix shifted(const Matrix &r, double tau2) {
  return r + Matrix::Identity(r.rows(), r.cols()) / tau2;
}

} // namespace

std::optional<Matrix> residual_potential_gram(const Matrix &x1, const Matrix &x2) {
  const CenteredBlocks b = centered_blocks(x1, x2);
  const auto f = SpdFactor::factor(b.info);
  if (!f)
    return std::nullopt;
  return residual_from(b, whitened_cross(*f, b.cross));
}

double phi_lof_dp(const Matrix &resid, int pe_df, double alpha_lof, double tau2) {
  const auto q = static_cast<int>(resid.rows());
  if (q == 0)
    return 1.0;
  if (pe_df <= 0)
    return kInf;
  const auto f = SpdFactor::factor(shifted(resid, tau2));
  if (!f)
    return kInf;
  return std::exp(q * std::log(f_quantile(q, pe_df, 1.0 - alpha_lof)) - f->log_det());
}

double phi_lof_lp(const Matrix &resid, const Vector &weights, int pe_df, double alpha_lof,
                  double tau2) {
  if (resid.rows() == 0)
    return 1.0;
  if (pe_df <= 0)
    return kInf;
  const auto f = SpdFactor::factor(shifted(resid, tau2));
  if (!f)
    return kInf;
  return f_quantile(1, pe_df, 1.0 - alpha_lof) * weights.dot(f->inverse_diagonal());
}

std::optional<Matrix> alias_matrix(const Matrix &x1, const Matrix &x2) {
  const auto f = SpdFactor::factor(centered_info(x1));
  if (!f)
    return std::nullopt;
  return f->solve(centered_cross(x1, x2));
}

double phi_mse_d_mc(const Matrix &info, const Matrix &x1, const Matrix &x2,
                    const PriorSample &prior) {
  const auto f = SpdFactor::factor(info);
  if (!f)
    return kInf;
  const Matrix w = whitened_cross(*f, centered_cross(x1, x2));
  return std::exp(-f->log_det() + mean_log1p_quadratic(w, prior.draws));
}

double phi_mse_d_point(const Matrix &info, const Matrix &x1, const Matrix &x2, double tau2) {
  const auto f = SpdFactor::factor(info);
  if (!f)
    return kInf;
  const Matrix w = whitened_cross(*f, centered_cross(x1, x2));
  const double bias = w.rows() && w.cols() ? w.rowwise().sum().squaredNorm() : 0.0;
  return std::exp(-f->log_det() + std::log1p(tau2 * bias));
}

double phi_mse_l(const Matrix &info, const Matrix &x1, const Matrix &x2, const Vector &weights,
                 double tau2) {
  const auto f = SpdFactor::factor(info);
  if (!f)
    return kInf;
  const Matrix alias = f->solve(centered_cross(x1, x2));
  return weights.dot(f->inverse_diagonal()) +
         tau2 * weights.dot(alias.rowwise().squaredNorm());
}

// ---------------------------------------------------------------------------

CompoundEvaluator::CompoundEvaluator(const ExperimentSpec &spec, PriorSample prior)
    : spec_(spec), prior_(std::move(prior)), primary_weights_(spec.primary.weights()),
      potential_weights_(spec.potential.weights()) {
  spec_.validate();
  if (spec_.criterion.family == Family::mse_d && prior_.dim() != spec_.q())
    throw std::invalid_argument("prior sample dimension does not match the potential terms");
  const bool det = is_determinant(spec_.criterion.family);
  const int n = spec_.runs;
  log_f_primary_.assign(static_cast<std::size_t>(n) + 1, kInf);
  log_f_lof_.assign(static_cast<std::size_t>(n) + 1, kInf);
  for (int d = 1; d <= n; ++d) {
    log_f_primary_[static_cast<std::size_t>(d)] =
        std::log(f_quantile(det ? spec_.p() : 1, d, 1.0 - spec_.criterion.alpha));
    if (spec_.q() > 0)
      log_f_lof_[static_cast<std::size_t>(d)] =
          std::log(f_quantile(det ? spec_.q() : 1, d, 1.0 - spec_.criterion.alpha_lof));
  }
}

double CompoundEvaluator::log_quantile(const std::vector<double> &table, int pe_df) const {
  if (pe_df <= 0 || pe_df >= static_cast<int>(table.size()))
    return kInf;
  return table[static_cast<std::size_t>(pe_df)];
}

CriterionBreakdown CompoundEvaluator::evaluate(const Design &design, bool all_components) const {
  const auto mm = model_matrices(design, spec_.primary, spec_.potential, spec_.grid);
  const auto rep = replication_summary(design, spec_.grid, spec_.p());
  return evaluate(centered_blocks(mm.primary, mm.potential), rep.treatments, all_components);
}

CriterionBreakdown CompoundEvaluator::evaluate(const CenteredBlocks &blocks, int treatments,
                                               bool all_components) const {
  const auto &cfg = spec_.criterion;
  const int p = spec_.p(), q = spec_.q();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  CriterionBreakdown out;
  out.family = cfg.family;
  out.treatments = treatments;
  out.pe_df = spec_.runs - treatments;
  out.lof_df = std::max(treatments - p - 1, 0);

  const bool want_primary = all_components || cfg.kappa.primary > 0.0;
  const bool want_lof = all_components || cfg.kappa.lof > 0.0;
  const bool want_mse = all_components || cfg.kappa.mse > 0.0;

  // log values; +inf marks failure, NaN marks "not evaluated"
  double l_base = kInf, l_primary = want_primary ? kInf : nan, l_lof = want_lof ? kInf : nan,
         l_mse = want_mse ? kInf : nan;

  const auto info = SpdFactor::factor(blocks.info);
  if (info) {
    const Matrix w = q > 0 ? whitened_cross(*info, blocks.cross) : Matrix(p, 0);
    const double log_pe_primary = log_quantile(log_f_primary_, out.pe_df);
    const double log_pe_lof = log_quantile(log_f_lof_, out.pe_df);

    if (is_determinant(cfg.family)) {
      const double log_det_info = info->log_det();
      l_base = -log_det_info / p;
      if (want_primary)
        l_primary = log_pe_primary + l_base;
      if (want_lof) {
        if (q == 0) {
          l_lof = 0.0;
        } else if (std::isfinite(log_pe_lof)) {
          if (const auto post = SpdFactor::factor(shifted(residual_from(blocks, w), cfg.tau2)))
            l_lof = log_pe_lof - post->log_det() / q;
        }
      }
      if (want_mse) {
        double bias = 0.0;
        if (q > 0) {
          bias = cfg.family == Family::mse_d
                     ? mean_log1p_quadratic(w, prior_.draws)
                     : std::log1p(cfg.tau2 * w.rowwise().sum().squaredNorm());
        }
        l_mse = (-log_det_info + bias) / p;
      }
    } else {
      const Vector inv_diag = info->inverse_diagonal();
      const double base = primary_weights_.dot(inv_diag);
      l_base = std::log(base);
      if (want_primary)
        l_primary = log_pe_primary + l_base;
      if (want_lof) {
        if (q == 0) {
          l_lof = 0.0;
        } else if (std::isfinite(log_pe_lof)) {
          if (const auto post = SpdFactor::factor(shifted(residual_from(blocks, w), cfg.tau2)))
            l_lof = log_pe_lof + std::log(potential_weights_.dot(post->inverse_diagonal()));
        }
      }
      if (want_mse) {
        double bias = 0.0;
        if (q > 0) {
          const Matrix alias = info->solve(blocks.cross);
          bias = cfg.tau2 * primary_weights_.dot(alias.rowwise().squaredNorm());
        }
        l_mse = std::log(base + bias);
      }
    }
  }

  out.phi_base = std::exp(l_base);
  out.phi_primary = std::exp(l_primary);
  out.phi_lof = std::exp(l_lof);
  out.phi_mse = std::exp(l_mse);

  double total = 0.0;
  const std::pair<double, double> parts[] = {
      {cfg.kappa.primary, l_primary}, {cfg.kappa.lof, l_lof}, {cfg.kappa.mse, l_mse}};
  for (auto [kappa, value] : parts) {
    if (kappa <= 0.0)
      continue;
    if (value == kInf) {
      total = kInf;
      break;
    }
    total += kappa * value;
  }
  out.log_compound = total;
  return out;
}

PriorSample prior_for(const ExperimentSpec &spec, std::uint64_t seed) {
  if (spec.criterion.family == Family::mse_d)
    return sample_prior(spec.q(), spec.criterion.tau2, spec.criterion.mc_samples, seed);
  return PriorSample{Matrix(0, spec.q()), spec.criterion.tau2, seed};
}

CriterionBreakdown compound_objective(const Design &design, const ExperimentSpec &spec,
                                      const PriorSample &prior) {
  return CompoundEvaluator(spec, prior).evaluate(design);
}

// ---------------------------------------------------------------------------

std::optional<double> efficiency(double reference, double value) {
  if (!std::isfinite(reference))
    return std::nullopt;
  if (value == kInf)
    return 0.0;
  if (!(value > 0.0) || std::isnan(value))
    return std::nullopt;
  return 100.0 * reference / value;
}

std::vector<EfficiencyRow> efficiency_report(const std::vector<Kappa> &kappas,
                                             const std::vector<CriterionBreakdown> &values,
                                             std::size_t ref_primary, std::size_t ref_lof,
                                             std::size_t ref_mse) {
  if (kappas.size() != values.size())
    throw std::invalid_argument("efficiency report: one weight vector per design is required");
  if (ref_primary >= values.size() || ref_lof >= values.size() || ref_mse >= values.size())
    throw std::out_of_range("efficiency report: reference design index out of range");
  std::vector<EfficiencyRow> rows;
  rows.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto &v = values[i];
    rows.push_back({kappas[i], efficiency(values[ref_primary].phi_primary, v.phi_primary),
                    efficiency(values[ref_lof].phi_lof, v.phi_lof),
                    efficiency(values[ref_mse].phi_mse, v.phi_mse), v.pe_df, v.lof_df});
  }
  return rows;
}

} // namespace rsd

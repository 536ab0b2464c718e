#include "maxsmooth/latent_model.hpp"

#include "maxsmooth/error.hpp"
#include "maxsmooth/stats.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <thread>

namespace maxsmooth {

namespace {

using Trip = Eigen::Triplet<double, int>;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kLog2Pi = std::log(2.0 * std::numbers::pi);

void append(std::vector<Trip>& t, const SpMat& m, int row0, int col0, double scale = 1.0) {
  for (int c = 0; c < m.outerSize(); ++c)
    for (SpMat::InnerIterator it(m, c); it; ++it) t.emplace_back(row0 + it.row(), col0 + c, scale * it.value());
}

}  // namespace

const char* param_name(Param p) {
  switch (p) {
    case Param::kPsi: return "psi";
    case Param::kTau: return "tau";
    case Param::kPhi: return "phi";
    case Param::kGamma: return "gamma";
  }
  return "?";
}

Param param_from_name(std::string_view name) {
  if (name == "psi") return Param::kPsi;
  if (name == "tau") return Param::kTau;
  if (name == "phi") return Param::kPhi;
  if (name == "gamma") return Param::kGamma;
  throw InputError("unknown parameter '" + std::string(name) + "' (expected psi, tau, phi or gamma)");
}

std::vector<Param> ModelSpec::params() const {
  std::vector<Param> p{Param::kPsi, Param::kTau, Param::kPhi};
  if (trend) p.push_back(Param::kGamma);
  return p;
}

bool ModelSpec::any_spatial() const {
  for (Param p : params())
    if ((*this)[p].spatial) return true;
  return false;
}

void ModelSpec::validate() const {
  if (!(beta_sd > 0.0)) throw InputError("beta prior sd must be positive");
  if (!(pc.s0 > 0.0) || !(pc.eps0 > 0.0)) throw InputError("PC thresholds s0 and eps0 must be positive");
  for (Param p : params()) {
    std::set<std::string> seen;
    for (const auto& c : (*this)[p].covariates) {
      if (c.empty() || c == "intercept") throw InputError(std::string("invalid covariate name in ") + param_name(p));
      if (!seen.insert(c).second) throw InputError("covariate " + c + " repeated in " + param_name(p));
    }
  }
}

int CovariateTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  throw InputError("covariate '" + name + "' not found");
}

CovariateTable CovariateTable::rows(std::span<const int> idx) const {
  CovariateTable out;
  out.names = names;
  out.values.resize(static_cast<Eigen::Index>(idx.size()), values.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.values.row(static_cast<Eigen::Index>(i)) = values.row(idx[i]);
  return out;
}

Standardizer Standardizer::fit(const CovariateTable& raw) {
  if (raw.values.rows() < 2) throw InputError("standardization needs at least two rows");
  Standardizer s;
  s.names = raw.names;
  const auto n = static_cast<double>(raw.values.rows());
  s.center = raw.values.colwise().mean().transpose();
  s.scale.resize(raw.values.cols());
  for (Eigen::Index c = 0; c < raw.values.cols(); ++c) {
    const double v = (raw.values.col(c).array() - s.center(c)).square().sum() / (n - 1.0);
    s.scale(c) = v > 0.0 ? std::sqrt(v) : 1.0;
  }
  return s;
}

CovariateTable Standardizer::apply(const CovariateTable& raw) const {
  CovariateTable out;
  out.names = raw.names;
  out.values.resize(raw.values.rows(), raw.values.cols());
  for (std::size_t c = 0; c < raw.names.size(); ++c) {
    const auto it = std::find(names.begin(), names.end(), raw.names[c]);
    if (it == names.end()) throw InputError("no standardization statistics for column " + raw.names[c]);
    const auto k = it - names.begin();
    const auto cc = static_cast<Eigen::Index>(c);
    out.values.col(cc) = (raw.values.col(cc).array() - center(k)) / scale(k);
  }
  return out;
}

Eigen::VectorXd Standardizer::apply_row(const std::vector<std::string>& row_names, const Eigen::VectorXd& raw) const {
  CovariateTable t{row_names, raw.transpose()};
  return apply(t).values.row(0).transpose();
}

SpMat PseudoData::q_eta() const { return scatter_site_blocks(blocks, n_sites()); }

void PseudoData::validate() const {
  const int j = n_sites();
  const int d = n_params();
  if (j == 0 || d == 0) throw InputError("pseudo data is empty");
  if (eta_hat.size() != static_cast<Eigen::Index>(j) * d) throw InputError("pseudo data: eta_hat has the wrong length");
  if (static_cast<int>(blocks.size()) != j) throw InputError("pseudo data: one precision block per site is required");
  for (int i = 0; i < j; ++i) {
    const auto& b = blocks[i];
    if (b.rows() != d || b.cols() != d) throw InputError("pseudo data: block size mismatch at " + site_ids[i]);
    if (!b.allFinite() || (b - b.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + b.cwiseAbs().maxCoeff()))
      throw InputError("pseudo data: block of " + site_ids[i] + " is not symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(b);
    if (llt.info() != Eigen::Success) throw InputError("pseudo data: block of " + site_ids[i] + " is not positive definite");
  }
  if (!eta_hat.allFinite()) throw InputError("pseudo data: non-finite estimates");
}

PseudoData PseudoData::subset(std::span<const int> sites) const {
  PseudoData out;
  out.params = params;
  const int j = n_sites();
  const int m = static_cast<int>(sites.size());
  out.eta_hat.resize(static_cast<Eigen::Index>(m) * n_params());
  for (int k = 0; k < m; ++k) {
    out.site_ids.push_back(site_ids[sites[k]]);
    out.blocks.push_back(blocks[sites[k]]);
    for (int p = 0; p < n_params(); ++p) out.eta_hat(p * m + k) = eta_hat(p * j + sites[k]);
  }
  return out;
}

PseudoData make_pseudo_data(const std::vector<SiteFit>& fits, bool trend, std::vector<int>* kept) {
  PseudoData pd;
  pd.params = {Param::kPsi, Param::kTau, Param::kPhi};
  if (trend) pd.params.push_back(Param::kGamma);
  const auto d = static_cast<Eigen::Index>(pd.params.size());
  std::vector<int> idx;
  for (std::size_t i = 0; i < fits.size(); ++i) {
    const auto& f = fits[i];
    if (!f.converged()) {
      pd.excluded.push_back(f.site_id + ": " + to_string(f.status) + (f.message.empty() ? "" : " (" + f.message + ")"));
      continue;
    }
    if (f.eta_hat.size() != d || f.precision.rows() != d)
      throw InputError("site " + f.site_id + ": fit dimension does not match the trend setting of the model");
    idx.push_back(static_cast<int>(i));
  }
  const int j = static_cast<int>(idx.size());
  pd.eta_hat.resize(d * j);
  for (int k = 0; k < j; ++k) {
    const auto& f = fits[idx[k]];
    pd.site_ids.push_back(f.site_id);
    pd.blocks.push_back(0.5 * (f.precision + f.precision.transpose()));
    for (Eigen::Index p = 0; p < d; ++p) pd.eta_hat(p * j + k) = f.eta_hat(p);
  }
  if (kept) *kept = idx;
  return pd;
}

int Design::n_theta() const {
  int n = 0;
  for (const auto& s : sub) n += s.spatial ? 3 : 1;
  return n;
}

int Design::theta_offset(int k) const {
  int n = 0;
  for (int i = 0; i < k; ++i) n += sub[i].spatial ? 3 : 1;
  return n;
}

int Design::sub_index(Param p) const {
  for (std::size_t i = 0; i < sub.size(); ++i)
    if (sub[i].param == p) return static_cast<int>(i);
  return -1;
}

std::vector<std::string> Design::theta_names() const {
  std::vector<std::string> out;
  for (const auto& s : sub) {
    const std::string p = param_name(s.param);
    out.push_back("sigma_eps_" + p);
    if (s.spatial) {
      out.push_back("s_" + p);
      out.push_back("rho_" + p);
    }
  }
  return out;
}

std::vector<std::string> Design::nu_names() const {
  std::vector<std::string> out;
  for (const auto& s : sub) {
    const std::string p = param_name(s.param);
    for (const auto& c : s.columns) out.push_back("beta_" + p + "_" + c);
    if (s.spatial)
      for (Eigen::Index n = 0; n < field->n_nodes(); ++n) out.push_back("u_" + p + "_" + std::to_string(n));
  }
  return out;
}

Design assemble_design(std::span<const Param> params, std::span<const SubModelSpec> subs,
                       const CovariateTable& covariates, std::shared_ptr<const SpdeField> field,
                       const SpMat& projector, double beta_sd, const PcThresholds& pc) {
  if (params.size() != subs.size() || params.empty()) throw InputError("design: one sub-model per parameter is required");
  Design d;
  d.n_sites = static_cast<int>(covariates.values.rows());
  d.beta_sd = beta_sd;
  if (d.n_sites == 0) throw InputError("design: no sites");
  if (static_cast<std::size_t>(covariates.values.cols()) != covariates.names.size())
    throw InputError("design: covariate names and columns differ in number");

  bool spatial = false;
  for (const auto& s : subs) spatial = spatial || s.spatial;
  if (spatial) {
    if (!field) throw InputError("design: a spatial component requires a mesh");
    if (projector.rows() != d.n_sites || projector.cols() != field->n_nodes())
      throw InputError("design: projector dimensions do not match sites and mesh");
    d.field = field;
    d.projector = projector;
  }
  const double rho0 = pc.rho0 > 0.0 ? pc.rho0 : (field ? field->mesh().diameter / 10.0 : 1.0);
  const PcPrior prior = pc_lambdas(pc.s0, rho0, pc.eps0);

  int offset = 0;
  std::vector<Trip> t;
  for (std::size_t k = 0; k < subs.size(); ++k) {
    SubDesign sd;
    sd.param = params[k];
    sd.spatial = subs[k].spatial;
    sd.prior = prior;
    sd.columns.push_back("intercept");
    std::vector<int> cols;
    for (const auto& c : subs[k].covariates) {
      cols.push_back(covariates.column(c));
      sd.columns.push_back(c);
    }
    sd.x.resize(d.n_sites, static_cast<Eigen::Index>(cols.size()) + 1);
    sd.x.col(0).setOnes();
    for (std::size_t c = 0; c < cols.size(); ++c) sd.x.col(static_cast<Eigen::Index>(c) + 1) = covariates.values.col(cols[c]);
    sd.beta_offset = offset;
    offset += sd.n_beta();
    const int row0 = static_cast<int>(k) * d.n_sites;
    for (int i = 0; i < d.n_sites; ++i)
      for (int c = 0; c < sd.n_beta(); ++c) t.emplace_back(row0 + i, sd.beta_offset + c, sd.x(i, c));
    if (sd.spatial) {
      sd.u_offset = offset;
      offset += static_cast<int>(field->n_nodes());
      append(t, projector, row0, sd.u_offset);
    }
    d.sub.push_back(std::move(sd));
  }
  d.n_nu = offset;
  d.z.resize(d.n_rows(), d.n_nu);
  d.z.setFromTriplets(t.begin(), t.end());
  d.z.makeCompressed();
  d.prior_mean = Eigen::VectorXd::Zero(d.n_nu);
  return d;
}

Design assemble_design(const ModelSpec& spec, const CovariateTable& covariates,
                       std::shared_ptr<const SpdeField> field, const SpMat& projector) {
  spec.validate();
  const auto params = spec.params();
  std::vector<SubModelSpec> subs;
  for (Param p : params) subs.push_back(spec[p]);
  return assemble_design(params, subs, covariates, std::move(field), projector, spec.beta_sd, spec.pc);
}

struct LatentModel::Parts {
  std::vector<double> sigma, s, rho;
};

LatentModel::LatentModel(std::shared_ptr<const Design> design, std::shared_ptr<const PseudoData> pd)
    : design_(std::move(design)), pd_(std::move(pd)) {
  const Design& d = *design_;
  pd_->validate();
  if (pd_->n_sites() != d.n_sites) throw InputError("pseudo data and design differ in number of sites");
  if (pd_->n_params() != static_cast<int>(d.sub.size())) throw InputError("pseudo data and design differ in parameters");
  for (std::size_t k = 0; k < d.sub.size(); ++k)
    if (pd_->params[k] != d.sub[k].param) throw InputError("pseudo data and design order parameters differently");
  q_eta_ = pd_->q_eta();
  for (const auto& b : pd_->blocks) {
    Eigen::LLT<Eigen::MatrixXd> llt(b);
    site_cov_.push_back(llt.solve(Eigen::MatrixXd::Identity(b.rows(), b.cols())));
    log_det_q_eta_ += 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  }
}

bool LatentModel::unpack(const Eigen::VectorXd& theta, Parts& p) const {
  const Design& d = *design_;
  if (theta.size() != d.n_theta()) throw InputError("theta has the wrong length");
  if (!theta.allFinite() || (theta.array() <= 0.0).any()) return false;
  int o = 0;
  for (const auto& s : d.sub) {
    p.sigma.push_back(theta(o++));
    if (s.spatial) {
      p.s.push_back(theta(o++));
      p.rho.push_back(theta(o++));
    } else {
      p.s.push_back(0.0);
      p.rho.push_back(0.0);
    }
  }
  return true;
}

double LatentModel::log_prior(const Eigen::VectorXd& theta) const {
  Parts p;
  if (!unpack(theta, p)) return kNegInf;
  double lp = 0.0;
  for (std::size_t k = 0; k < design_->sub.size(); ++k) {
    const auto& s = design_->sub[k];
    lp += exp_logdensity(p.sigma[k], s.prior);
    if (s.spatial) lp += pc_logdensity(p.s[k], p.rho[k], s.prior);
  }
  return lp;
}

SpMat LatentModel::q_nu(const Eigen::VectorXd& theta, double* log_det) {
  const Design& d = *design_;
  Parts p;
  if (!unpack(theta, p)) throw InputError("theta must be positive and finite");
  std::vector<Trip> t;
  const double prec = 1.0 / (d.beta_sd * d.beta_sd);
  double ld = 0.0;
  for (std::size_t k = 0; k < d.sub.size(); ++k) {
    const auto& s = d.sub[k];
    for (int c = 0; c < s.n_beta(); ++c) t.emplace_back(s.beta_offset + c, s.beta_offset + c, prec);
    ld += s.n_beta() * std::log(prec);
    if (s.spatial) {
      const SpMat qu = d.field->precision(p.rho[k], p.s[k]);
      append(t, qu, s.u_offset, s.u_offset);
      if (log_det) {
        if (chol_field_.factorize(qu)) {
          ld += chol_field_.log_det();
        } else {
          ld = std::numeric_limits<double>::quiet_NaN();
        }
      }
    }
  }
  SpMat q(d.n_nu, d.n_nu);
  q.setFromTriplets(t.begin(), t.end());
  q.makeCompressed();
  if (log_det) *log_det = ld;
  return q;
}

double LatentModel::log_likelihood(const Eigen::VectorXd& theta) {
  const Design& d = *design_;
  Parts p;
  if (!unpack(theta, p)) return kNegInf;
  double ld_nu = 0.0;
  const SpMat qn = q_nu(theta, &ld_nu);
  if (!std::isfinite(ld_nu)) {
    ++failures_;
    return kNegInf;
  }
  const int j = d.n_sites;
  const auto np = static_cast<Eigen::Index>(d.sub.size());
  std::vector<Eigen::MatrixXd> wb;
  wb.reserve(static_cast<std::size_t>(j));
  double ld_w = 0.0;
  for (int i = 0; i < j; ++i) {
    Eigen::MatrixXd m = site_cov_[i];
    for (Eigen::Index k = 0; k < np; ++k) m(k, k) += p.sigma[k] * p.sigma[k];
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) {
      ++failures_;
      return kNegInf;
    }
    ld_w -= 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    wb.push_back(llt.solve(Eigen::MatrixXd::Identity(np, np)));
  }
  const SpMat w = scatter_site_blocks(wb, j);
  const SpMat ztw = SpMat(d.z.transpose()) * w;
  const SpMat qpost = qn + ztw * d.z;
  if (!chol_post_.factorize(qpost)) {
    ++failures_;
    return kNegInf;
  }
  const Eigen::VectorXd r = pd_->eta_hat - d.z * d.prior_mean;
  const Eigen::VectorXd b = ztw * r;
  const double quad = r.dot(w * r);
  const double fit = b.dot(chol_post_.solve(b));
  const double n = static_cast<double>(d.n_rows());
  return -0.5 * n * kLog2Pi + 0.5 * ld_w + 0.5 * ld_nu - 0.5 * chol_post_.log_det() - 0.5 * quad + 0.5 * fit;
}

Eigen::VectorXd LatentModel::nu_mean(const Eigen::VectorXd& theta) {
  const Design& d = *design_;
  Parts p;
  if (!unpack(theta, p)) throw InputError("theta must be positive and finite");
  const SpMat qn = q_nu(theta, nullptr);
  const auto np = static_cast<Eigen::Index>(d.sub.size());
  std::vector<Eigen::MatrixXd> wb;
  for (int i = 0; i < d.n_sites; ++i) {
    Eigen::MatrixXd m = site_cov_[i];
    for (Eigen::Index k = 0; k < np; ++k) m(k, k) += p.sigma[k] * p.sigma[k];
    wb.push_back(m.llt().solve(Eigen::MatrixXd::Identity(np, np)));
  }
  const SpMat w = scatter_site_blocks(wb, d.n_sites);
  const SpMat ztw = SpMat(d.z.transpose()) * w;
  const SpMat qpost = qn + ztw * d.z;
  if (!chol_post_.factorize(qpost)) throw NumericalError("posterior precision of nu is not positive definite");
  const Eigen::VectorXd r = pd_->eta_hat - d.z * d.prior_mean;
  return d.prior_mean + chol_post_.solve(ztw * r);
}

SpMat LatentModel::joint_precision(const Eigen::VectorXd& theta) {
  const Design& d = *design_;
  Parts p;
  if (!unpack(theta, p)) throw InputError("theta must be positive and finite");
  const int n = d.n_rows();
  const int j = d.n_sites;
  Eigen::VectorXd qe(n);
  for (std::size_t k = 0; k < d.sub.size(); ++k)
    qe.segment(static_cast<Eigen::Index>(k) * j, j).setConstant(1.0 / (p.sigma[k] * p.sigma[k]));
  const SpMat qez = qe.asDiagonal() * d.z;
  const SpMat ztqez = SpMat(d.z.transpose()) * qez;
  const SpMat qn = q_nu(theta, nullptr);

  std::vector<Trip> t;
  append(t, q_eta_, 0, 0);
  for (int i = 0; i < n; ++i) t.emplace_back(i, i, qe(i));
  append(t, qez, 0, n, -1.0);
  append(t, SpMat(qez.transpose()), n, 0, -1.0);
  append(t, qn, n, n);
  append(t, ztqez, n, n);
  SpMat q(n + d.n_nu, n + d.n_nu);
  q.setFromTriplets(t.begin(), t.end());
  q.makeCompressed();
  return q;
}

bool LatentModel::factor_joint(const Eigen::VectorXd& theta, Eigen::VectorXd* rhs) {
  const Design& d = *design_;
  const SpMat q = joint_precision(theta);
  if (!chol_joint_.factorize(q)) return false;
  if (rhs) {
    const int n = d.n_rows();
    rhs->resize(n + d.n_nu);
    rhs->head(n) = q_eta_ * pd_->eta_hat;
    rhs->tail(d.n_nu) = q_nu(theta, nullptr) * d.prior_mean;
  }
  return true;
}

double LatentModel::log_likelihood_joint(const Eigen::VectorXd& theta) {
  const Design& d = *design_;
  Parts p;
  if (!unpack(theta, p)) return kNegInf;
  Eigen::VectorXd rhs;
  if (!factor_joint(theta, &rhs)) {
    ++failures_;
    return kNegInf;
  }
  const double ld_joint = chol_joint_.log_det();
  const Eigen::VectorXd x = chol_joint_.solve(rhs);
  const int n = d.n_rows();
  const int j = d.n_sites;
  const Eigen::VectorXd eta = x.head(n);
  const Eigen::VectorXd nu = x.tail(d.n_nu);

  const Eigen::VectorXd de = pd_->eta_hat - eta;
  const double t1 = -0.5 * n * kLog2Pi + 0.5 * log_det_q_eta_ - 0.5 * de.dot(q_eta_ * de);

  const Eigen::VectorXd res = eta - d.z * nu;
  double t2 = -0.5 * n * kLog2Pi;
  for (std::size_t k = 0; k < d.sub.size(); ++k) {
    const double s2 = p.sigma[k] * p.sigma[k];
    t2 += -0.5 * j * std::log(s2) - 0.5 * res.segment(static_cast<Eigen::Index>(k) * j, j).squaredNorm() / s2;
  }

  double ld_nu = 0.0;
  const SpMat qn = q_nu(theta, &ld_nu);
  const Eigen::VectorXd dn = nu - d.prior_mean;
  const double t3 = -0.5 * d.n_nu * kLog2Pi + 0.5 * ld_nu - 0.5 * dn.dot(qn * dn);

  const double t4 = -0.5 * (n + d.n_nu) * kLog2Pi + 0.5 * ld_joint;
  return t1 + t2 + t3 - t4;
}

Eigen::VectorXd LatentModel::conditional_mean(const Eigen::VectorXd& theta) {
  Eigen::VectorXd rhs;
  if (!factor_joint(theta, &rhs)) throw NumericalError("joint precision of (eta, nu) is not positive definite");
  return chol_joint_.solve(rhs);
}

Eigen::MatrixXd LatentModel::sample_latent(const Eigen::VectorXd& theta, int n, std::mt19937_64& rng) {
  Eigen::VectorXd rhs;
  if (!factor_joint(theta, &rhs)) throw NumericalError("joint precision of (eta, nu) is not positive definite");
  const Eigen::VectorXd mean = chol_joint_.solve(rhs);
  std::normal_distribution<double> norm(0.0, 1.0);
  Eigen::MatrixXd out(mean.size(), n);
  Eigen::VectorXd z(mean.size());
  for (int c = 0; c < n; ++c) {
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = norm(rng);
    out.col(c) = mean + chol_joint_.sample_from_noise(z);
  }
  return out;
}

int PosteriorDraws::site_index(const std::string& id) const {
  for (std::size_t i = 0; i < site_ids.size(); ++i)
    if (site_ids[i] == id) return static_cast<int>(i);
  throw InputError("unknown site '" + id + "'");
}

int PosteriorDraws::param_index(Param p) const {
  for (std::size_t i = 0; i < params.size(); ++i)
    if (params[i] == p) return static_cast<int>(i);
  return -1;
}

std::vector<std::string> PosteriorDraws::eta_names() const {
  std::vector<std::string> out;
  for (Param p : params)
    for (const auto& s : site_ids) out.push_back(std::string(param_name(p)) + "_" + s);
  return out;
}

LinkedParams PosteriorDraws::linked(int draw, int site) const {
  const int j = n_sites();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(4);
  for (std::size_t k = 0; k < params.size(); ++k)
    v(static_cast<int>(params[k])) = eta(draw, static_cast<Eigen::Index>(k) * j + site);
  return LinkedParams::from(v);
}

int PosteriorDraws::theta_column(const std::string& name) const {
  for (std::size_t i = 0; i < theta_names.size(); ++i)
    if (theta_names[i] == name) return static_cast<int>(i);
  return -1;
}

int PosteriorDraws::nu_column(const std::string& name) const {
  for (std::size_t i = 0; i < nu_names.size(); ++i)
    if (nu_names[i] == name) return static_cast<int>(i);
  return -1;
}

Eigen::VectorXd initial_theta(const Design& design, const PseudoData& pd) {
  const int j = design.n_sites;
  Eigen::VectorXd theta(design.n_theta());
  int o = 0;
  for (std::size_t k = 0; k < design.sub.size(); ++k) {
    const auto& s = design.sub[k];
    const Eigen::VectorXd y = pd.eta_hat.segment(static_cast<Eigen::Index>(k) * j, j);
    double v = 0.0;
    if (j > s.n_beta()) {
      const Eigen::VectorXd beta = s.x.colPivHouseholderQr().solve(y);
      v = (y - s.x * beta).squaredNorm() / static_cast<double>(j - s.n_beta());
    } else {
      v = (y.array() - y.mean()).square().sum() / std::max(1, j - 1);
    }
    double sampling = 0.0;
    for (int i = 0; i < j; ++i) {
      const Eigen::MatrixXd cov = pd.blocks[i].llt().solve(Eigen::MatrixXd::Identity(pd.n_params(), pd.n_params()));
      sampling += cov(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    }
    sampling /= j;
    const double excess = std::max({v - sampling, 0.1 * v, 1e-12});
    if (s.spatial) {
      theta(o++) = std::sqrt(excess / 2.0);
      theta(o++) = std::sqrt(excess / 2.0);
      theta(o++) = design.field->mesh().diameter / 5.0;
    } else {
      theta(o++) = std::sqrt(excess);
    }
  }
  return theta;
}

mcmc::Result sample_theta(const LatentModel& model, const mcmc::Options& opts) {
  const mcmc::TargetFactory factory = [&model] {
    auto m = std::make_shared<LatentModel>(model);
    return mcmc::LogTarget([m](const Eigen::VectorXd& lt) {
      const Eigen::VectorXd th = lt.array().exp();
      const double v = m->marginal_log_posterior(th);
      return std::isfinite(v) ? v + lt.sum() : v;
    });
  };

  const Eigen::VectorXd base = initial_theta(model.design(), model.pseudo_data()).array().log();
  LatentModel probe(model);
  std::vector<Eigen::VectorXd> inits;
  for (int c = 0; c < opts.chains; ++c) {
    std::mt19937_64 rng(stats::mix_seed(opts.seed, 0x1417ULL + static_cast<std::uint64_t>(c)));
    std::normal_distribution<double> norm(0.0, 1.0);
    Eigen::VectorXd x = base;
    for (int attempt = 0; attempt < 20; ++attempt) {
      Eigen::VectorXd cand = base;
      for (Eigen::Index i = 0; i < cand.size(); ++i) cand(i) += 0.3 * norm(rng);
      if (std::isfinite(probe.marginal_log_posterior(cand.array().exp()))) {
        x = cand;
        break;
      }
    }
    inits.push_back(x);
  }
  return mcmc::adaptive_metropolis(factory, inits, opts);
}

PosteriorDraws sample_posterior(const LatentModel& model, const mcmc::Options& opts) {
  const mcmc::Result res = sample_theta(model, opts);
  const Design& d = model.design();
  const PseudoData& pd = model.pseudo_data();

  PosteriorDraws out;
  out.site_ids = pd.site_ids;
  out.params = pd.params;
  out.theta_names = d.theta_names();
  out.nu_names = d.nu_names();
  out.n_chains = opts.chains;
  out.iterations = opts.iterations;
  out.burn_in = opts.effective_burn_in();
  out.seed = opts.seed;
  out.rhat.assign(res.rhat.data(), res.rhat.data() + res.rhat.size());
  out.ess.assign(res.ess.data(), res.ess.data() + res.ess.size());
  out.rhat_warning = res.rhat_warning;

  Eigen::Index total = 0;
  for (const auto& ch : res.chains) total += ch.draws.rows();
  out.theta.resize(total, d.n_theta());
  out.nu.resize(total, d.n_nu);
  out.eta.resize(total, d.n_rows());

  std::vector<Eigen::Index> start;
  Eigen::Index row = 0;
  for (std::size_t c = 0; c < res.chains.size(); ++c) {
    const auto& ch = res.chains[c];
    start.push_back(row);
    out.acceptance.push_back(ch.acceptance);
    out.rejected += ch.rejected;
    for (Eigen::Index r = 0; r < ch.draws.rows(); ++r) {
      out.theta.row(row) = ch.draws.row(r).array().exp();
      out.chain.push_back(static_cast<int>(c));
      out.iteration.push_back(ch.iterations[static_cast<std::size_t>(r)]);
      ++row;
    }
  }

  std::vector<std::exception_ptr> errors(res.chains.size());
  auto latent = [&](std::size_t c) {
    try {
      LatentModel m(model);
      std::mt19937_64 rng(stats::mix_seed(opts.seed, 0xd4a3ULL + c));
      for (Eigen::Index r = 0; r < res.chains[c].draws.rows(); ++r) {
        const Eigen::Index i = start[c] + r;
        const Eigen::VectorXd x = m.sample_latent(out.theta.row(i).transpose(), 1, rng).col(0);
        out.eta.row(i) = x.head(d.n_rows()).transpose();
        out.nu.row(i) = x.tail(d.n_nu).transpose();
      }
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  const unsigned n_threads = std::max(1u, std::min<unsigned>(opts.threads, static_cast<unsigned>(res.chains.size())));
  if (n_threads == 1) {
    for (std::size_t c = 0; c < res.chains.size(); ++c) latent(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t c = next++; c < res.chains.size(); c = next++) latent(c);
      });
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

FittedModel run_inference(const InferenceInput& in, const mcmc::Options& opts) {
  in.spec.validate();
  if (in.covariates.values.rows() != static_cast<Eigen::Index>(in.fits.size()))
    throw InputError("covariate rows do not match the number of site fits");
  const bool spatial = in.spec.any_spatial();
  if (spatial && in.coords.size() != in.fits.size()) throw InputError("coordinates do not match the number of site fits");

  FittedModel fm;
  fm.spec = in.spec;
  auto pd = std::make_shared<PseudoData>(make_pseudo_data(in.fits, in.spec.trend, &fm.kept));
  if (pd->n_sites() < 3) throw InputError("fewer than three converged site fits");
  const CovariateTable cov = in.covariates.rows(fm.kept);

  std::shared_ptr<const SpdeField> field;
  SpMat projector;
  if (spatial) {
    std::vector<Point2> pts;
    for (int i : fm.kept) pts.push_back(in.coords[static_cast<std::size_t>(i)]);
    fm.mesh = in.mesh ? in.mesh : std::make_shared<const Mesh>(build_mesh(pts, in.mesh_options));
    field = std::make_shared<const SpdeField>(fm.mesh);
    projector = make_projector(*fm.mesh, pts);
  }
  auto design = std::make_shared<const Design>(assemble_design(in.spec, cov, field, projector));
  fm.design = design;
  fm.pseudo = pd;
  const LatentModel model(design, pd);
  fm.draws = sample_posterior(model, opts);
  return fm;
}

}  // namespace maxsmooth

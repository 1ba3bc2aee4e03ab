#include "proxybounds/dgp.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "proxybounds/bounds.hpp"
#include "proxybounds/parallel.hpp"
#include "proxybounds/rng.hpp"

namespace proxybounds {

Eigen::Matrix4d LatentSpec::latent_covariance() const {
  Eigen::Matrix4d cov;
  cov << 1.0, 0.0, cov_x_u1, cov_x_u2,
         0.0, var_eps, 0.0, 0.0,
         cov_x_u1, 0.0, var_u1, cov_u1_u2,
         cov_x_u2, 0.0, cov_u1_u2, var_u2;
  return cov;
}

bool LatentSpec::latent_psd(double tol) const {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> solver(latent_covariance(),
                                                        Eigen::EigenvaluesOnly);
  const auto& ev = solver.eigenvalues();
  const double largest = std::max(ev.maxCoeff(), 1.0);
  return ev.minCoeff() >= -tol * largest;
}

void LatentSpec::validate() const {
  auto require_nonneg = [](double v, const char* name) {
    if (v < 0.0)
      throw Error(ErrorKind::invalid_spec, std::string("latent spec: ") + name +
                                               " is negative (" +
                                               std::to_string(v) + ")");
  };
  require_nonneg(var_eps, "var_eps");
  require_nonneg(var_u1, "var_u1");
  require_nonneg(var_u2, "var_u2");
}

MomentSummary latent_to_observable_moments(const LatentSpec& spec) {
  spec.validate();
  MomentSummary m;
  m.mean_z1 = spec.mean_u1;
  m.mean_z2 = spec.mean_u2;
  m.var_y = spec.beta * spec.beta + spec.var_eps;
  m.var_z1 = 1.0 + spec.var_u1 + 2.0 * spec.cov_x_u1;
  m.var_z2 = 1.0 + spec.var_u2 + 2.0 * spec.cov_x_u2;
  m.cov_z1y = spec.beta * (1.0 + spec.cov_x_u1);
  m.cov_z2y = spec.beta * (1.0 + spec.cov_x_u2);
  m.cov_z1z2 = 1.0 + spec.cov_x_u1 + spec.cov_x_u2 + spec.cov_u1_u2;
  m.n = 0;
  return m;
}

Sample sample_dgp(const LatentSpec& spec, std::size_t n, std::uint64_t seed,
                  std::size_t covariate_count) {
  spec.validate();
  if (n < covariate_count + 3)
    throw Error(ErrorKind::insufficient_data,
                "sample_dgp: n must be at least covariate_count + 3");

  const Eigen::Matrix4d cov = spec.latent_covariance();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> solver(cov);
  const auto& eigenvalues = solver.eigenvalues();
  const double largest = std::max(eigenvalues.maxCoeff(), 1.0);
  if (eigenvalues.minCoeff() < -1e-9 * largest)
    throw Error(ErrorKind::invalid_spec,
                "sample_dgp: latent covariance is not PSD (eigenvalue " +
                    std::to_string(eigenvalues.minCoeff()) + ")");
  // Symmetric square root; rank-deficient specs (exactly dependent errors)
  // come through with their small negative roundoff clamped away.
  const Eigen::Vector4d clamped = eigenvalues.cwiseMax(0.0).cwiseSqrt();
  const Eigen::Matrix4d root =
      solver.eigenvectors() * clamped.asDiagonal() * solver.eigenvectors().transpose();

  Sample s;
  s.y.resize(static_cast<Eigen::Index>(n));
  s.z1.resize(static_cast<Eigen::Index>(n));
  s.z2.resize(static_cast<Eigen::Index>(n));
  s.w.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(covariate_count + 1));

  // Each row draws from its own (seed, row) stream, so the result does not
  // depend on how the loop is partitioned.
  const int workers = n >= 65536 ? 0 : 1;
  parallel_for(n, workers, [&](std::size_t i) {
    Rng rng(derive_stream(seed, StreamDomain::dgp_row, i));
    Eigen::Vector4d shock;
    for (int j = 0; j < 4; ++j) shock[j] = rng.next_normal();
    Eigen::Vector4d latent = root * shock;
    const double x = latent[0];
    const double eps = latent[1];
    const double u1 = latent[2] + spec.mean_u1;
    const double u2 = latent[3] + spec.mean_u2;

    double covariate_sum = 0.0;
    const auto row = static_cast<Eigen::Index>(i);
    s.w(row, 0) = 1.0;
    for (std::size_t j = 0; j < covariate_count; ++j) {
      const double wj = rng.next_normal();
      s.w(row, static_cast<Eigen::Index>(j + 1)) = wj;
      covariate_sum += wj;
    }

    const double regressor = x + covariate_sum;
    s.y[row] = spec.beta * regressor + eps + covariate_sum;
    s.z1[row] = regressor + u1;
    s.z2[row] = regressor + u2;
  });
  return s;
}

LatentSpec example1_spec(double beta, double c1, double a1) {
  if (!(beta > 0.0))
    throw Error(ErrorKind::invalid_spec, "example1_spec: beta must be positive");
  if (!(c1 > 0.0))
    throw Error(ErrorKind::invalid_spec, "example1_spec: c1 must be positive");
  LatentSpec spec;
  spec.beta = beta;
  spec.mean_u1 = a1;
  spec.mean_u2 = a1;
  spec.var_eps = 0.0;
  spec.var_u1 = c1 * c1;
  spec.var_u2 = c1 * c1;
  spec.cov_x_u1 = c1;
  spec.cov_x_u2 = c1;
  spec.cov_u1_u2 = c1 * c1;
  return spec;
}

LatentSpec example2_spec(double var_u1, double cov_x_u1) {
  if (!(var_u1 > 0.0 && var_u1 < 1.0))
    throw Error(ErrorKind::invalid_spec, "example2_spec: var_u1 must lie in (0, 1)");
  const double lo = -(1.0 + var_u1) / 2.0;
  const double hi = -var_u1;
  if (!(cov_x_u1 > lo && cov_x_u1 < hi))
    throw Error(ErrorKind::invalid_spec,
                "example2_spec: cov_x_u1 must lie in (" + std::to_string(lo) + ", " +
                    std::to_string(hi) + ")");
  LatentSpec spec;
  spec.beta = 1.0;
  spec.var_eps = 0.0;
  spec.var_u1 = var_u1;
  spec.var_u2 = var_u1;
  spec.cov_x_u1 = cov_x_u1;
  spec.cov_x_u2 = cov_x_u1;
  spec.cov_u1_u2 = var_u1;
  return spec;
}

LatentSpec example3_spec(double var_u2, double cov_u1_u2) {
  if (!(var_u2 > 1.0))
    throw Error(ErrorKind::invalid_spec, "example3_spec: var_u2 must exceed 1");
  if (!(var_u2 >= (3.0 * cov_u1_u2 - 1.0) / 2.0))
    throw Error(ErrorKind::invalid_spec,
                "example3_spec: need var_u2 >= (3*cov_u1_u2 - 1)/2");
  LatentSpec spec;
  spec.beta = 1.0;
  spec.var_eps = 0.0;
  spec.var_u1 = 1.0;
  spec.var_u2 = var_u2;
  spec.cov_x_u1 = 0.0;
  spec.cov_x_u2 = 0.0;
  spec.cov_u1_u2 = cov_u1_u2;
  return spec;
}

LatentSpec sharpness_spec(const MomentSummary& m, double beta_tilde) {
  if (beta_tilde < 0.0)
    throw Error(ErrorKind::out_of_identified_set,
                "sharpness_spec: candidate slope is negative");

  LatentSpec spec;
  spec.beta = beta_tilde;
  spec.mean_u1 = m.mean_z1;
  spec.mean_u2 = m.mean_z2;
  if (beta_tilde == 0.0) {
    if (!(m.cov_z1y == 0.0 && m.cov_z2y == 0.0))
      throw Error(ErrorKind::out_of_identified_set,
                  "sharpness_spec: zero slope demands zero proxy/outcome covariances");
    spec.var_eps = m.var_y;
    spec.var_u1 = 1.0 + m.var_z1;
    spec.var_u2 = 1.0 + m.var_z2;
    spec.cov_x_u1 = -1.0;
    spec.cov_x_u2 = -1.0;
    spec.cov_u1_u2 = m.cov_z1z2 + 1.0;
  } else {
    spec.var_eps = m.var_y - beta_tilde * beta_tilde;
    spec.var_u1 = 1.0 + m.var_z1 - 2.0 * m.cov_z1y / beta_tilde;
    spec.var_u2 = 1.0 + m.var_z2 - 2.0 * m.cov_z2y / beta_tilde;
    spec.cov_x_u1 = m.cov_z1y / beta_tilde - 1.0;
    spec.cov_x_u2 = m.cov_z2y / beta_tilde - 1.0;
    spec.cov_u1_u2 = m.cov_z1z2 + 1.0 - (m.cov_z1y + m.cov_z2y) / beta_tilde;
  }

  // Candidates at the boundary of the set make one constraint exactly zero;
  // absorb roundoff there instead of rejecting.
  constexpr double kBoundaryTol = 1e-9;
  auto clean = [&](double& v, const char* name) {
    if (v < -kBoundaryTol)
      throw Error(ErrorKind::out_of_identified_set,
                  std::string("sharpness_spec: candidate slope implies negative ") +
                      name + " (" + std::to_string(v) + ")");
    if (v < 0.0) v = 0.0;
  };
  clean(spec.var_eps, "var_eps");
  clean(spec.var_u1, "var_u1");
  clean(spec.var_u2, "var_u2");
  clean(spec.cov_u1_u2, "cov_u1_u2");
  return spec;
}

namespace {

constexpr const char* kSpecKeys[] = {"beta",     "var_eps",  "var_u1",
                                     "var_u2",   "cov_x_u1", "cov_x_u2",
                                     "cov_u1_u2", "mean_u1",  "mean_u2"};

double* spec_field(LatentSpec& spec, const std::string& key) {
  if (key == "beta") return &spec.beta;
  if (key == "var_eps") return &spec.var_eps;
  if (key == "var_u1") return &spec.var_u1;
  if (key == "var_u2") return &spec.var_u2;
  if (key == "cov_x_u1") return &spec.cov_x_u1;
  if (key == "cov_x_u2") return &spec.cov_x_u2;
  if (key == "cov_u1_u2") return &spec.cov_u1_u2;
  if (key == "mean_u1") return &spec.mean_u1;
  if (key == "mean_u2") return &spec.mean_u2;
  return nullptr;
}

}  // namespace

void write_spec_file(const LatentSpec& spec, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out)
    throw Error(ErrorKind::parse_error, "cannot open spec file for writing: " + path.string());
  LatentSpec copy = spec;
  out.precision(17);
  for (const char* key : kSpecKeys) out << key << " = " << *spec_field(copy, key) << "\n";
}

LatentSpec read_spec_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorKind::parse_error, "cannot open spec file: " + path.string());

  LatentSpec spec;
  std::map<std::string, bool> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string key, eq;
    double value = 0.0;
    std::istringstream fields(line);
    if (!(fields >> key)) continue;  // blank line
    if (!(fields >> eq) || eq != "=" || !(fields >> value))
      throw Error(ErrorKind::parse_error,
                  "spec file " + path.string() + ":" + std::to_string(line_no) +
                      ": expected 'key = value'");
    double* slot = spec_field(spec, key);
    if (slot == nullptr)
      throw Error(ErrorKind::parse_error,
                  "spec file " + path.string() + ": unknown key '" + key + "'");
    *slot = value;
    seen[key] = true;
  }
  for (const char* key : kSpecKeys) {
    const std::string name(key);
    if (name.rfind("mean_", 0) == 0) continue;  // means are optional
    if (!seen.count(name))
      throw Error(ErrorKind::parse_error,
                  "spec file " + path.string() + ": missing key '" + name + "'");
  }
  return spec;
}

}  // namespace proxybounds

#include "starwave/background.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>

#include "starwave/csv.hpp"

namespace starwave {

// ---------------------------------------------------------------------------
// MonotoneCubic

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n < 2 || y_.size() != n) throw InputError("interpolant needs at least two samples");
  std::vector<double> h(n - 1), delta(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    h[k] = x_[k + 1] - x_[k];
    if (!(h[k] > 0.0)) throw InputError("interpolation grid must be strictly increasing");
    delta[k] = (y_[k + 1] - y_[k]) / h[k];
  }
  slope_.assign(n, 0.0);
  if (n == 2) {
    slope_[0] = slope_[1] = delta[0];
    return;
  }
  for (std::size_t k = 1; k + 1 < n; ++k) {
    if (delta[k - 1] * delta[k] <= 0.0) continue;
    const double w1 = 2.0 * h[k] + h[k - 1];
    const double w2 = h[k] + 2.0 * h[k - 1];
    slope_[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
  }
  auto end_slope = [](double h0, double h1, double d0, double d1) {
    double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (s * d0 <= 0.0) return 0.0;
    if (d0 * d1 <= 0.0 && std::abs(s) > 3.0 * std::abs(d0)) return 3.0 * d0;
    return s;
  };
  slope_[0] = end_slope(h[0], h[1], delta[0], delta[1]);
  slope_[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
}

std::size_t MonotoneCubic::interval(double x) const {
  auto it = std::upper_bound(x_.begin(), x_.end(), x);
  std::size_t k = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
  return std::min(k, x_.size() - 2);
}

double MonotoneCubic::value(double x) const {
  const std::size_t k = interval(x);
  const double h = x_[k + 1] - x_[k];
  const double t = (x - x_[k]) / h;
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * y_[k] + (t3 - 2 * t2 + t) * h * slope_[k] +
         (-2 * t3 + 3 * t2) * y_[k + 1] + (t3 - t2) * h * slope_[k + 1];
}

double MonotoneCubic::derivative(double x) const {
  const std::size_t k = interval(x);
  const double h = x_[k + 1] - x_[k];
  const double t = (x - x_[k]) / h;
  const double t2 = t * t;
  return ((6 * t2 - 6 * t) * y_[k] + (-6 * t2 + 6 * t) * y_[k + 1]) / h +
         (3 * t2 - 4 * t + 1) * slope_[k] + (3 * t2 - 2 * t) * slope_[k + 1];
}

// ---------------------------------------------------------------------------
// RadialBackground

RadialBackground::RadialBackground(std::vector<double> r, std::vector<double> rho0,
                                   std::vector<double> c0, std::vector<double> phi0,
                                   double length_scale, std::optional<double> r_max)
    : r_(std::move(r)), length_scale_(length_scale) {
  const std::size_t n = r_.size();
  if (n < 2) throw InputError("radial profile needs at least two rows");
  if (rho0.size() != n || c0.size() != n || phi0.size() != n)
    throw InputError("radial profile columns have different lengths");
  if (!(length_scale > 0.0)) throw InputError("length_scale must be positive");
  for (std::size_t k = 0; k + 1 < n; ++k)
    if (!(r_[k + 1] > r_[k]))
      throw InputError("radial profile: r is not strictly increasing at row " +
                       std::to_string(k + 1));
  if (r_.front() > 0.0) throw InputError("radial profile must start at r = 0");
  std::vector<double> log_rho(n), log_c(n), phi(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (!(rho0[k] > 0.0)) throw InputError("radial profile: rho0 must be positive");
    if (!(c0[k] > 0.0)) throw InputError("radial profile: c0 must be positive");
    log_rho[k] = std::log(rho0[k]);
    log_c[k] = std::log(c0[k] / length_scale);
    phi[k] = phi0[k] / (length_scale * length_scale);
  }
  r_max_ = r_max.value_or(r_.back());
  if (r_max_ > r_.back() * (1.0 + 1e-12))
    throw InputError("radial profile does not cover r_max");
  log_rho_ = MonotoneCubic(r_, std::move(log_rho));
  log_c_ = MonotoneCubic(r_, std::move(log_c));
  phi_ = MonotoneCubic(r_, std::move(phi));
}

RadialBackground RadialBackground::constant(double rho, double c, double r_max) {
  return RadialBackground({0.0, r_max}, {rho, rho}, {c, c}, {0.0, 0.0}, 1.0, r_max);
}

RadialBackground::Sample RadialBackground::at(double r) const {
  r = std::clamp(r, r_.front(), r_.back());
  Sample s;
  s.rho = std::exp(log_rho_.value(r));
  s.c = std::exp(log_c_.value(r));
  s.phi = phi_.value(r);
  s.drho = s.rho * log_rho_.derivative(r);
  s.dc = s.c * log_c_.derivative(r);
  s.dphi = phi_.derivative(r);
  return s;
}

double RadialBackground::alpha_rho(double r) const {
  r = std::clamp(r, r_.front(), r_.back());
  return -log_rho_.derivative(r);
}

double RadialBackground::gravity(double r) const {
  r = std::clamp(r, r_.front(), r_.back());
  return phi_.derivative(r);
}

RadialBackground load_radial_profile(const std::string& path, double length_scale) {
  const CsvTable t = read_csv(path);
  return RadialBackground(t.column_values("r"), t.column_values("rho0"), t.column_values("c0"),
                          t.column_values("phi0"), length_scale);
}

void save_radial_profile(const RadialBackground& bg, const std::string& path,
                         std::size_t samples) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << "r,rho0,c0,phi0\n" << std::setprecision(17);
  const double r_hi = bg.r_grid().back();
  for (std::size_t k = 0; k < samples; ++k) {
    const double r = r_hi * static_cast<double>(k) / static_cast<double>(samples - 1);
    const auto s = bg.at(r);
    out << r << ',' << s.rho << ',' << s.c << ',' << s.phi << '\n';
  }
}

RadialBackground toy_star(double r_max, double rho_decay, double c_center, double c_drop,
                          double g, std::size_t samples) {
  std::vector<double> r(samples), rho(samples), c(samples), phi(samples);
  for (std::size_t k = 0; k < samples; ++k) {
    r[k] = r_max * static_cast<double>(k) / static_cast<double>(samples - 1);
    rho[k] = std::exp(-rho_decay * r[k]);
    c[k] = c_center * (1.0 - c_drop * r[k] * r[k]);
    phi[k] = 0.5 * g * r[k] * r[k];
  }
  return RadialBackground(std::move(r), std::move(rho), std::move(c), std::move(phi), 1.0, r_max);
}

// ---------------------------------------------------------------------------
// Tables

namespace {

// Locates x in a sorted grid; returns lower index and weight of the upper node.
std::pair<std::size_t, double> bracket_clamped(const std::vector<double>& g, double x) {
  if (g.size() == 1 || x <= g.front()) return {0, 0.0};
  if (x >= g.back()) return {g.size() - 2, 1.0};
  auto it = std::upper_bound(g.begin(), g.end(), x);
  const std::size_t k = static_cast<std::size_t>(it - g.begin()) - 1;
  return {k, (x - g[k]) / (g[k + 1] - g[k])};
}

std::vector<double> sorted_unique(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

SphericalTable::SphericalTable(std::vector<double> theta_deg, std::vector<double> phi_deg,
                               std::vector<double> values)
    : theta_(std::move(theta_deg)), phi_(std::move(phi_deg)), values_(std::move(values)) {
  if (theta_.empty() || phi_.empty() || values_.size() != theta_.size() * phi_.size())
    throw InputError("spherical table: grid and value sizes disagree");
  if (!std::is_sorted(theta_.begin(), theta_.end()) || !std::is_sorted(phi_.begin(), phi_.end()))
    throw InputError("spherical table: grids must be sorted");
  if (phi_.back() - phi_.front() >= 360.0)
    throw InputError("spherical table: longitude grid must span less than 360 degrees");
}

double SphericalTable::lookup(double theta, double phi) const {
  const double th = theta * 180.0 / pi;
  const auto [i, wt] = bracket_clamped(theta_, th);
  const std::size_t i1 = theta_.size() == 1 ? 0 : i + 1;

  // Periodic longitude: shift phi into [phi0, phi0 + 360).
  const std::size_t np = phi_.size();
  double ph = phi * 180.0 / pi;
  ph = phi_.front() + std::fmod(std::fmod(ph - phi_.front(), 360.0) + 360.0, 360.0);
  std::size_t j = 0, j1 = 0;
  double wp = 0.0;
  if (np > 1) {
    auto it = std::upper_bound(phi_.begin(), phi_.end(), ph);
    j = static_cast<std::size_t>(it - phi_.begin()) - 1;
    if (j + 1 < np) {
      j1 = j + 1;
      wp = (ph - phi_[j]) / (phi_[j1] - phi_[j]);
    } else {
      j1 = 0;
      wp = (ph - phi_[j]) / (phi_.front() + 360.0 - phi_[j]);
    }
  }
  auto v = [&](std::size_t a, std::size_t b) { return values_[a * np + b]; };
  return (1 - wt) * ((1 - wp) * v(i, j) + wp * v(i, j1)) +
         wt * ((1 - wp) * v(i1, j) + wp * v(i1, j1));
}

VolumeTable::VolumeTable(std::vector<double> r, std::vector<double> theta_deg,
                         std::vector<double> phi_deg, std::vector<double> values)
    : r_(std::move(r)) {
  const std::size_t per_shell = theta_deg.size() * phi_deg.size();
  if (r_.size() < 2 || values.size() != r_.size() * per_shell)
    throw InputError("volume table: grid and value sizes disagree");
  if (!std::is_sorted(r_.begin(), r_.end())) throw InputError("volume table: r must be sorted");
  for (std::size_t k = 0; k < r_.size(); ++k)
    shells_.emplace_back(theta_deg, phi_deg,
                         std::vector<double>(values.begin() + static_cast<long>(k * per_shell),
                                             values.begin() + static_cast<long>((k + 1) * per_shell)));
}

double VolumeTable::lookup(double r, double theta, double phi) const {
  if (r < r_.front() || r > r_.back()) return 0.0;
  const auto [k, w] = bracket_clamped(r_, r);
  return (1 - w) * shells_[k].lookup(theta, phi) + w * shells_[k + 1].lookup(theta, phi);
}

SphericalTable load_surface_map(const std::string& path) {
  const CsvTable t = read_csv(path);
  const auto th = t.column_values("theta_deg");
  const auto ph = t.column_values("phi_deg");
  const auto d = t.column_values("delta");
  const auto thetas = sorted_unique(th);
  const auto phis = sorted_unique(ph);
  std::vector<double> values(thetas.size() * phis.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t k = 0; k < d.size(); ++k) {
    const auto i = static_cast<std::size_t>(std::lower_bound(thetas.begin(), thetas.end(), th[k]) - thetas.begin());
    const auto j = static_cast<std::size_t>(std::lower_bound(phis.begin(), phis.end(), ph[k]) - phis.begin());
    values[i * phis.size() + j] = d[k];
  }
  for (double v : values)
    if (std::isnan(v)) throw InputError(path + ": surface map is not a complete lat/lon grid");
  return SphericalTable(thetas, phis, std::move(values));
}

VolumeTable load_volume_table(const std::string& path) {
  const CsvTable t = read_csv(path);
  const auto rr = t.column_values("r");
  const auto th = t.column_values("theta_deg");
  const auto ph = t.column_values("phi_deg");
  const auto d = t.column_values("delta");
  const auto rs = sorted_unique(rr);
  const auto thetas = sorted_unique(th);
  const auto phis = sorted_unique(ph);
  const std::size_t per = thetas.size() * phis.size();
  std::vector<double> values(rs.size() * per, std::numeric_limits<double>::quiet_NaN());
  auto pos = [](const std::vector<double>& g, double x) {
    return static_cast<std::size_t>(std::lower_bound(g.begin(), g.end(), x) - g.begin());
  };
  for (std::size_t k = 0; k < d.size(); ++k)
    values[pos(rs, rr[k]) * per + pos(thetas, th[k]) * phis.size() + pos(phis, ph[k])] = d[k];
  for (double v : values)
    if (std::isnan(v)) throw InputError(path + ": volume table is not a complete grid");
  return VolumeTable(rs, thetas, phis, std::move(values));
}

// ---------------------------------------------------------------------------
// Perturbations

PerturbationField PerturbationField::active_region(SphericalTable map, double r_center,
                                                   double variance, double alpha) {
  if (!(variance > 0.0)) throw InputError("active region: envelope variance must be positive");
  if (alpha < 0.0 || alpha > 1.0) throw InputError("active region: alpha must lie in [0, 1]");
  for (double v : map.values())
    if (v > 0.0 || v < -1.0) throw InputError("active region: map values must lie in [-1, 0]");
  PerturbationField p;
  p.kind_ = PerturbationKind::active_region;
  p.map_ = std::move(map);
  p.r_center_ = r_center;
  p.variance_ = variance;
  p.alpha_ = alpha;
  return p;
}

PerturbationField PerturbationField::volumetric(VolumeTable table, double alpha) {
  if (alpha < 0.0 || alpha > 1.0) throw InputError("volumetric perturbation: alpha must lie in [0, 1]");
  PerturbationField p;
  p.kind_ = PerturbationKind::volumetric;
  p.volume_ = std::move(table);
  p.alpha_ = alpha;
  return p;
}

double PerturbationField::relative_change(const Vec3& x) const {
  switch (kind_) {
    case PerturbationKind::none:
      return 0.0;
    case PerturbationKind::active_region: {
      if (alpha_ == 0.0) return 0.0;
      const Spherical s = to_spherical(x);
      const double dr = s.r - r_center_;
      const double envelope = std::exp(-dr * dr / (2.0 * variance_));
      return alpha_ * envelope * map_.lookup(s.theta, s.phi);
    }
    case PerturbationKind::volumetric: {
      if (alpha_ == 0.0) return 0.0;
      const Spherical s = to_spherical(x);
      return alpha_ * volume_.lookup(s.r, s.theta, s.phi);
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Coefficients

std::string to_string(Formulation f) {
  switch (f) {
    case Formulation::original: return "original";
    case Formulation::liouville: return "liouville";
    case Formulation::liouville_c: return "liouville_c";
  }
  return "?";
}

Formulation parse_formulation(const std::string& name) {
  if (name == "original") return Formulation::original;
  if (name == "liouville") return Formulation::liouville;
  if (name == "liouville_c" || name == "liouville-c") return Formulation::liouville_c;
  throw InputError("unknown formulation '" + name + "'");
}

SolverConfig SolverConfig::from_physical(double frequency_mhz, double attenuation_uhz,
                                         Formulation formulation) {
  SolverConfig cfg;
  cfg.formulation = formulation;
  cfg.omega = 2.0 * pi * frequency_mhz * 1e-3;
  cfg.gamma_att = 2.0 * pi * attenuation_uhz * 1e-6;
  return cfg;
}

void SolverConfig::validate() const {
  if (!(omega > 0.0)) throw InputError("omega must be positive");
  if (gamma_att < 0.0) throw InputError("attenuation must be non-negative");
  if (eps_blr && !(*eps_blr > 0.0 && *eps_blr < 1.0))
    throw InputError("eps_blr must lie in (0, 1)");
  if (!(tau_scale > 0.0)) throw InputError("tau_scale must be positive");
}

double perturbed_wavespeed(const RadialBackground& bg, const PerturbationField& pert,
                           const Vec3& x) {
  const double c = bg.c0(x.norm()) * (1.0 + pert.relative_change(x));
  if (!(c > 0.0)) throw DomainError("perturbed wave speed is not positive");
  return c;
}

CoefficientSet eval_coefficients(const RadialBackground& bg, const PerturbationField& pert,
                                 const SolverConfig& cfg, const Vec3& x) {
  const double r = x.norm();
  if (r > bg.r_max() * (1.0 + 1e-9))
    throw DomainError("point outside the background domain (r = " + std::to_string(r) + ")");
  const auto s = bg.at(r);
  const Vec3 rhat = r > 1e-14 ? Vec3(x / r) : Vec3::Zero();
  const double c = s.c * (1.0 + pert.relative_change(x));
  if (!(c > 0.0)) throw DomainError("perturbed wave speed is not positive");
  const double c2 = c * c;

  const Vec3 grav = s.dphi * rhat;                   // grad phi0
  const Vec3 alpha_rho = (-s.drho / s.rho) * rhat;   // -grad rho0 / rho0
  const Vec3 alpha_c = (-s.dc / s.c) * rhat;         // from the unperturbed c0
  const cplx shift(-cfg.omega * cfg.omega, -2.0 * cfg.omega * cfg.gamma_att);
  const Vec3 tail = alpha_rho - grav / c2;

  CoefficientSet k;
  const Eigen::Matrix3d outer = grav * tail.transpose();
  switch (cfg.formulation) {
    case Formulation::original:
      k.A = s.rho * (shift * CMat3::Identity() + outer.cast<cplx>());
      k.beta = (grav / c2).cast<cplx>();
      k.rho_coef = 1.0 / (s.rho * c2);
      k.z_bc = (-s.rho * grav).cast<cplx>();
      k.src_scale = 1.0;
      break;
    case Formulation::liouville:
      k.A = shift * CMat3::Identity() + outer.cast<cplx>();
      k.beta = (grav / c2 - 0.5 * alpha_rho).cast<cplx>();
      k.rho_coef = 1.0 / c2;
      k.z_bc = (-grav).cast<cplx>();
      k.src_scale = std::sqrt(s.rho);
      break;
    case Formulation::liouville_c:
      k.A = (shift / c2) * CMat3::Identity() + (outer / c2).cast<cplx>();
      k.beta = (grav / c2 - 0.5 * alpha_rho - alpha_c).cast<cplx>();
      k.rho_coef = 1.0;
      k.z_bc = (-grav / c2).cast<cplx>();
      k.src_scale = s.c * std::sqrt(s.rho);
      break;
  }
  const double scale = k.A.cwiseAbs().maxCoeff();
  if (!(scale > 0.0) || std::abs(k.A.determinant()) <= 1e-13 * scale * scale * scale)
    throw SingularError("coefficient matrix A is singular at r = " + std::to_string(r));
  return k;
}

double GaussianSource::operator()(const Vec3& x) const {
  const Spherical s = to_spherical(x);
  const double dr = (s.r - center.r) / sigma_r;
  const double dt = (s.theta - center.theta) / sigma_theta;
  double e = dr * dr + dt * dt;
  if (std::isfinite(sigma_phi)) {
    const double dp = wrap_angle(s.phi - center.phi) / sigma_phi;
    e += dp * dp;
  }
  return amplitude * std::exp(-e);
}

double source_gaussian(const GaussianSource& src, const Vec3& x) { return src(x); }

}  // namespace starwave

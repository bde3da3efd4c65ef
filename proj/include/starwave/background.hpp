#pragma once

#include <optional>
#include <string>
#include <vector>

#include "starwave/common.hpp"

namespace starwave {

/// Monotone piecewise cubic Hermite interpolant (Fritsch–Carlson slopes).
class MonotoneCubic {
 public:
  MonotoneCubic() = default;
  MonotoneCubic(std::vector<double> x, std::vector<double> y);

  double value(double x) const;
  double derivative(double x) const;
  bool empty() const { return x_.empty(); }

 private:
  std::size_t interval(double x) const;

  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> slope_;
};

/// Tabulated radial profiles rho0(r), c0(r), phi0(r) on a scaled radius
/// (surface = 1). Values are stored in scaled units: c0 in length_scale/s and
/// phi0 in length_scale^2/s^2, so gradients are taken per unit radius.
class RadialBackground {
 public:
  struct Sample {
    double rho = 0.0;
    double c = 0.0;
    double phi = 0.0;
    double drho = 0.0;  ///< d rho0 / dr
    double dc = 0.0;    ///< d c0 / dr
    double dphi = 0.0;  ///< d phi0 / dr, the radial gravity g(r)
  };

  RadialBackground() = default;

  /// Throws InputError on a non-increasing grid or non-positive rho0/c0.
  /// r_max defaults to the last grid radius.
  RadialBackground(std::vector<double> r, std::vector<double> rho0, std::vector<double> c0,
                   std::vector<double> phi0, double length_scale = 1.0,
                   std::optional<double> r_max = std::nullopt);

  static RadialBackground constant(double rho, double c, double r_max);

  Sample at(double r) const;

  double rho0(double r) const { return at(r).rho; }
  double c0(double r) const { return at(r).c; }
  double phi0(double r) const { return at(r).phi; }
  /// alpha_rho(r) = -rho0'/rho0.
  double alpha_rho(double r) const;
  /// g(r) = phi0'(r).
  double gravity(double r) const;

  double r_max() const { return r_max_; }
  double length_scale() const { return length_scale_; }
  const std::vector<double>& r_grid() const { return r_; }

 private:
  std::vector<double> r_;
  MonotoneCubic log_rho_;
  MonotoneCubic log_c_;
  MonotoneCubic phi_;
  double length_scale_ = 1.0;
  double r_max_ = 1.0;
};

/// Reads a CSV with header `r,rho0,c0,phi0` (any column order). c0 is divided by
/// length_scale and phi0 by length_scale^2.
RadialBackground load_radial_profile(const std::string& path, double length_scale = 1.0);

/// Writes the profile in the same CSV layout, in the scaled units it stores.
void save_radial_profile(const RadialBackground& bg, const std::string& path,
                         std::size_t samples = 1001);

/// Synthetic stratified star used by tests and the demo configs:
/// rho0 = exp(-rho_decay r), c0 = c_center (1 - c_drop r^2), phi0 = g r^2 / 2.
RadialBackground toy_star(double r_max = 1.001, double rho_decay = 20.0, double c_center = 1.0,
                          double c_drop = 0.0, double g = 1.0, std::size_t samples = 2001);

/// Regular latitude/longitude table with bilinear lookup and periodic longitude.
class SphericalTable {
 public:
  SphericalTable() = default;
  SphericalTable(std::vector<double> theta_deg, std::vector<double> phi_deg,
                 std::vector<double> values);

  double lookup(double theta, double phi) const;  ///< radians
  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& theta_deg() const { return theta_; }
  const std::vector<double>& phi_deg() const { return phi_; }
  bool empty() const { return values_.empty(); }

 private:
  std::vector<double> theta_;
  std::vector<double> phi_;
  std::vector<double> values_;  // theta-major
};

/// Regular (r, theta, phi) table with trilinear lookup.
class VolumeTable {
 public:
  VolumeTable() = default;
  VolumeTable(std::vector<double> r, std::vector<double> theta_deg, std::vector<double> phi_deg,
              std::vector<double> values);

  double lookup(double r, double theta, double phi) const;
  double r_lo() const { return r_.front(); }
  double r_hi() const { return r_.back(); }
  bool empty() const { return shells_.empty(); }

 private:
  std::vector<double> r_;
  std::vector<SphericalTable> shells_;
};

SphericalTable load_surface_map(const std::string& path);
VolumeTable load_volume_table(const std::string& path);

enum class PerturbationKind { none, active_region, volumetric };

class PerturbationField {
 public:
  PerturbationField() = default;

  static PerturbationField none() { return {}; }
  /// c = c0 (1 + alpha g(r) delta(theta, phi)), g a unit-peak Gaussian in r.
  static PerturbationField active_region(SphericalTable map, double r_center, double variance,
                                         double alpha);
  /// c = c0 (1 + alpha delta(r, theta, phi)), zero outside the table's radii.
  static PerturbationField volumetric(VolumeTable table, double alpha = 1.0);

  PerturbationKind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  const SphericalTable& surface_map() const { return map_; }
  double r_center() const { return r_center_; }
  double variance() const { return variance_; }

  /// Relative speed change c/c0 - 1 at x.
  double relative_change(const Vec3& x) const;

 private:
  PerturbationKind kind_ = PerturbationKind::none;
  SphericalTable map_;
  double r_center_ = 0.995;
  double variance_ = 8.5e-4;
  VolumeTable volume_;
  double alpha_ = 0.0;
};

enum class Formulation { original, liouville, liouville_c };

std::string to_string(Formulation f);
Formulation parse_formulation(const std::string& name);

struct SolverConfig {
  Formulation formulation = Formulation::liouville;
  double omega = 1.0;      ///< rad/s
  double gamma_att = 0.0;  ///< rad/s
  /// Empty means full-rank factorization.
  std::optional<double> eps_blr;
  bool mixed_precision = false;
  double tau_scale = 1e6;

  /// omega = 2 pi f, gamma = 2 pi gamma_att/(2 pi), frequencies in mHz / muHz.
  static SolverConfig from_physical(double frequency_mhz, double attenuation_uhz,
                                    Formulation formulation = Formulation::liouville);
  void validate() const;
};

/// Generic-form coefficients at one point.
struct CoefficientSet {
  CMat3 A = CMat3::Zero();
  CVec3 beta = CVec3::Zero();
  cplx rho_coef = 0.0;
  CVec3 z_bc = CVec3::Zero();
  double src_scale = 1.0;

  /// The advection vector of the continuity equation, -beta.
  CVec3 continuity_vector() const { return -beta; }
};

double perturbed_wavespeed(const RadialBackground& bg, const PerturbationField& pert,
                           const Vec3& x);

CoefficientSet eval_coefficients(const RadialBackground& bg, const PerturbationField& pert,
                                 const SolverConfig& cfg, const Vec3& x);

struct GaussianSource {
  Spherical center;  ///< r, latitude, longitude (radians)
  double sigma_r = 1e-2;
  double sigma_theta = 0.2;
  double sigma_phi = 0.2;  ///< +inf makes the source independent of longitude
  double amplitude = 1.0;

  double operator()(const Vec3& x) const;
};

double source_gaussian(const GaussianSource& src, const Vec3& x);

}  // namespace starwave

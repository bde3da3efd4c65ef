#pragma once

#include <string>
#include <vector>

#include "starwave/hdg.hpp"

namespace starwave {

enum class Locus { plane, arc, sphere };
std::string to_string(Locus locus);

/// xz-plane (y = 0) with x, z in [-half_width, half_width].
struct PlaneSpec {
  double half_width = 1.0;
  int nx = 201;
  int nz = 201;
};

/// x = (r cos theta, 0, r sin theta) at n interior points of theta in (-pi/2, pi/2).
struct ArcSpec {
  double radius = 0.9;
  int n = 179;
};

/// Latitude in [-90, 90] and longitude in [-180, 180] degrees, end points included.
struct SphereSpec {
  double radius = 0.9;
  int ntheta = 181;
  int nphi = 361;
};

/// Samples of a wavefield on a locus, stored row-major.
/// plane: rows follow z, columns follow x; arc: one row over theta;
/// sphere: rows follow latitude, columns follow longitude.
struct SampledField {
  Locus locus = Locus::plane;
  int rows = 0;
  int cols = 0;
  double radius = 0.0;
  std::vector<double> axis_rows;  ///< z, or latitude in radians
  std::vector<double> axis_cols;  ///< x, theta, or longitude in radians
  std::vector<Vec3> points;
  std::vector<char> inside;
  std::vector<cplx> w;   ///< zero where outside
  std::vector<CVec3> u;  ///< empty unless velocity was sampled

  std::size_t size() const { return points.size(); }
  std::size_t num_inside() const;
  /// Max |w| over inside samples.
  double max_modulus() const;
  /// Points on the locus, consistent sizes, finite values.
  void validate() const;
};

SampledField make_locus(const PlaneSpec& spec);
SampledField make_locus(const ArcSpec& spec);
SampledField make_locus(const SphereSpec& spec);

/// Evaluates the field at every locus point; points outside the mesh are
/// flagged and left at zero.
SampledField sample_field(const WaveField& field, const PointLocator& locator, SampledField locus,
                          bool with_velocity = false);

/// e(x) = |w_ref(x) - w_test(x)| / max_x |w_ref(x)|; NaN where either sample
/// is outside.
struct DifferenceMap {
  Locus locus = Locus::plane;
  int rows = 0;
  int cols = 0;
  double radius = 0.0;
  std::vector<double> axis_rows;
  std::vector<double> axis_cols;
  std::vector<Vec3> points;
  std::vector<double> e;
  double ref_norm = 0.0;

  double max() const;
  std::size_t argmax() const;
};

/// Throws DomainError if the coordinates differ or the reference is zero.
DifferenceMap relative_difference(const SampledField& ref, const SampledField& test);
DifferenceMap relative_difference_plane(const SampledField& ref, const SampledField& test);
DifferenceMap relative_difference_arc(const SampledField& ref, const SampledField& test);
DifferenceMap relative_difference_sphere(const SampledField& ref, const SampledField& test);

/// max |w - mean_phi w| / max |w| over a sphere locus. The duplicated
/// longitude column at +180 degrees is left out of the means.
double rotational_asymmetry(const SampledField& sphere);

/// VTK legacy 4.2 ASCII unstructured grid. Cells are written with their own
/// vertex copies so the field stays discontinuous; the cell coefficients are
/// stored as cell field data so that read_vtk restores the field exactly.
void write_vtk(const WaveField& field, const std::string& path,
               const std::string& title = "starwave wavefield");
/// Reads coefficients written by write_vtk onto a mesh with the same cells.
WaveField read_vtk(const Mesh& mesh, const std::string& path);

void write_csv(const SampledField& samples, const std::string& path);
void write_csv(const DifferenceMap& map, const std::string& path);

}  // namespace starwave

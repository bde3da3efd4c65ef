#include "starwave/postproc.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace starwave {

namespace {

constexpr double locus_tol = 1e-9;

double to_deg(double a) { return a * 180.0 / pi; }

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  return out;
}

template <class T>
void copy_layout(const SampledField& s, T& out) {
  out.locus = s.locus;
  out.rows = s.rows;
  out.cols = s.cols;
  out.radius = s.radius;
  out.axis_rows = s.axis_rows;
  out.axis_cols = s.axis_cols;
  out.points = s.points;
}

/// Coordinate columns of a CSV row for each locus.
std::string coordinate_header(Locus locus) {
  switch (locus) {
    case Locus::plane: return "x,y,z";
    case Locus::arc: return "x,y,z,theta_deg";
    case Locus::sphere: return "x,y,z,lat_deg,lon_deg";
  }
  return "x,y,z";
}

template <class T>
void write_coordinates(std::ostream& out, const T& s, std::size_t i) {
  const Vec3& x = s.points[i];
  out << x.x() << ',' << x.y() << ',' << x.z();
  const auto r = i / static_cast<std::size_t>(s.cols), c = i % static_cast<std::size_t>(s.cols);
  if (s.locus == Locus::arc) out << ',' << to_deg(s.axis_cols[c]);
  if (s.locus == Locus::sphere) out << ',' << to_deg(s.axis_rows[r]) << ',' << to_deg(s.axis_cols[c]);
}

}  // namespace

std::string to_string(Locus locus) {
  switch (locus) {
    case Locus::plane: return "plane";
    case Locus::arc: return "arc";
    case Locus::sphere: return "sphere";
  }
  return "?";
}

std::size_t SampledField::num_inside() const {
  return static_cast<std::size_t>(std::count(inside.begin(), inside.end(), char{1}));
}

double SampledField::max_modulus() const {
  double m = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (inside[i]) m = std::max(m, std::abs(w[i]));
  return m;
}

void SampledField::validate() const {
  const auto n = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  if (points.size() != n || inside.size() != n || w.size() != n || (!u.empty() && u.size() != n))
    throw DomainError("sampled field arrays do not match its " + std::to_string(rows) + " x " +
                      std::to_string(cols) + " layout");
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& x = points[i];
    const double scale = std::max(1.0, x.norm());
    bool on = true;
    switch (locus) {
      case Locus::plane: on = std::abs(x.y()) <= locus_tol * scale; break;
      case Locus::arc:
        on = std::abs(x.y()) <= locus_tol * scale && x.x() > 0.0 &&
             std::abs(x.norm() - radius) <= locus_tol * scale;
        break;
      case Locus::sphere: on = std::abs(x.norm() - radius) <= locus_tol * scale; break;
    }
    if (!on) throw DomainError("sample " + std::to_string(i) + " is not on the " + to_string(locus));
    if (!std::isfinite(w[i].real()) || !std::isfinite(w[i].imag()))
      throw DomainError("sample " + std::to_string(i) + " is not finite");
    if (!u.empty() && !u[i].allFinite()) throw DomainError("velocity sample " + std::to_string(i) + " is not finite");
  }
}

SampledField make_locus(const PlaneSpec& spec) {
  if (spec.nx < 2 || spec.nz < 2 || !(spec.half_width > 0.0))
    throw InputError("plane locus needs nx, nz >= 2 and a positive half width");
  SampledField s;
  s.locus = Locus::plane;
  s.rows = spec.nz;
  s.cols = spec.nx;
  for (int i = 0; i < spec.nz; ++i) s.axis_rows.push_back(-spec.half_width + 2.0 * spec.half_width * i / (spec.nz - 1));
  for (int j = 0; j < spec.nx; ++j) s.axis_cols.push_back(-spec.half_width + 2.0 * spec.half_width * j / (spec.nx - 1));
  for (double z : s.axis_rows)
    for (double x : s.axis_cols) s.points.emplace_back(x, 0.0, z);
  return s;
}

SampledField make_locus(const ArcSpec& spec) {
  if (spec.n < 1 || !(spec.radius > 0.0)) throw InputError("arc locus needs n >= 1 and a positive radius");
  SampledField s;
  s.locus = Locus::arc;
  s.rows = 1;
  s.cols = spec.n;
  s.radius = spec.radius;
  for (int j = 0; j < spec.n; ++j) {
    const double theta = -pi / 2 + pi * (j + 1) / (spec.n + 1);
    s.axis_cols.push_back(theta);
    s.points.emplace_back(spec.radius * std::cos(theta), 0.0, spec.radius * std::sin(theta));
  }
  return s;
}

SampledField make_locus(const SphereSpec& spec) {
  if (spec.ntheta < 2 || spec.nphi < 2 || !(spec.radius > 0.0))
    throw InputError("sphere locus needs ntheta, nphi >= 2 and a positive radius");
  SampledField s;
  s.locus = Locus::sphere;
  s.rows = spec.ntheta;
  s.cols = spec.nphi;
  s.radius = spec.radius;
  for (int i = 0; i < spec.ntheta; ++i) s.axis_rows.push_back(-pi / 2 + pi * i / (spec.ntheta - 1));
  for (int j = 0; j < spec.nphi; ++j) s.axis_cols.push_back(-pi + 2.0 * pi * j / (spec.nphi - 1));
  for (double lat : s.axis_rows)
    for (double lon : s.axis_cols) s.points.push_back(from_spherical(spec.radius, lat, lon));
  return s;
}

SampledField sample_field(const WaveField& field, const PointLocator& locator, SampledField locus,
                          bool with_velocity) {
  const std::size_t n = locus.points.size();
  locus.inside.assign(n, 0);
  locus.w.assign(n, cplx(0.0));
  locus.u.clear();
  if (with_velocity) locus.u.assign(n, CVec3::Zero());
  for (std::size_t i = 0; i < n; ++i) {
    const int e = locator.locate(locus.points[i]);
    if (e < 0) continue;
    const PointValue v = evaluate_in_cell(field, static_cast<std::size_t>(e), locus.points[i]);
    locus.inside[i] = 1;
    locus.w[i] = v.w;
    if (with_velocity) locus.u[i] = v.u;
  }
  return locus;
}

double DifferenceMap::max() const {
  double m = 0.0;
  for (double v : e)
    if (!std::isnan(v)) m = std::max(m, v);
  return m;
}

std::size_t DifferenceMap::argmax() const {
  std::size_t best = 0;
  double m = -1.0;
  for (std::size_t i = 0; i < e.size(); ++i)
    if (!std::isnan(e[i]) && e[i] > m) {
      m = e[i];
      best = i;
    }
  return best;
}

DifferenceMap relative_difference(const SampledField& ref, const SampledField& test) {
  if (ref.locus != test.locus || ref.rows != test.rows || ref.cols != test.cols ||
      ref.points.size() != test.points.size())
    throw DomainError("fields are sampled on different loci");
  for (std::size_t i = 0; i < ref.points.size(); ++i)
    if ((ref.points[i] - test.points[i]).norm() > locus_tol * std::max(1.0, ref.points[i].norm()))
      throw DomainError("sample coordinates differ at sample " + std::to_string(i));
  DifferenceMap m;
  copy_layout(ref, m);
  m.ref_norm = ref.max_modulus();
  if (m.ref_norm == 0.0) throw DomainError("reference field is zero on the locus");
  m.e.assign(ref.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < ref.size(); ++i)
    if (ref.inside[i] && test.inside[i]) m.e[i] = std::abs(ref.w[i] - test.w[i]) / m.ref_norm;
  return m;
}

namespace {
DifferenceMap difference_on(Locus locus, const SampledField& ref, const SampledField& test) {
  if (ref.locus != locus) throw DomainError("reference is sampled on a " + to_string(ref.locus) + ", not a " + to_string(locus));
  return relative_difference(ref, test);
}
}  // namespace

DifferenceMap relative_difference_plane(const SampledField& ref, const SampledField& test) {
  return difference_on(Locus::plane, ref, test);
}
DifferenceMap relative_difference_arc(const SampledField& ref, const SampledField& test) {
  return difference_on(Locus::arc, ref, test);
}
DifferenceMap relative_difference_sphere(const SampledField& ref, const SampledField& test) {
  return difference_on(Locus::sphere, ref, test);
}

double rotational_asymmetry(const SampledField& sphere) {
  if (sphere.locus != Locus::sphere) throw DomainError("rotational asymmetry needs a sphere locus");
  const double norm = sphere.max_modulus();
  if (norm == 0.0) throw DomainError("field is zero on the sphere");
  int cols = sphere.cols;
  if (cols > 1 && std::abs(sphere.axis_cols.back() - sphere.axis_cols.front() - 2.0 * pi) < 1e-12) --cols;
  double dev = 0.0;
  for (int r = 0; r < sphere.rows; ++r) {
    const auto row = static_cast<std::size_t>(r) * static_cast<std::size_t>(sphere.cols);
    cplx mean = 0.0;
    int count = 0;
    for (int c = 0; c < cols; ++c)
      if (sphere.inside[row + static_cast<std::size_t>(c)]) {
        mean += sphere.w[row + static_cast<std::size_t>(c)];
        ++count;
      }
    if (count == 0) continue;
    mean /= static_cast<double>(count);
    for (int c = 0; c < cols; ++c)
      if (sphere.inside[row + static_cast<std::size_t>(c)])
        dev = std::max(dev, std::abs(sphere.w[row + static_cast<std::size_t>(c)] - mean));
  }
  return dev / norm;
}

void write_vtk(const WaveField& field, const std::string& path, const std::string& title) {
  if (!field.mesh) throw DomainError("wavefield has no mesh");
  const Mesh& mesh = *field.mesh;
  const std::size_t nc = mesh.num_cells();
  std::ofstream out = open_out(path);
  out << "# vtk DataFile Version 4.2\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << 4 * nc << " double\n";
  for (std::size_t e = 0; e < nc; ++e)
    for (int v : mesh.cell(e)) {
      const Vec3& x = mesh.vertices()[static_cast<std::size_t>(v)];
      out << x.x() << ' ' << x.y() << ' ' << x.z() << '\n';
    }
  out << "CELLS " << nc << ' ' << 5 * nc << '\n';
  for (std::size_t e = 0; e < nc; ++e)
    out << "4 " << 4 * e << ' ' << 4 * e + 1 << ' ' << 4 * e + 2 << ' ' << 4 * e + 3 << '\n';
  out << "CELL_TYPES " << nc << '\n';
  for (std::size_t e = 0; e < nc; ++e) out << "10\n";

  std::vector<PointValue> vals;
  vals.reserve(4 * nc);
  for (std::size_t e = 0; e < nc; ++e)
    for (int v : mesh.cell(e)) vals.push_back(evaluate_in_cell(field, e, mesh.vertices()[static_cast<std::size_t>(v)]));
  out << "POINT_DATA " << 4 * nc << '\n';
  auto scalar = [&](const char* name, auto f) {
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (const auto& pv : vals) out << f(pv) << '\n';
  };
  scalar("w_real", [](const PointValue& pv) { return pv.w.real(); });
  scalar("w_imag", [](const PointValue& pv) { return pv.w.imag(); });
  scalar("w_abs", [](const PointValue& pv) { return std::abs(pv.w); });
  out << "VECTORS u_real double\n";
  for (const auto& pv : vals) out << pv.u.x().real() << ' ' << pv.u.y().real() << ' ' << pv.u.z().real() << '\n';
  out << "VECTORS u_imag double\n";
  for (const auto& pv : vals) out << pv.u.x().imag() << ' ' << pv.u.y().imag() << ' ' << pv.u.z().imag() << '\n';

  Eigen::Index width = 0;
  for (const auto& v : field.volume) width = std::max(width, v.size());
  out << "CELL_DATA " << nc << "\nSCALARS order int 1\nLOOKUP_TABLE default\n";
  for (std::size_t e = 0; e < nc; ++e) out << field.disc.cell_order(e) << '\n';
  out << "FIELD coefficients 2\n";
  for (int part = 0; part < 2; ++part) {
    out << (part == 0 ? "coeff_real " : "coeff_imag ") << width << ' ' << nc << " double\n";
    for (std::size_t e = 0; e < nc; ++e) {
      const VectorXc& v = field.volume[e];
      for (Eigen::Index i = 0; i < width; ++i) {
        const cplx c = i < v.size() ? v(i) : cplx(0.0);
        out << (part == 0 ? c.real() : c.imag()) << (i + 1 < width ? ' ' : '\n');
      }
    }
  }
  if (!out) throw InputError("failed writing " + path);
}

WaveField read_vtk(const Mesh& mesh, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path);
  const std::size_t nc = mesh.num_cells();
  std::string tok;
  auto expect_number = [&](auto& value, const char* what) {
    if (!(in >> value)) throw InputError(path + ": malformed " + what);
  };
  std::vector<int> orders;
  std::vector<std::vector<double>> parts(2);
  Eigen::Index width = 0;
  while (in >> tok) {
    if (tok == "POINTS") {
      std::size_t np;
      expect_number(np, "POINTS header");
      in >> tok;
      if (np != 4 * nc) throw InputError(path + ": written for a mesh with " + std::to_string(np / 4) + " cells, not " + std::to_string(nc));
      for (std::size_t e = 0; e < nc; ++e)
        for (int v : mesh.cell(e)) {
          Vec3 x;
          expect_number(x.x(), "point");
          expect_number(x.y(), "point");
          expect_number(x.z(), "point");
          const Vec3& y = mesh.vertices()[static_cast<std::size_t>(v)];
          if ((x - y).norm() > 1e-9 * std::max(1.0, y.norm()))
            throw InputError(path + ": cell " + std::to_string(e) + " does not match the mesh");
        }
    } else if (tok == "CELL_DATA") {
      std::size_t n;
      expect_number(n, "CELL_DATA header");
      if (n != nc) throw InputError(path + ": cell count mismatch");
      std::string name, type;
      in >> tok >> name >> type >> tok >> tok >> tok;  // SCALARS order int 1 LOOKUP_TABLE default
      if (name != "order") throw InputError(path + ": missing cell orders");
      orders.resize(nc);
      for (auto& p : orders) expect_number(p, "cell order");
    } else if (tok == "coeff_real" || tok == "coeff_imag") {
      const int part = tok == "coeff_real" ? 0 : 1;
      std::size_t n;
      expect_number(width, "coefficient header");
      expect_number(n, "coefficient header");
      in >> tok;
      if (n != nc) throw InputError(path + ": coefficient count mismatch");
      parts[static_cast<std::size_t>(part)].resize(static_cast<std::size_t>(width) * nc);
      for (auto& v : parts[static_cast<std::size_t>(part)]) expect_number(v, "coefficient");
    }
  }
  if (orders.empty() || parts[0].empty() || parts[1].empty())
    throw InputError(path + ": no cell coefficients (not written by starwave?)");
  WaveField f;
  f.mesh = &mesh;
  f.disc = Discretization(mesh, orders);
  f.volume.resize(nc);
  for (std::size_t e = 0; e < nc; ++e) {
    const int n = f.disc.cell_dofs(e);
    if (n > width) throw InputError(path + ": coefficient arrays too narrow for cell " + std::to_string(e));
    VectorXc v(n);
    for (int i = 0; i < n; ++i) {
      const std::size_t k = e * static_cast<std::size_t>(width) + static_cast<std::size_t>(i);
      v(i) = cplx(parts[0][k], parts[1][k]);
    }
    f.volume[e] = std::move(v);
  }
  return f;
}

void write_csv(const SampledField& s, const std::string& path) {
  std::ofstream out = open_out(path);
  out << coordinate_header(s.locus) << ",inside,w_real,w_imag,w_abs";
  if (!s.u.empty()) out << ",ux_real,ux_imag,uy_real,uy_imag,uz_real,uz_imag";
  out << '\n';
  for (std::size_t i = 0; i < s.size(); ++i) {
    write_coordinates(out, s, i);
    out << ',' << int(s.inside[i]) << ',' << s.w[i].real() << ',' << s.w[i].imag() << ',' << std::abs(s.w[i]);
    if (!s.u.empty())
      for (int d = 0; d < 3; ++d) out << ',' << s.u[i](d).real() << ',' << s.u[i](d).imag();
    out << '\n';
  }
  if (!out) throw InputError("failed writing " + path);
}

void write_csv(const DifferenceMap& m, const std::string& path) {
  std::ofstream out = open_out(path);
  out << coordinate_header(m.locus) << ",e\n";
  for (std::size_t i = 0; i < m.points.size(); ++i) {
    write_coordinates(out, m, i);
    out << ',' << m.e[i] << '\n';
  }
  if (!out) throw InputError("failed writing " + path);
}

}  // namespace starwave

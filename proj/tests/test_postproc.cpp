#include <gtest/gtest.h>

#include <Eigen/SparseLU>
#include <fstream>

#include "oracles.hpp"
#include "starwave/csv.hpp"
#include "starwave/postproc.hpp"
#include "test_util.hpp"

using namespace starwave;

namespace {

/// Field with every volume coefficient equal to c: Lagrange bases sum to one,
/// so u = (c, c, c) and w = c everywhere.
WaveField constant_field(const Mesh& mesh, int order, cplx c) {
  WaveField f;
  f.mesh = &mesh;
  f.disc = Discretization::uniform(mesh, order);
  for (std::size_t e = 0; e < mesh.num_cells(); ++e) f.volume.push_back(VectorXc::Constant(f.disc.cell_dofs(e), c));
  return f;
}

WaveField manufactured_field(const Mesh& mesh, int order) {
  const oracle::Manufactured mf;
  auto sys = assemble_system(mesh, Discretization::uniform(mesh, order), mf.problem());
  Eigen::SparseMatrix<cplx> K = sys.K.to_sparse();
  Eigen::SparseLU<Eigen::SparseMatrix<cplx>> lu(K);
  return reconstruct_volume(sys, lu.solve(VectorXc(sys.S.col(0))));
}

/// Synthetic samples with a given value per point.
template <class F>
SampledField synthetic(SampledField s, F value) {
  s.inside.assign(s.size(), 1);
  s.w.resize(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) s.w[i] = value(s.points[i], i);
  return s;
}

}  // namespace

TEST(Locus, LayoutsLieOnTheirLoci) {
  const auto plane = make_locus(PlaneSpec{1.0, 5, 3});
  EXPECT_EQ(plane.rows, 3);
  EXPECT_EQ(plane.cols, 5);
  EXPECT_EQ(plane.points[0], Vec3(-1.0, 0.0, -1.0));
  EXPECT_EQ(plane.points[14], Vec3(1.0, 0.0, 1.0));

  const auto arc = make_locus(ArcSpec{0.5, 3});
  EXPECT_NEAR(arc.axis_cols[0], -pi / 4, 1e-15);
  EXPECT_NEAR(arc.axis_cols[1], 0.0, 1e-15);
  EXPECT_TRUE(arc.points[1].isApprox(Vec3(0.5, 0.0, 0.0)));

  const auto sphere = make_locus(SphereSpec{});
  EXPECT_EQ(sphere.rows, 181);
  EXPECT_EQ(sphere.cols, 361);
  EXPECT_NEAR(sphere.axis_rows[91] - sphere.axis_rows[90], pi / 180, 1e-14);
  EXPECT_NEAR(sphere.axis_cols[1] - sphere.axis_cols[0], pi / 180, 1e-14);

  for (auto s : {plane, arc, sphere}) {
    s.inside.assign(s.size(), 1);
    s.w.assign(s.size(), cplx(1.0));
    EXPECT_NO_THROW(s.validate());
  }
  EXPECT_THROW(make_locus(PlaneSpec{1.0, 1, 4}), InputError);
  EXPECT_THROW(make_locus(SphereSpec{-1.0}), InputError);
}

TEST(Locus, ValidateRejectsOffLocusAndNonFinite) {
  auto s = synthetic(make_locus(ArcSpec{1.0, 4}), [](const Vec3&, std::size_t) { return cplx(1.0); });
  s.points[2].y() = 0.1;
  EXPECT_THROW(s.validate(), DomainError);
  s = synthetic(make_locus(SphereSpec{1.0, 5, 9}), [](const Vec3&, std::size_t) { return cplx(1.0); });
  s.w[7] = cplx(std::nan(""), 0.0);
  EXPECT_THROW(s.validate(), DomainError);
}

TEST(SampleField, ConstantFieldAndOutsideFlags) {
  const Mesh mesh = build_cube(2);
  const PointLocator loc(mesh);
  const cplx c(0.3, -1.2);
  // Plane y = 0 over [-1, 1]^2 meets the unit cube on its y = 0 face.
  const auto s = sample_field(constant_field(mesh, 2, c), loc, make_locus(PlaneSpec{1.0, 9, 9}), true);
  ASSERT_NO_THROW(s.validate());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Vec3& x = s.points[i];
    const bool in = x.x() >= 0.0 && x.z() >= 0.0;
    EXPECT_EQ(bool(s.inside[i]), in) << x.transpose();
    if (in) {
      EXPECT_NEAR(std::abs(s.w[i] - c), 0.0, 1e-12);
      EXPECT_NEAR((s.u[i] - CVec3::Constant(c)).norm(), 0.0, 1e-12);
    } else {
      EXPECT_EQ(s.w[i], cplx(0.0));
    }
  }
  EXPECT_EQ(s.num_inside(), 25u);
  EXPECT_NEAR(s.max_modulus(), std::abs(c), 1e-12);
}

TEST(SampleField, MatchesManufacturedSolution) {
  const Mesh mesh = build_cube(4);
  const PointLocator loc(mesh);
  const oracle::Manufactured mf;
  const auto s = sample_field(manufactured_field(mesh, 3), loc, make_locus(PlaneSpec{1.0, 21, 21}));
  double err = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s.inside[i]) err = std::max(err, std::abs(s.w[i] - mf.w(s.points[i])));
  EXPECT_LT(err, 1e-3);
}

TEST(RelativeDifference, IdentityIsZero) {
  auto ref = synthetic(make_locus(PlaneSpec{1.0, 7, 5}),
                       [](const Vec3& x, std::size_t) { return cplx(x.x(), x.z() + 2.0); });
  const auto m = relative_difference_plane(ref, ref);
  EXPECT_EQ(m.max(), 0.0);
}

TEST(RelativeDifference, DoubledFieldGivesNormalizedModulus) {
  auto ref = synthetic(make_locus(ArcSpec{0.8, 31}),
                       [](const Vec3& x, std::size_t) { return cplx(std::cos(3 * x.z()), x.x()); });
  auto test = ref;
  for (auto& w : test.w) w *= 2.0;
  const auto m = relative_difference_arc(ref, test);
  double norm = 0.0;
  for (const auto& w : ref.w) norm = std::max(norm, std::abs(w));
  for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(m.e[i], std::abs(ref.w[i]) / norm, 1e-15);
  EXPECT_DOUBLE_EQ(m.ref_norm, norm);
}

TEST(RelativeDifference, SinglePointMismatchIsLocal) {
  auto ref = synthetic(make_locus(SphereSpec{0.7, 19, 37}), [](const Vec3&, std::size_t i) { return cplx(1.0 + 0.01 * static_cast<double>(i % 7)); });
  auto test = ref;
  test.w[100] += cplx(0.0, 0.5);
  const auto m = relative_difference_sphere(ref, test);
  for (std::size_t i = 0; i < m.e.size(); ++i) {
    if (i == 100)
      EXPECT_GT(m.e[i], 0.0);
    else
      EXPECT_EQ(m.e[i], 0.0);
  }
  EXPECT_EQ(m.argmax(), 100u);
}

TEST(RelativeDifference, InvariantUnderCommonScaling) {
  auto ref = synthetic(make_locus(PlaneSpec{1.0, 6, 6}), [](const Vec3& x, std::size_t) { return cplx(x.x() + 1.5, x.z()); });
  auto test = synthetic(ref, [](const Vec3& x, std::size_t) { return cplx(x.x() + 1.4, 0.9 * x.z()); });
  const auto base = relative_difference(ref, test);
  const cplx k(-2.0, 3.0);
  for (auto& w : ref.w) w *= k;
  for (auto& w : test.w) w *= k;
  const auto scaled = relative_difference(ref, test);
  for (std::size_t i = 0; i < base.e.size(); ++i) EXPECT_NEAR(scaled.e[i], base.e[i], 1e-14);
}

TEST(RelativeDifference, ErrorsAndOutsideSamples) {
  auto ref = synthetic(make_locus(PlaneSpec{1.0, 4, 4}), [](const Vec3&, std::size_t) { return cplx(0.0); });
  EXPECT_THROW(relative_difference(ref, ref), DomainError);
  auto arc = synthetic(make_locus(ArcSpec{1.0, 16}), [](const Vec3&, std::size_t) { return cplx(1.0); });
  EXPECT_THROW(relative_difference(ref, arc), DomainError);
  EXPECT_THROW(relative_difference_plane(arc, arc), DomainError);
  auto moved = arc;
  moved.points[3] *= 1.01;
  EXPECT_THROW(relative_difference(arc, moved), DomainError);

  // Outside samples neither enter the norm nor the map.
  auto a = synthetic(make_locus(ArcSpec{1.0, 4}), [](const Vec3&, std::size_t i) { return cplx(i == 0 ? 100.0 : 1.0); });
  a.inside[0] = 0;
  auto b = a;
  b.w[1] = 0.0;
  const auto m = relative_difference(a, b);
  EXPECT_TRUE(std::isnan(m.e[0]));
  EXPECT_DOUBLE_EQ(m.ref_norm, 1.0);
  EXPECT_DOUBLE_EQ(m.e[1], 1.0);
}

TEST(RotationalAsymmetry, AxisymmetricAndPerturbedMaps) {
  const auto sphere = make_locus(SphereSpec{0.9, 37, 73});
  const auto sym = synthetic(sphere, [](const Vec3& x, std::size_t) { return cplx(std::cos(2 * x.z()), x.z()); });
  EXPECT_LT(rotational_asymmetry(sym), 1e-14);
  // f(lat) (1 + 0.1 cos phi): deviation 0.1 |f|, maximum 1.1 max|f|.
  const auto pert = synthetic(sphere, [](const Vec3& x, std::size_t) {
    const Spherical s = to_spherical(x);
    return cplx(2.0 + std::sin(s.theta)) * (1.0 + 0.1 * std::cos(s.phi));
  });
  EXPECT_NEAR(rotational_asymmetry(pert), 0.1 / 1.1, 1e-12);
  EXPECT_THROW(rotational_asymmetry(make_locus(ArcSpec{})), DomainError);
}

TEST(Export, VtkRoundTripRestoresCoefficients) {
  const Mesh mesh = build_cube(2);
  const WaveField field = manufactured_field(mesh, 2);
  const auto path = (testutil::temp_dir() / "field.vtk").string();
  write_vtk(field, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "# vtk DataFile Version 4.2");
  std::getline(in, line);
  std::getline(in, line);
  EXPECT_EQ(line, "ASCII");
  std::getline(in, line);
  EXPECT_EQ(line, "DATASET UNSTRUCTURED_GRID");

  const WaveField back = read_vtk(mesh, path);
  ASSERT_EQ(back.volume.size(), field.volume.size());
  for (std::size_t e = 0; e < mesh.num_cells(); ++e) {
    EXPECT_EQ(back.disc.cell_order(e), 2);
    EXPECT_EQ(back.volume[e], field.volume[e]) << e;
  }
  const Vec3 x(0.31, 0.62, 0.17);
  EXPECT_EQ(evaluate_field(back, x).w, evaluate_field(field, x).w);
  EXPECT_THROW(read_vtk(build_cube(1), path), InputError);
  EXPECT_THROW(read_vtk(mesh, path + ".missing"), InputError);
}

TEST(Export, CsvTablesHaveHeaders) {
  auto s = synthetic(make_locus(SphereSpec{1.0, 3, 5}), [](const Vec3& x, std::size_t) { return cplx(x.z(), 1.0); });
  const auto path = (testutil::temp_dir() / "sphere.csv").string();
  write_csv(s, path);
  const CsvTable t = read_csv(path);
  ASSERT_EQ(t.rows.size(), 15u);
  EXPECT_NEAR(t.column_values("lat_deg").front(), -90.0, 1e-12);
  EXPECT_NEAR(t.column_values("lon_deg").back(), 180.0, 1e-12);
  EXPECT_NEAR(t.column_values("w_imag")[4], 1.0, 0.0);

  auto test = s;
  test.w[0] = 0.0;
  const auto mpath = (testutil::temp_dir() / "map.csv").string();
  write_csv(relative_difference_sphere(s, test), mpath);
  const CsvTable m = read_csv(mpath);
  EXPECT_EQ(m.header.back(), "e");
  EXPECT_NEAR(m.column_values("e")[0], 1.0, 1e-15);
}

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "vortex/geometry.hpp"

using namespace vortex;

namespace {

// analytic perturbed ring and its φ-derivatives
struct RingParam {
    double R, a, zeta;
    int n;
    Vec3 d(double p, int k) const
    {
        // derivatives of r(φ) = R + a cos nφ
        double r[4] = {R + a * std::cos(n * p), -a * n * std::sin(n * p), -a * n * n * std::cos(n * p),
                       a * n * n * n * std::sin(n * p)};
        double c[4] = {std::cos(p), -std::sin(p), -std::cos(p), std::sin(p)};
        double s[4] = {std::sin(p), std::cos(p), -std::sin(p), -std::cos(p)};
        double z[4] = {a * zeta * std::sin(n * p), a * zeta * n * std::cos(n * p), -a * zeta * n * n * std::sin(n * p),
                       -a * zeta * n * n * n * std::cos(n * p)};
        const int binom[4][4] = {{1, 0, 0, 0}, {1, 1, 0, 0}, {1, 2, 1, 0}, {1, 3, 3, 1}};
        Vec3 out{0, 0, z[k]};
        for (int j = 0; j <= k; ++j) {
            out.x += binom[k][j] * r[j] * c[k - j];
            out.y += binom[k][j] * r[j] * s[k - j];
        }
        return out;
    }
};

template <class F>
double integrate(F f, double a, double b)
{
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-13);
}

} // namespace

TEST(Resample, EllipseLengthMatchesEllipticIntegral)
{
    ClosedCurve c = make_ellipse(2, 1, 256);
    double e = std::sqrt(1 - 0.25);
    EXPECT_NEAR(c.length, 4 * 2 * std::comp_ellint_2(e), 1e-10);
}

TEST(Resample, NodesAreEquispacedInArclength)
{
    ClosedCurve c = make_ellipse(2, 1, 128);
    // chord between consecutive nodes is the same everywhere only up to curvature; use a fine resample
    ClosedCurve fine = resample_arclength(c, 1024);
    double h = fine.spacing();
    for (int j = 0; j < fine.size(); ++j) {
        double chord = norm(fine.nodes[(j + 1) % fine.size()] - fine.nodes[j]);
        EXPECT_NEAR(chord, h, 1e-4);
    }
}

TEST(Resample, Idempotent)
{
    ClosedCurve c = make_perturbed_ring(1, 3, 0.05, 1, 256);
    ClosedCurve d = resample_arclength(c, 256);
    for (int j = 0; j < c.size(); ++j) EXPECT_LT(norm(c.nodes[j] - d.nodes[j]), 1e-10);
    EXPECT_NEAR(c.length, d.length, 1e-12);
}

TEST(Resample, Errors)
{
    std::vector<Vec3> open;
    for (int i = 0; i < 50; ++i) open.push_back({i * 0.1, 0, 0});
    EXPECT_THROW(resample_arclength(open, 64), DomainError);
    EXPECT_THROW(make_circle(1, 8), ConfigError);
    std::vector<Vec3> tiny{{0, 0, 0}, {1, 0, 0}};
    EXPECT_THROW(resample_arclength(tiny, 32), DomainError);
}

TEST(Resample, ClosingDuplicateIsDropped)
{
    std::vector<Vec3> pts;
    for (int i = 0; i <= 200; ++i) {
        double p = 2 * pi * i / 200;
        pts.push_back({std::cos(p), std::sin(p), 0});
    }
    ClosedCurve c = resample_arclength(pts, 64);
    EXPECT_NEAR(c.length, 2 * pi, 1e-10);
}

TEST(Curves, FromFile)
{
    auto path = std::filesystem::temp_directory_path() / "vortex_curve_test.csv";
    {
        std::ofstream f(path);
        f.precision(17);
        f << "x,y,z\n";
        for (int i = 0; i < 300; ++i) {
            double p = 2 * pi * i / 300;
            f << 2 * std::cos(p) << "," << 2 * std::sin(p) << ",0\n";
        }
    }
    CurveSpec spec;
    spec.type = "from-file";
    spec.file = path.string();
    ClosedCurve c = make_curve(spec, 128);
    EXPECT_NEAR(c.length, 4 * pi, 1e-9);
    std::filesystem::remove(path);
    spec.file = "/nonexistent/curve.csv";
    EXPECT_THROW(make_curve(spec, 128), ConfigError);
    spec.type = "trefoil";
    EXPECT_THROW(make_curve(spec, 128), ConfigError);
}

TEST(Frames, CircleCurvatureAndTorsion)
{
    FrameField f = compute_frames(make_circle(2.0, 64));
    for (int j = 0; j < 64; ++j) {
        EXPECT_NEAR(f.kappa[j], 0.5, 1e-12);
        EXPECT_NEAR(f.tau[j], 0.0, 1e-12);
        EXPECT_NEAR(std::abs(f.b[j].z), 1.0, 1e-12);
    }
}

TEST(Frames, TotalCurvatureAndTorsionMatchAnalyticParametrisation)
{
    RingParam rp{1.0, 0.05, 1.0, 3};
    auto kappa_ds = [&](double p) {
        Vec3 d1 = rp.d(p, 1), d2 = rp.d(p, 2);
        double sp = norm(d1);
        return norm(cross(d1, d2)) / (sp * sp * sp) * sp;
    };
    auto tau_ds = [&](double p) {
        Vec3 d1 = rp.d(p, 1), d2 = rp.d(p, 2), d3 = rp.d(p, 3);
        Vec3 c = cross(d1, d2);
        return dot(c, d3) / dot(c, c) * norm(d1);
    };
    auto speed = [&](double p) { return norm(rp.d(p, 1)); };
    double L = integrate(speed, 0, 2 * pi);
    double K = integrate(kappa_ds, 0, 2 * pi);
    double T = integrate(tau_ds, 0, 2 * pi);
    ClosedCurve c = make_perturbed_ring(1.0, 3, 0.05, 1.0, 256);
    FrameField f = compute_frames(c);
    double Kn = 0, Tn = 0;
    for (int j = 0; j < c.size(); ++j) {
        Kn += f.kappa[j];
        Tn += f.tau[j];
    }
    EXPECT_NEAR(c.length, L, 1e-10);
    EXPECT_NEAR(Kn * c.spacing(), K, 1e-9);
    EXPECT_NEAR(Tn * c.spacing(), T, 1e-9);
}

TEST(Frames, ParallelFrameOrthonormalAndHolonomy)
{
    ClosedCurve c = make_perturbed_ring(1.0, 3, 0.05, 1.0, 256);
    FrameField f = compute_frames(c);
    double total_tau = 0;
    for (int j = 0; j < c.size(); ++j) {
        EXPECT_NEAR(dot(f.e1[j], f.e1[j]), 1, 1e-10);
        EXPECT_NEAR(dot(f.e2[j], f.e2[j]), 1, 1e-10);
        EXPECT_NEAR(dot(f.e1[j], f.e2[j]), 0, 1e-10);
        EXPECT_NEAR(dot(f.e1[j], f.t[j]), 0, 1e-10);
        total_tau += f.tau[j];
    }
    total_tau *= c.spacing();
    EXPECT_NEAR(std::remainder(f.holonomy + total_tau, 2 * pi), 0.0, 1e-6);
    // e1 is parallel: its derivative has no normal-plane component (e1 jumps by the holonomy at the seam)
    const double h = c.spacing();
    for (int j = 2; j < c.size() - 2; ++j) {
        Vec3 de1 = (f.e1[j - 2] - 8.0 * f.e1[j - 1] + 8.0 * f.e1[j + 1] - f.e1[j + 2]) / (12 * h);
        EXPECT_NEAR(dot(de1, f.e2[j]), 0, 1e-6);
    }
}

TEST(Frames, ParallelFrameRelatesToFrenetByTorsionAngle)
{
    ClosedCurve c = make_perturbed_ring(1.0, 2, 0.1, 1.0, 256);
    FrameField f = compute_frames(c);
    for (int j = 0; j < c.size(); j += 16) {
        double phi = std::atan2(dot(f.e1[j], f.b[j]), dot(f.e1[j], f.n[j]));
        double expected = -f.theta0[j] + std::atan2(dot(f.e1[0], f.b[0]), dot(f.e1[0], f.n[0]));
        EXPECT_NEAR(std::remainder(phi - expected, 2 * pi), 0.0, 1e-6);
    }
}

TEST(Frames, DegenerateCurvatureThrows)
{
    // amplitude 1/(n²+1) puts an inflection at φ = π
    EXPECT_THROW(compute_frames(make_perturbed_ring(1.0, 3, 0.1, 1.0, 256)), DegenerateFrameError);
}

TEST(TubeRadius, Circle)
{
    ClosedCurve c = make_circle(1, 64);
    TubeRadius t = tube_radius(c, compute_frames(c), 1.0);
    EXPECT_NEAR(t.self_distance, 2.0, 1e-9);
    EXPECT_NEAR(t.curvature_bound, 0.5, 1e-12);
    EXPECT_NEAR(t.R, 0.5, 1e-12);
    EXPECT_FALSE(t.self_distance_branch);
    EXPECT_THROW(tube_radius(c, compute_frames(c), 0.0), ConfigError);
}

TEST(TubeRadius, NearlyTouchingStrandsUseSelfDistance)
{
    ClosedCurve c = make_perturbed_ring(1, 2, 0.8, 0, 512);
    TubeRadius t = tube_radius(c, compute_frames(c), 1.0);
    // the pinched waist has half-width 1 - 0.8 = 0.2 at φ = ±π/2
    EXPECT_NEAR(t.self_distance, 0.4, 1e-3);
    EXPECT_TRUE(t.self_distance_branch || t.curvature_bound < 0.2);
    EXPECT_LE(t.R, 0.2 + 1e-9);
}

TEST(TubeRadius, UnderResolvedFlag)
{
    ClosedCurve c = make_circle(1, 64);
    EXPECT_TRUE(tube_radius(c, compute_frames(c), 1.0, 0.1).under_resolved);
    EXPECT_FALSE(tube_radius(c, compute_frames(c), 1.0, 0.01).under_resolved);
}

TEST(Projection, RoundTripOnRandomTubePoints)
{
    Filament fil(make_perturbed_ring(1.0, 3, 0.05, 1.0, 256));
    TubeChart chart{tube_radius(fil.curve(), fil.frames(), 0.5).R};
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(0, 1);
    for (int i = 0; i < 1000; ++i) {
        TubePoint p{U(rng) * fil.length(), 0.95 * chart.R * U(rng), 2 * pi * U(rng) - pi, 0};
        Vec3 x = reconstruct(fil, p);
        TubePoint q = project_to_tube(chart, fil, x);
        ASSERT_LT(norm(reconstruct(fil, q) - x), 1e-8);
        ASSERT_NEAR(std::remainder(q.s - p.s, fil.length()), 0, 1e-8);
        ASSERT_NEAR(q.r, p.r, 1e-8);
        if (p.r > 1e-6) ASSERT_NEAR(std::remainder(q.theta - p.theta, 2 * pi), 0, 1e-6);
    }
}

TEST(Projection, OutsideTube)
{
    Filament fil(make_circle(1, 64));
    TubeChart chart{0.25};
    EXPECT_THROW(project_to_tube(chart, fil, {1.5, 0, 0}), OutOfChartError);
    EXPECT_FALSE(try_project_to_tube(chart, fil, {0, 0, 0}).has_value());
    auto p = try_project_to_tube(chart, fil, {1.1, 0, 0}, 1e-4);
    ASSERT_TRUE(p.has_value());
    EXPECT_NEAR(p->r, 0.1, 1e-12);
    EXPECT_NEAR(p->rho, 10.0, 1e-9);
    // outward radial direction is -n on a circle
    EXPECT_NEAR(std::abs(p->theta), pi, 1e-9);
}

TEST(Projection, ParallelAngleShift)
{
    EXPECT_DOUBLE_EQ(parallel_angle(0.3, 0.2), 0.5);
}

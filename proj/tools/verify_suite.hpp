#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "vortex/biot_savart.hpp"
#include "vortex/correction.hpp"
#include "vortex/dynamics.hpp"
#include "vortex/field.hpp"
#include "vortex/geometry.hpp"
#include "vortex/profiles.hpp"

namespace vortex::verify {

struct Check {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0;
};

template <class... Args>
std::string fmt(const char* f, Args... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

inline Check f_at_origin()
{
    Check c{1, "F(0) closed form"};
    auto t0 = std::chrono::steady_clock::now();
    double expected = 2 * pi * (2 * std::log(2.0) - euler_gamma);
    double mean = special_F(0);
    double direct = special_F_direct(0).value;
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    double e1 = std::abs(mean - expected), e2 = std::abs(direct - expected);
    c.pass = e1 < 1e-6 && e2 < 1e-6 && secs < 1.0;
    c.detail = fmt("F(0)=%.10f direct=%.10f expected=%.10f errors %.1e/%.1e in %.3fs", mean, direct, expected, e1, e2, secs);
    return c;
}

inline Check f_asymptotics()
{
    Check c{2, "F(20) logarithmic asymptotics"};
    double r = std::abs(special_F(20) - 4 * pi * std::log(20.0));
    c.pass = r < 1e-8;
    c.detail = fmt("|F(20) - 4 pi log 20| = %.2e", r);
    return c;
}

inline Check unit_circle_vstar()
{
    Check c{3, "unit circle desingularized velocity"};
    auto t0 = std::chrono::steady_clock::now();
    Filament fil(make_circle(1.0, 2048));
    auto r = desingularized_velocity(fil, 1.0, 0.0);
    Vec3 expected = std::log(4.0) / (4 * pi) * fil.frames().b[0];
    double rel = norm(r.v - expected) / norm(r.v);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.pass = rel < 1e-4 && secs < 5.0;
    c.detail = fmt("|v*|=%.9f expected %.9f relative gap %.2e in %.2fs", norm(r.v), norm(expected), rel, secs);
    return c;
}

inline Check ring_speed()
{
    Check c{4, "ring centre speed vs tube quadrature"};
    auto t0 = std::chrono::steady_clock::now();
    Filament fil(make_circle(1.0, 256));
    FlowParams p{1.0, 10.0, 1e-5};
    TubeChart chart{tube_radius(fil.curve(), fil.frames(), 1.0).R};
    LocalFrame fr = fil.frame_at(0);
    Vec3 v = tube_velocity_quadrature(fil, chart, p, fr.x);
    TubeQuadratureOptions with_dipole;
    with_dipole.dipole = true;
    Vec3 vd = tube_velocity_quadrature(fil, chart, p, fr.x, with_dipole);
    double predicted = center_velocity_coefficient(1.0, 1.0, p.nu_t()) + ring_vstar(1.0, 1.0);
    double gap = std::abs(dot(v, fr.b) - predicted) / predicted;
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.pass = gap < 0.02 && secs < 120;
    c.detail = fmt("quadrature %.8f predicted %.8f gap %.2e (with dipole %.8f) in %.1fs", dot(v, fr.b), predicted, gap,
                   dot(vd, fr.b), secs);
    return c;
}

inline Check dipole_lemma()
{
    Check c{5, "mode ODE closed-form dipole"};
    const double k = 1.3, G = 1.0;
    RadialMode f{1, Parity::cos, [&](double r) { return -k * omega0_prime(r, G); }};
    auto y = solve_mode_ode(f);
    double e = 0;
    for (int i = 0; i <= 10000; ++i) {
        double r = 10.0 * i / 10000;
        e = std::max(e, std::abs(y(r) - 0.5 * k * dipole_omega(r, G)));
    }
    c.pass = e < 1e-8;
    c.detail = fmt("sup error on [0,10] %.2e", e);
    return c;
}

inline Check fixed_point()
{
    Check c{6, "correction fixed point"};
    double vb = ring_vstar(1.0, 1.0);
    bool ok = true;
    std::vector<double> scaled;
    std::string d;
    for (double nu : {100.0, 10.0}) {
        auto pair = solve_omega1_2(build_force_modes(1.0, 0.0, vb, 1.0, nu));
        ok = ok && pair.iterations <= 30 && pair.contraction_estimate < 0.5 && std::isfinite(pair.weighted_norm);
        scaled.push_back(pair.weighted_norm * nu);
        d += fmt("G/nu=%.2f: %d sweeps, ratio %.1e, norm %.4e; ", 1.0 / nu, pair.iterations, pair.contraction_estimate,
                 pair.weighted_norm);
    }
    double spread = std::abs(scaled[0] / scaled[1] - 1);
    c.pass = ok && spread < 0.1;
    c.detail = d + fmt("norm*nu/G^2 ratio deviation %.2e", spread);
    return c;
}

inline OperatorAInputs operator_a_setup(double nu_t, bool corrections, const CorrectionPair* pair)
{
    OperatorAInputs in;
    in.kappa = 1.0;
    in.vstar_b = ring_vstar(1.0, 1.0);
    in.params = {1.0, 10.0, nu_t / 10.0};
    in.correction = corrections ? pair : nullptr;
    return in;
}

inline Check operator_a_scaling()
{
    Check c{7, "operator A residual exponents"};
    auto pair = solve_omega1_2(build_force_modes(1.0, 0.0, ring_vstar(1.0, 1.0), 1.0, 10.0));
    auto slope = [&](bool corr) {
        double a = operator_A_residual(operator_a_setup(1e-4, corr, &pair)).scaled;
        double b = operator_A_residual(operator_a_setup(1e-5, corr, &pair)).scaled;
        return std::log(b / a) / std::log(1e-5 / 1e-4);
    };
    double lead = slope(false), corr = slope(true);
    c.pass = std::abs(lead + 1.5) <= 0.05 && std::abs(corr + 1.0) <= 0.1;
    c.detail = fmt("leading-order exponent %.4f, with corrections %.4f", lead, corr);
    return c;
}

inline Check straight_filament()
{
    Check c{8, "straight Lamb-Oseen residual"};
    OperatorAInputs in;
    in.kappa = 0;
    in.params = {1.0, 10.0, 1e-5};
    auto r = operator_A_residual(in);
    c.pass = r.relative < 1e-10;
    c.detail = fmt("sup|A|/sup|dw/dt| = %.2e (absolute %.2e)", r.relative, r.sup_abs);
    return c;
}

inline Check ring_oscillation()
{
    Check c{9, "perturbed ring oscillation frequency"};
    auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    for (int n : {2, 3}) {
        KTState s = kt_state_from_curve(make_perturbed_ring(1.0, n, 1e-3, 0.0, 128));
        double w = ring_mode_frequency(n, 1.0, 1.0);
        std::vector<double> ts{0}, pr{mode_projection(s.kappa, n)};
        kt_evolve(s, 1.0, 3 * 2 * pi / w, 3000, [&](const KTState& st) {
            ts.push_back(st.t_prime);
            pr.push_back(mode_projection(st.kappa, n));
        });
        double wm = measured_mode_frequency(ts, pr);
        double rel = std::abs(wm / w - 1);
        ok = ok && rel < 0.02;
        c.detail += fmt("n=%d: %.6f vs %.6f (%.1e); ", n, wm, w, rel);
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.pass = ok && secs < 60;
    c.detail += fmt("%.2fs", secs);
    return c;
}

inline Check geometry_suite(unsigned seed = 12345)
{
    Check c{10, "geometry round trip, frames, holonomy"};
    Filament fil(make_perturbed_ring(1.0, 3, 0.05, 1.0, 256));
    TubeChart chart{tube_radius(fil.curve(), fil.frames(), 0.5).R};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0, 1);
    double round = 0;
    for (int i = 0; i < 1000; ++i) {
        TubePoint p{U(rng) * fil.length(), 0.95 * chart.R * U(rng), 2 * pi * U(rng) - pi, 0};
        Vec3 x = reconstruct(fil, p);
        TubePoint q = project_to_tube(chart, fil, x);
        round = std::max(round, norm(reconstruct(fil, q) - x));
        double ds = std::remainder(q.s - p.s, fil.length());
        round = std::max({round, std::abs(ds), std::abs(q.r - p.r)});
    }
    const auto& f = fil.frames();
    double ortho = 0;
    for (int j = 0; j < fil.size(); ++j) {
        ortho = std::max({ortho, std::abs(dot(f.e1[j], f.e1[j]) - 1), std::abs(dot(f.e2[j], f.e2[j]) - 1),
                          std::abs(dot(f.e1[j], f.e2[j])), std::abs(dot(f.e1[j], f.t[j])), std::abs(dot(f.e2[j], f.t[j]))});
    }
    double total_tau = 0;
    for (double v : f.tau) total_tau += v;
    total_tau *= fil.curve().spacing();
    double hol = std::abs(std::remainder(f.holonomy + total_tau, 2 * pi));
    c.pass = round < 1e-8 && ortho < 1e-10 && hol < 1e-6;
    c.detail = fmt("round trip %.1e, orthonormality %.1e, holonomy mismatch %.1e", round, ortho, hol);
    return c;
}

inline Check planar_consistency()
{
    Check c{11, "stream solve and dipole curl"};
    RadialMode om{0, Parity::none, [](double r) { return omega0(r); }};
    auto v = solve_stream_mode0(om);
    double e0 = 0;
    for (int i = 0; i <= 2000; ++i) {
        double r = 10.0 * i / 2000;
        e0 = std::max(e0, std::abs(v(r) - v0(r)));
    }
    double e1 = 0;
    const double h = 1e-5;
    for (int i = 1; i <= 80; ++i) {
        double r = 0.1 * i;
        for (int j = 0; j < 8; ++j) {
            double th = 2 * pi * j / 8;
            auto rvt = [&](double rr) { return rr * dipole_fields(rr, th).vtheta; };
            double dr = (rvt(r + h) - rvt(r - h)) / (2 * h);
            double dth = (dipole_fields(r, th + h).vr - dipole_fields(r, th - h).vr) / (2 * h);
            double curl = (dr - dth) / r;
            e1 = std::max(e1, std::abs(curl - dipole_fields(r, th).omega));
        }
    }
    c.pass = e0 < 1e-8 && e1 < 1e-6;
    c.detail = fmt("azimuthal velocity error %.1e, dipole curl error %.1e", e0, e1);
    return c;
}

inline Check h_sign()
{
    Check c{12, "H(0) sign"};
    auto r = special_H_quadrature(0);
    double e = std::abs(r.value + 2 * pi);
    c.pass = e < 1e-4;
    c.detail = fmt("H(0)=%.10f vs -2pi (error %.1e); the stated positive value 2pi is contradicted", r.value, e);
    return c;
}

inline Check circulation()
{
    Check c{13, "circulation of the assembled field"};
    Filament fil(make_circle(1.0, 256));
    FlowParams p{1.0, 1.0, 1e-4};
    bool ok = true;
    for (double ratio : {64.0, 100.0, 144.0}) {
        double R = std::sqrt(ratio * p.nu_t());
        TubeChart chart{R};
        double full = disc_circulation(fil, chart, p, 0.3, R);
        double half = disc_circulation(fil, chart, p, 0.3, 0.5 * R);
        double e = std::abs(full - p.gamma);
        ok = ok && e < 1e-4;
        c.detail += fmt("R^2/nut=%g: |G - disc(R)| %.1e, |G - disc(R/2)| %.1e; ", ratio, e, std::abs(half - p.gamma));
    }
    c.pass = ok;
    return c;
}

struct Entry {
    int id;
    std::function<Check()> run;
};

inline const std::vector<Entry>& registry()
{
    static const std::vector<Entry> r{
        {1, f_at_origin},       {2, f_asymptotics},     {3, unit_circle_vstar},  {4, ring_speed},
        {5, dipole_lemma},      {6, fixed_point},       {7, operator_a_scaling}, {8, straight_filament},
        {9, ring_oscillation},  {10, [] { return geometry_suite(); }}, {11, planar_consistency}, {12, h_sign},
        {13, circulation},
    };
    return r;
}

inline Check run_one(const Entry& e)
{
    auto t0 = std::chrono::steady_clock::now();
    Check c;
    try {
        c = e.run();
    } catch (const std::exception& ex) {
        c.id = e.id;
        c.name = "check " + std::to_string(e.id);
        c.pass = false;
        c.detail = std::string("error: ") + ex.what();
    }
    c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return c;
}

inline std::vector<Check> run_all(const std::function<void(const Check&)>& progress = {})
{
    std::vector<Check> out;
    for (const auto& e : registry()) {
        out.push_back(run_one(e));
        if (progress) progress(out.back());
    }
    return out;
}

} // namespace vortex::verify

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "vortex/biot_savart.hpp"
#include "vortex/correction.hpp"
#include "vortex/errors.hpp"
#include "vortex/geometry.hpp"
#include "vortex/profiles.hpp"
#include "vortex/quadrature.hpp"
#include "vortex/vec3.hpp"

namespace vortex {

// 1 on [0, R/2], 0 beyond R, quintic smoothstep in between
inline double eta_cutoff(double d, double R)
{
    if (d <= 0.5 * R) return 1.0;
    if (d >= R) return 0.0;
    double u = (d - 0.5 * R) / (0.5 * R);
    return 1.0 - u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
}

struct ExpansionOptions {
    bool dipole = true;
    const CorrectionField* correction = nullptr;
};

// tangential vorticity magnitude without the cutoff
inline double expansion_magnitude(double s, double rho, double theta, double kappa, const FlowParams& p,
                                  const ExpansionOptions& opt)
{
    const double T = p.nu_t();
    const double sq = std::sqrt(T);
    double w = omega0(rho, p.gamma) / T;
    if (opt.dipole) w += omega1_local(rho, theta, kappa, p.gamma) / sq;
    if (opt.correction && !opt.correction->empty())
        w += (opt.correction->omega_c(s, rho) * std::cos(theta) + opt.correction->omega_s(s, rho) * std::sin(theta)) / sq;
    return w;
}

inline Vec3 vorticity_expansion(const Vec3& x, const Filament& fil, const TubeChart& chart, const FlowParams& p,
                                const ExpansionOptions& opt = {})
{
    check_expansion_regime(p.nu_t());
    auto tp = try_project_to_tube(chart, fil, x, p.nu_t());
    if (!tp) return {};
    double eta = eta_cutoff(tp->r, chart.R);
    if (eta == 0) return {};
    LocalFrame fr = fil.frame_at(tp->s);
    return eta * expansion_magnitude(tp->s, tp->rho, tp->theta, fr.kappa, p, opt) * fr.t;
}

// correction pairs at equispaced stations from the local curvature and desingularized velocity
inline CorrectionField build_correction_field(const Filament& fil, double gamma, double nu, int stations,
                                              const QuadratureSpec& spec = {}, const PicardOptions& opt = {})
{
    if (stations < 1) throw ConfigError("correction stations must be positive");
    std::vector<double> s;
    std::vector<CorrectionPair> pairs;
    for (int i = 0; i < stations; ++i) {
        double si = fil.length() * i / stations;
        LocalFrame fr = fil.frame_at(si);
        Vec3 vs = desingularized_velocity(fil, gamma, si, spec).v;
        auto force = build_force_modes(fr.kappa, dot(vs, fr.n), dot(vs, fr.b), gamma, nu);
        s.push_back(si);
        pairs.push_back(solve_omega1_2(force, opt));
    }
    return CorrectionField(std::move(s), std::move(pairs), fil.length());
}

struct PeakShift {
    double physical = 0; // signed offset along n of the |ω| maximiser
    double scaled = 0;   // the same offset divided by √(νt)
};

// argmax of the two-term field along the normal line through the filament
inline PeakShift peak_displacement(double kappa, const FlowParams& p)
{
    check_expansion_regime(p.nu_t());
    const double T = p.nu_t(), sq = std::sqrt(T);
    auto neg = [&](double q) {
        double rho = std::abs(q) / sq;
        double theta = q >= 0 ? 0.0 : pi;
        return -(omega0(rho, p.gamma) / T + omega1_local(rho, theta, kappa, p.gamma) / sq);
    };
    auto r = boost::math::tools::brent_find_minima(neg, -2 * sq, 2 * sq, 52);
    return {r.first, r.first / sq};
}

struct DiscOptions {
    int theta_points = 64;
    int gauss_points = 16;
};

// ∫∫ ω·t over the normal disc of radius `radius` at s0, with the field evaluated through the tube chart
inline double disc_circulation(const Filament& fil, const TubeChart& chart, const FlowParams& p, double s0,
                               double radius, const ExpansionOptions& opt = {}, const DiscOptions& d = {})
{
    const double sq = std::sqrt(p.nu_t());
    LocalFrame fr = fil.frame_at(s0);
    std::vector<double> edges;
    for (double e : {0.0, 0.25, 0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0, 12.0}) {
        double r = e * sq;
        if (r < std::min(radius, 0.5 * chart.R)) edges.push_back(r);
    }
    double inner_end = std::min(radius, 0.5 * chart.R);
    edges.push_back(inner_end);
    if (radius > inner_end)
        for (int k = 1; k <= 4; ++k) edges.push_back(inner_end + (radius - inner_end) * k / 4.0);
    const auto& rule = quad::gauss_legendre<16>();
    double total = 0;
    for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
        double a = edges[e], b = edges[e + 1];
        if (b <= a) continue;
        for (std::size_t i = 0; i < rule.x.size(); ++i) {
            double r = 0.5 * (a + b) + 0.5 * (b - a) * rule.x[i];
            double ring = 0;
            for (int j = 0; j < d.theta_points; ++j) {
                double th = 2 * pi * j / d.theta_points;
                Vec3 x = fr.x + r * std::cos(th) * fr.n + r * std::sin(th) * fr.b;
                ring += dot(vorticity_expansion(x, fil, chart, p, opt), fr.t);
            }
            total += 0.5 * (b - a) * rule.w[i] * r * ring * (2 * pi / d.theta_points);
        }
    }
    return total;
}

struct OperatorAResult {
    double sup_abs = 0;     // sup |A|
    double scaled = 0;      // sup |A| / ((1+ρ⁴)e^{-ρ²/4})
    double normalized = 0;  // scaled · νt
    double fd_scaled = 0;   // the same with finite-difference second derivatives
    double relative = 0;    // sup |A| / sup |∂_t ω|
};

struct OperatorAInputs {
    double kappa = 0, vstar_n = 0, vstar_b = 0;
    FlowParams params;
    const CorrectionPair* correction = nullptr; // Ω₁ terms and their velocities when set
    bool include_local_dipole = true;           // with corrections: the curvature dipole Ω₁^{(1)}
    double rho_min = 0.1, rho_max = 8.0;
    int rho_stride = 10; // every n-th radial grid node
    int theta_points = 32;
};

inline OperatorAResult operator_A_residual(const OperatorAInputs& in)
{
    const FlowParams& p = in.params;
    check_expansion_regime(p.nu_t());
    const double T = p.nu_t(), sq = std::sqrt(T), nu = p.nu, G = p.gamma, k = in.kappa;
    const double g4 = G / (4 * pi);
    const bool corr = in.correction != nullptr;
    const HTable& H = HTable::shared();
    OperatorAResult out;
    const int kmin = static_cast<int>(std::lround(in.rho_min / RadialGrid::h));
    const int kmax = static_cast<int>(std::lround(in.rho_max / RadialGrid::h));
    const double hh = RadialGrid::h;
    double dt_sup = 0;

    auto fd_second = [&](const std::vector<double>& dy, int kk) {
        // 4th-order central difference of y' at two grid steps
        int s = 2;
        return (-dy[kk + 2 * s] + 8 * dy[kk + s] - 8 * dy[kk - s] + dy[kk - 2 * s]) / (12 * s * hh);
    };

    for (int kk = kmin; kk <= kmax; kk += in.rho_stride) {
        const double rho = RadialGrid::node(kk);
        const double x = rho * rho / 4;
        // Ω₀ and derivatives
        const double O0 = omega0(rho, G), O0p = -0.5 * rho * O0, O0pp = (-0.5 + rho * rho / 4) * O0;
        const double V0 = v0(rho, G);
        const double ub = -(G * k / (4 * pi)) * (1 - std::log(2.0) + (special_F(rho) + H(rho)) / (4 * pi));
        const double Vr = dipole_vr(rho, G), Vt = dipole_vtheta(rho, G);

        // radial coefficient profiles of Ω₁ = c(ρ) cosθ + s(ρ) sinθ
        double c = 0, cp = 0, cpp = 0, cpp_fd = 0, sn = 0, sp = 0, spp = 0, spp_fd = 0;
        double v1r_c = 0, v1r_s = 0, v1t_c = 0, v1t_s = 0;
        if (corr) {
            const CorrectionPair& cp2 = *in.correction;
            if (in.include_local_dipole) {
                double d = 0.5 * k * g4;
                c += d * rho * std::exp(-x);
                cp += d * (1 - rho * rho / 2) * std::exp(-x);
                double d2 = d * (-1.5 * rho + rho * rho * rho / 4) * std::exp(-x);
                cpp += d2;
                cpp_fd += d2;
                v1r_s += 0.5 * k * Vr;
                v1t_c += 0.5 * k * Vt;
            }
            c += cp2.omega_c.y.hat_values()[kk] * std::exp(-x);
            cp += cp2.omega_c.dy[kk];
            cpp += cp2.omega_c.d2y[kk];
            cpp_fd += fd_second(cp2.omega_c.dy, kk);
            sn += cp2.omega_s.y.hat_values()[kk] * std::exp(-x);
            sp += cp2.omega_s.dy[kk];
            spp += cp2.omega_s.d2y[kk];
            spp_fd += fd_second(cp2.omega_s.dy, kk);
            v1r_c += cp2.vr_c(rho);
            v1r_s += cp2.vr_s(rho);
            v1t_c += cp2.vth_c(rho);
            v1t_s += cp2.vth_s(rho);
        }

        for (int j = 0; j < in.theta_points; ++j) {
            const double th = 2 * pi * j / in.theta_points;
            const double ct = std::cos(th), st = std::sin(th);
            double dt_mag = 0;
            auto residual = [&](double c2, double s2) {
                const double W1 = c * ct + sn * st;
                const double W1r = cp * ct + sp * st;
                const double W1rr = c2 * ct + s2 * st;
                const double W1t = -c * st + sn * ct;
                const double W1tt = -W1;
                const double w = O0 / T + W1 / sq;
                const double w_r = O0p / (T * sq) + W1r / T;
                const double w_rr = O0pp / (T * T) + W1rr / (T * sq);
                const double w_t = W1t / sq, w_tt = W1tt / sq;
                const double r = rho * sq;
                const double dt = -nu * ((O0 + 0.5 * rho * O0p) / (T * T) + (0.5 * W1 + 0.5 * rho * W1r) / (T * sq));
                dt_mag = std::abs(dt);
                const double diff = nu * (w_tt / (r * r) + w_rr + w_r / r - k * ct * w_r);
                double ur = (ub + in.vstar_b) * st + in.vstar_n * ct - k * Vr * st;
                double ut = (ub + in.vstar_b) * ct - in.vstar_n * st - k * Vt * ct;
                ur += v1r_c * ct + v1r_s * st;
                ut += v1t_c * ct + v1t_s * st;
                const double vr = ur, vt = V0 / sq + ut;
                return dt - diff + vr * w_r + vt / r * w_t - k * st * w * vt;
            };
            const double A = residual(cpp, spp);
            const double A_fd = residual(cpp_fd, spp_fd);
            const double weight = (1 + std::pow(rho, 4)) * std::exp(-x);
            out.sup_abs = std::max(out.sup_abs, std::abs(A));
            dt_sup = std::max(dt_sup, dt_mag);
            out.scaled = std::max(out.scaled, std::abs(A) / weight);
            out.fd_scaled = std::max(out.fd_scaled, std::abs(A_fd) / weight);
        }
    }
    out.normalized = out.scaled * T;
    out.relative = dt_sup > 0 ? out.sup_abs / dt_sup : 0.0;
    if (corr && out.scaled > 0 && std::abs(out.fd_scaled - out.scaled) > 0.5 * out.scaled)
        throw ResolutionError("operator_A_residual: finite-difference noise dominates the residual");
    return out;
}

struct TubeQuadratureOptions {
    bool dipole = false;
    const CorrectionField* correction = nullptr;
    int theta_points = 32;
    double rho_cap = 12.0;
};

// Biot-Savart of the tube vorticity, volume element (1 - κ r cosθ) r dr dθ ds
inline Vec3 tube_velocity_quadrature(const Filament& fil, const TubeChart& chart, const FlowParams& p, const Vec3& x,
                                     const TubeQuadratureOptions& opt = {})
{
    check_expansion_regime(p.nu_t());
    const double T = p.nu_t(), sq = std::sqrt(T);
    if (!(chart.R > 0)) throw ConfigError("tube_velocity_quadrature: tube radius must be positive");
    const double rho_top = std::min(opt.rho_cap, chart.R / sq);
    if (rho_top < 4) throw ResolutionError("tube_velocity_quadrature: tube narrower than four core radii");
    std::vector<double> edges;
    for (double e : {0.0, 0.125, 0.25, 0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0, 12.0})
        if (e < rho_top) edges.push_back(e);
    edges.push_back(rho_top);
    const auto& rule = quad::gauss_legendre<16>();
    std::vector<double> rho_nodes, rho_weights;
    for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
        double a = edges[e], b = edges[e + 1];
        for (std::size_t i = 0; i < rule.x.size(); ++i) {
            rho_nodes.push_back(0.5 * (a + b) + 0.5 * (b - a) * rule.x[i]);
            rho_weights.push_back(0.5 * (b - a) * rule.w[i]);
        }
    }
    const double L = fil.length();
    const double s0 = foot_parameter(fil, x);
    const double dist = norm(x - fil.frame_at(s0).x);
    ExpansionOptions eo{opt.dipole, opt.correction};

    std::vector<Vec3> partial(rho_nodes.size());
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < static_cast<int>(rho_nodes.size()); ++i) {
        const double rho = rho_nodes[i], r = rho * sq;
        const double eta = eta_cutoff(r, chart.R);
        // geometric s-panels on both sides of the foot point
        std::vector<double> sp{0.0};
        double a = std::max(r, dist) / 4;
        while (sp.back() + a < 0.5 * L) {
            sp.push_back(sp.back() + a);
            a *= 2;
        }
        sp.push_back(0.5 * L);
        Vec3 acc;
        for (int side = -1; side <= 1; side += 2) {
            for (std::size_t q = 0; q + 1 < sp.size(); ++q) {
                double lo = sp[q], hi = sp[q + 1];
                for (std::size_t g = 0; g < rule.x.size(); ++g) {
                    double u = 0.5 * (lo + hi) + 0.5 * (hi - lo) * rule.x[g];
                    double ws = 0.5 * (hi - lo) * rule.w[g];
                    double s = s0 + side * u;
                    LocalFrame fr = fil.frame_at(s);
                    Vec3 ring;
                    for (int j = 0; j < opt.theta_points; ++j) {
                        double th = 2 * pi * j / opt.theta_points;
                        double ct = std::cos(th), st = std::sin(th);
                        Vec3 y = fr.x + r * ct * fr.n + r * st * fr.b;
                        Vec3 d = x - y;
                        double dn = norm(d);
                        double w = eta * expansion_magnitude(s, rho, th, fr.kappa, p, eo);
                        ring += (w * (1 - fr.kappa * r * ct) / (dn * dn * dn)) * cross(fr.t, d);
                    }
                    acc += ws * ring;
                }
            }
        }
        partial[i] = (rho_weights[i] * sq * r * (2 * pi / opt.theta_points)) * acc;
    }
    Vec3 total;
    for (const auto& v : partial) total += v;
    return total / (4 * pi);
}

// closed-form velocity of a circular vortex loop (radius a, unit circulation) at axial offset h, radius rho
inline std::pair<double, double> loop_velocity(double a, double rho, double h)
{
    double q = (a + rho) * (a + rho) + h * h;
    double m = 4 * a * rho / q;
    double k = std::sqrt(m);
    double K = std::comp_ellint_1(k), E = std::comp_ellint_2(k);
    double dm = (a - rho) * (a - rho) + h * h;
    double vz = 1 / (2 * pi * std::sqrt(q)) * (K + (a * a - rho * rho - h * h) / dm * E);
    double vr = (rho > 0) ? h / (2 * pi * rho * std::sqrt(q)) * (-K + (a * a + rho * rho + h * h) / dm * E) : 0.0;
    return {vr, vz};
}

struct BoxGrid {
    Vec3 origin;
    double spacing = 1;
    int nx = 0, ny = 0, nz = 0;
    std::vector<Vec3> values;

    std::size_t size() const { return static_cast<std::size_t>(nx) * ny * nz; }
    Vec3 point(int i, int j, int k) const { return origin + Vec3{i * spacing, j * spacing, k * spacing}; }
};

struct TubeGrid {
    std::vector<double> s, rho, theta;
    std::vector<Vec3> values; // index (is * nrho + ir) * ntheta + it

    std::size_t size() const { return s.size() * rho.size() * theta.size(); }
};

inline BoxGrid assemble_box_grid(const Filament& fil, const TubeChart& chart, const FlowParams& p, const Vec3& origin,
                                 double spacing, int nx, int ny, int nz, const ExpansionOptions& opt = {})
{
    BoxGrid g{origin, spacing, nx, ny, nz, {}};
    g.values.assign(g.size(), Vec3{});
#pragma omp parallel for collapse(2) schedule(dynamic)
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i)
                g.values[(static_cast<std::size_t>(k) * ny + j) * nx + i] =
                    vorticity_expansion(g.point(i, j, k), fil, chart, p, opt);
    return g;
}

inline TubeGrid assemble_tube_grid(const Filament& fil, const TubeChart& chart, const FlowParams& p, int ns, int nrho,
                                   int ntheta, double rho_max, const ExpansionOptions& opt = {})
{
    check_expansion_regime(p.nu_t());
    TubeGrid g;
    const double sq = std::sqrt(p.nu_t());
    rho_max = std::min(rho_max, chart.R / sq * (1 - 1e-9));
    if (nrho > 1 && rho_max / (nrho - 1) > 0.2)
        throw ResolutionError("tube grid: radial spacing above 0.2 core radii");
    for (int i = 0; i < ns; ++i) g.s.push_back(fil.length() * i / ns);
    for (int i = 0; i < nrho; ++i) g.rho.push_back(nrho > 1 ? rho_max * i / (nrho - 1) : 0.0);
    for (int i = 0; i < ntheta; ++i) g.theta.push_back(2 * pi * i / ntheta);
    g.values.assign(g.size(), Vec3{});
#pragma omp parallel for schedule(static)
    for (int is = 0; is < ns; ++is) {
        LocalFrame fr = fil.frame_at(g.s[is]);
        for (int ir = 0; ir < nrho; ++ir)
            for (int it = 0; it < ntheta; ++it) {
                double r = g.rho[ir] * sq;
                double w = eta_cutoff(r, chart.R) * expansion_magnitude(g.s[is], g.rho[ir], g.theta[it], fr.kappa, p, opt);
                g.values[(static_cast<std::size_t>(is) * nrho + ir) * ntheta + it] = w * fr.t;
            }
    }
    return g;
}

inline void write_vtk(const BoxGrid& g, const std::string& path)
{
    if (g.size() == 0 || g.values.size() != g.size()) throw ConfigError("export_field: empty grid");
    FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw ConfigError("export_field: cannot write " + path);
    std::fprintf(f, "# vtk DataFile Version 2.0\nvorticity expansion\nASCII\nDATASET STRUCTURED_POINTS\n");
    std::fprintf(f, "DIMENSIONS %d %d %d\n", g.nx, g.ny, g.nz);
    std::fprintf(f, "ORIGIN %.9g %.9g %.9g\n", g.origin.x, g.origin.y, g.origin.z);
    std::fprintf(f, "SPACING %.9g %.9g %.9g\n", g.spacing, g.spacing, g.spacing);
    std::fprintf(f, "POINT_DATA %zu\nVECTORS vorticity float\n", g.size());
    for (const auto& v : g.values) std::fprintf(f, "%.8e %.8e %.8e\n", v.x, v.y, v.z);
    std::fclose(f);
}

inline void write_tube_csv(const TubeGrid& g, const std::string& path)
{
    if (g.size() == 0 || g.values.size() != g.size()) throw ConfigError("export_field: empty grid");
    FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw ConfigError("export_field: cannot write " + path);
    std::fprintf(f, "s,rho,theta,wx,wy,wz\n");
    std::size_t idx = 0;
    for (double s : g.s)
        for (double r : g.rho)
            for (double t : g.theta) {
                const Vec3& v = g.values[idx++];
                std::fprintf(f, "%.12g,%.12g,%.12g,%.12e,%.12e,%.12e\n", s, r, t, v.x, v.y, v.z);
            }
    std::fclose(f);
}

} // namespace vortex

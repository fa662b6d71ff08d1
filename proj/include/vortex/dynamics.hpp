#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <boost/math/tools/toms748_solve.hpp>

#include "vortex/biot_savart.hpp"
#include "vortex/errors.hpp"
#include "vortex/geometry.hpp"
#include "vortex/spectral.hpp"
#include "vortex/vec3.hpp"

namespace vortex {

enum class Law { LIA, FULL };

inline Law parse_law(const std::string& s)
{
    if (s == "LIA" || s == "lia") return Law::LIA;
    if (s == "FULL" || s == "full") return Law::FULL;
    throw ConfigError("law must be LIA or FULL, got '" + s + "'");
}

inline const char* law_name(Law l) { return l == Law::LIA ? "LIA" : "FULL"; }

struct Checkpoint {
    double t = 0;
    ClosedCurve curve;
};

struct EvolutionState {
    ClosedCurve curve;
    FrameField frames;
    double t = 0;
    Law law = Law::LIA;
    std::vector<Checkpoint> history;
    double max_length_drift = 0; // largest |L - L_ref|/L_ref seen just before a resampling
    int substeps_taken = 0;

    EvolutionState() = default;
    EvolutionState(ClosedCurve c, double t0, Law l) : curve(std::move(c)), frames(compute_frames(curve)), t(t0), law(l) {}
};

struct DtControl {
    int steps = 100;
    int resample_every = 10; // 0 disables resampling
    int checkpoint_every = 0; // 0 records only the end state
    double cfl = 2.5;         // bound on dt·|c|·k_max²
    bool frozen = false;      // hold the log coefficient at frozen_nu_t
    double frozen_nu_t = 0;
    double tube_safety = 1.0;
    QuadratureSpec quadrature;
};

namespace detail {

inline double polygon_length(const std::vector<Vec3>& x)
{
    // spectral arclength of the interpolant through equispaced parameter samples
    const int N = static_cast<int>(x.size());
    auto d1 = spectral::derivative(x, 2 * pi, 1);
    double L = 0;
    for (const auto& v : d1) L += norm(v);
    return L * 2 * pi / N;
}

inline std::vector<Vec3> curve_velocity(const std::vector<Vec3>& x, double gamma, double nu_t, Law law,
                                        const QuadratureSpec& spec)
{
    ClosedCurve c{x, polygon_length(x)};
    const int N = c.size();
    std::vector<Vec3> v(N);
    if (law == Law::LIA) {
        FrameField f = compute_frenet(c);
        for (int j = 0; j < N; ++j) v[j] = lia_velocity(f, gamma, nu_t, j);
        return v;
    }
    Filament fil(c);
    auto vstar = desingularized_velocity_nodes(fil, gamma, spec);
    for (int j = 0; j < N; ++j) v[j] = filament_law_velocity(fil.frames(), gamma, nu_t, j, vstar[j]);
    return v;
}

} // namespace detail

// RK4 on node positions; t may decrease when the coefficient is frozen
inline EvolutionState evolve_curve(EvolutionState state, double gamma, double nu, double t_end, const DtControl& dt)
{
    if (dt.steps < 1) throw ConfigError("evolve: steps must be positive");
    if (!(nu > 0)) throw ConfigError("evolve: nu must be positive");
    if (dt.frozen) {
        check_expansion_regime(dt.frozen_nu_t);
    } else {
        if (!(state.t > 0)) throw DomainError("evolve: start time must be positive");
        if (!(t_end > state.t)) throw ConfigError("evolve: t1 must exceed t0");
        check_expansion_regime(nu * t_end);
    }
    const int N = state.curve.size();
    auto nu_t_at = [&](double t) { return dt.frozen ? dt.frozen_nu_t : nu * t; };
    const double step = (t_end - state.t) / dt.steps;
    double L_ref = state.curve.length;
    std::vector<Vec3> x = state.curve.nodes;

    auto tube_check = [&](const ClosedCurve& c) {
        FrameField f = compute_frenet(c);
        TubeRadius tr = tube_radius(c, f, dt.tube_safety);
        if (tr.R < 2 * c.spacing())
            throw GeometricBreakdownError("evolve: tube radius " + std::to_string(tr.R) +
                                          " fell below two grid spacings at t = " + std::to_string(state.t));
    };

    for (int n = 1; n <= dt.steps; ++n) {
        const double t0 = state.t;
        ClosedCurve now{x, detail::polygon_length(x)};
        const double h = now.spacing();
        const double kmax = pi / h;
        double coef = std::abs(filament_law_coefficient(1.0, gamma, std::min(nu_t_at(t0), nu_t_at(t0 + step)))) + 1.0;
        int sub = std::max(1, static_cast<int>(std::ceil(std::abs(step) * coef * kmax * kmax / dt.cfl)));
        const double dts = step / sub;
        for (int k = 0; k < sub; ++k) {
            double ta = t0 + k * dts;
            auto vel = [&](const std::vector<Vec3>& y, double t) {
                return detail::curve_velocity(y, gamma, nu_t_at(t), state.law, dt.quadrature);
            };
            auto axpy = [&](const std::vector<Vec3>& y, const std::vector<Vec3>& d, double a) {
                std::vector<Vec3> r(N);
                for (int j = 0; j < N; ++j) r[j] = y[j] + a * d[j];
                return r;
            };
            auto k1 = vel(x, ta);
            auto k2 = vel(axpy(x, k1, 0.5 * dts), ta + 0.5 * dts);
            auto k3 = vel(axpy(x, k2, 0.5 * dts), ta + 0.5 * dts);
            auto k4 = vel(axpy(x, k3, dts), ta + dts);
            for (int j = 0; j < N; ++j) x[j] += dts / 6 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]);
        }
        state.substeps_taken += sub;
        state.t = t0 + step;
        for (const auto& p : x)
            if (!std::isfinite(p.x + p.y + p.z)) throw NumericalError("evolve: non-finite node position");

        bool resample = dt.resample_every > 0 && (n % dt.resample_every == 0 || n == dt.steps);
        if (resample) {
            double L = detail::polygon_length(x);
            state.max_length_drift = std::max(state.max_length_drift, std::abs(L - L_ref) / L_ref);
            ClosedCurve c = resample_arclength(x, N);
            tube_check(c);
            x = c.nodes;
            L_ref = c.length;
        }
        if (dt.checkpoint_every > 0 && n % dt.checkpoint_every == 0)
            state.history.push_back({state.t, ClosedCurve{x, detail::polygon_length(x)}});
    }
    if (dt.resample_every == 0) {
        double L = detail::polygon_length(x);
        state.max_length_drift = std::max(state.max_length_drift, std::abs(L - L_ref) / L_ref);
    }
    state.curve = ClosedCurve{x, detail::polygon_length(x)};
    state.frames = compute_frames(state.curve);
    if (dt.checkpoint_every == 0 || state.history.empty() || state.history.back().t != state.t)
        state.history.push_back({state.t, state.curve});
    return state;
}

struct KTState {
    std::vector<double> kappa, tau;
    double length = 2 * pi;
    double t_prime = 0;
};

inline KTState kt_state_from_curve(const ClosedCurve& c)
{
    FrameField f = compute_frenet(c);
    return {f.kappa, f.tau, c.length, 0.0};
}

inline void check_curvature(const std::vector<double>& kappa)
{
    double mean = 0;
    for (double k : kappa) mean += k;
    mean /= kappa.size();
    double mn = *std::min_element(kappa.begin(), kappa.end());
    if (!(mn > 1e-6 * mean)) throw SingularCurvatureError("curvature vanishes: min kappa " + std::to_string(mn));
}

// derivatives in the curvature-torsion form, time t' with the Γ/ν factor explicit
inline std::pair<std::vector<double>, std::vector<double>> kt_rhs(const KTState& s, double ratio)
{
    check_curvature(s.kappa);
    const int N = static_cast<int>(s.kappa.size());
    const double L = s.length;
    auto ks = spectral::derivative(s.kappa, L, 1);
    auto kss = spectral::derivative(s.kappa, L, 2);
    auto ts = spectral::derivative(s.tau, L, 1);
    std::vector<double> inner(N);
    for (int j = 0; j < N; ++j) inner[j] = kss[j] / s.kappa[j] - s.tau[j] * s.tau[j];
    auto inner_s = spectral::derivative(inner, L, 1);
    std::vector<double> dk(N), dt(N);
    for (int j = 0; j < N; ++j) {
        dk[j] = ratio * (-s.kappa[j] * ts[j] - 2 * ks[j] * s.tau[j]);
        dt[j] = ratio * (inner_s[j] + s.kappa[j] * ks[j]);
    }
    return {dk, dt};
}

struct KTRun {
    KTState state;
    double kappa2_drift = 0; // max relative change of ∮κ² divided by the elapsed t'
    int steps = 0;
};

// integrating-factor RK4: the linearisation about the mean curvature is propagated exactly per mode
inline KTRun kt_evolve(KTState s, double ratio, double t_end, int steps,
                       const std::function<void(const KTState&)>& observer = {})
{
    using cplx = std::complex<double>;
    if (steps < 1) throw ConfigError("kt_evolve: steps must be positive");
    check_curvature(s.kappa);
    const int N = static_cast<int>(s.kappa.size());
    const double L = s.length;
    double kbar = 0;
    for (double k : s.kappa) kbar += k;
    kbar /= N;
    const double h = (t_end - s.t_prime) / steps;

    // per-mode 2x2 propagator exp(M dt) for M = ratio [[0, -iqk], [iqk - iq^3/k, 0]]
    struct Prop {
        cplx a, b, c, d;
    };
    auto propagator = [&](double dtau) {
        std::vector<Prop> P(N);
        for (int m = 0; m < N; ++m) {
            double q = (N % 2 == 0 && m == N / 2) ? 0.0 : spectral::wavenumber(m, N, L);
            cplx m12 = ratio * cplx(0, -q * kbar);
            cplx m21 = ratio * cplx(0, q * kbar - q * q * q / kbar);
            cplx mu2 = m12 * m21;
            cplx mu = std::sqrt(mu2);
            cplx ch, sh_over;
            if (std::abs(mu * dtau) < 1e-8) {
                ch = 1.0 + 0.5 * mu2 * dtau * dtau;
                sh_over = dtau * (1.0 + mu2 * dtau * dtau / 6.0);
            } else {
                ch = std::cosh(mu * dtau);
                sh_over = std::sinh(mu * dtau) / mu;
            }
            P[m] = {ch, sh_over * m12, sh_over * m21, ch};
        }
        return P;
    };
    const auto E1 = propagator(0.5 * h);
    const auto E2 = propagator(h);
    auto apply = [&](const std::vector<Prop>& P, const std::vector<cplx>& k, const std::vector<cplx>& t) {
        std::vector<cplx> ko(N), to(N);
        for (int m = 0; m < N; ++m) {
            ko[m] = P[m].a * k[m] + P[m].b * t[m];
            to[m] = P[m].c * k[m] + P[m].d * t[m];
        }
        return std::make_pair(ko, to);
    };
    auto to_real = [&](const std::vector<cplx>& f) {
        auto x = spectral::ifft(f);
        std::vector<double> r(N);
        for (int j = 0; j < N; ++j) r[j] = x[j].real() / N;
        return r;
    };
    // nonlinear remainder in Fourier space
    // the linear part is subtracted from the real projection so no anti-Hermitian residue is stepped explicitly
    auto nonlinear = [&](const std::vector<cplx>& kh_in, const std::vector<cplx>& th_in) {
        KTState st{to_real(kh_in), to_real(th_in), L, 0};
        auto [dk, dt] = kt_rhs(st, ratio);
        auto fk = spectral::fft(dk), ft = spectral::fft(dt);
        auto kh = spectral::fft(st.kappa), th = spectral::fft(st.tau);
        for (int m = 0; m < N; ++m) {
            double q = (N % 2 == 0 && m == N / 2) ? 0.0 : spectral::wavenumber(m, N, L);
            cplx m12 = ratio * cplx(0, -q * kbar);
            cplx m21 = ratio * cplx(0, q * kbar - q * q * q / kbar);
            cplx kk = kh[m], tt = th[m];
            if (m == 0) kk -= kbar * static_cast<double>(N);
            fk[m] -= m12 * tt;
            ft[m] -= m21 * kk;
        }
        return std::make_pair(fk, ft);
    };
    auto kappa2 = [&](const std::vector<double>& k) {
        double sum = 0;
        for (double v : k) sum += v * v;
        return sum * L / N;
    };

    KTRun run;
    const double I0 = kappa2(s.kappa);
    const double t_start = s.t_prime;
    std::vector<cplx> kh = spectral::fft(s.kappa), th = spectral::fft(s.tau);
    // the mean curvature is the steady part of the linear system
    auto split = [&](std::vector<cplx> k) {
        k[0] -= kbar * static_cast<double>(N);
        return k;
    };
    auto join = [&](std::vector<cplx> k) {
        k[0] += kbar * static_cast<double>(N);
        return k;
    };
    for (int n = 0; n < steps; ++n) {
        std::vector<cplx> u = split(kh), w = th;
        auto [n1k, n1t] = nonlinear(kh, th);
        std::vector<cplx> ak(N), at(N);
        for (int m = 0; m < N; ++m) {
            ak[m] = u[m] + 0.5 * h * n1k[m];
            at[m] = w[m] + 0.5 * h * n1t[m];
        }
        auto [a2k, a2t] = apply(E1, ak, at);
        auto [n2k, n2t] = nonlinear(join(a2k), a2t);
        auto [eu_k, eu_t] = apply(E1, u, w);
        std::vector<cplx> bk(N), bt(N);
        for (int m = 0; m < N; ++m) {
            bk[m] = eu_k[m] + 0.5 * h * n2k[m];
            bt[m] = eu_t[m] + 0.5 * h * n2t[m];
        }
        auto [n3k, n3t] = nonlinear(join(bk), bt);
        auto [e3k, e3t] = apply(E1, n3k, n3t);
        auto [e2u_k, e2u_t] = apply(E2, u, w);
        std::vector<cplx> ck(N), ct(N);
        for (int m = 0; m < N; ++m) {
            ck[m] = e2u_k[m] + h * e3k[m];
            ct[m] = e2u_t[m] + h * e3t[m];
        }
        auto [n4k, n4t] = nonlinear(join(ck), ct);
        auto [e1k, e1t] = apply(E2, n1k, n1t);
        std::vector<cplx> sk(N), st(N);
        for (int m = 0; m < N; ++m) {
            sk[m] = n2k[m] + n3k[m];
            st[m] = n2t[m] + n3t[m];
        }
        auto [e23k, e23t] = apply(E1, sk, st);
        for (int m = 0; m < N; ++m) {
            u[m] = e2u_k[m] + h / 6 * (e1k[m] + 2.0 * e23k[m] + n4k[m]);
            w[m] = e2u_t[m] + h / 6 * (e1t[m] + 2.0 * e23t[m] + n4t[m]);
        }
        s.kappa = to_real(join(u));
        s.tau = to_real(w);
        kh = spectral::fft(s.kappa);
        th = spectral::fft(s.tau);
        s.t_prime = t_start + (n + 1) * h;
        for (double v : s.kappa)
            if (!std::isfinite(v)) throw NumericalError("kt_evolve: non-finite curvature");
        double elapsed = std::abs(s.t_prime - t_start);
        run.kappa2_drift = std::max(run.kappa2_drift, std::abs(kappa2(s.kappa) - I0) / I0 / std::max(elapsed, 1.0));
        if (observer) observer(s);
    }
    check_curvature(s.kappa);
    run.state = std::move(s);
    run.steps = steps;
    return run;
}

inline double ring_mode_frequency(int n, double R, double ratio)
{
    if (n <= 1) throw DomainError("ring_mode_frequency: mode number must be at least 2 (n = 1 is a rigid translation)");
    if (!(R > 0)) throw ConfigError("ring_mode_frequency: R must be positive");
    double n2 = static_cast<double>(n) * n;
    return ratio * std::sqrt(n2 * n2 - n2) / (R * R);
}

// angular frequency of the cos(2πn s/L) projection of κ, from its zero crossings
inline double measured_mode_frequency(const std::vector<double>& times, const std::vector<double>& projection)
{
    std::vector<double> crossings;
    for (std::size_t i = 0; i + 1 < projection.size(); ++i) {
        double a = projection[i], b = projection[i + 1];
        if ((a > 0 && b <= 0) || (a < 0 && b >= 0))
            crossings.push_back(times[i] + (times[i + 1] - times[i]) * a / (a - b));
    }
    if (crossings.size() < 3) throw ResolutionError("mode frequency: fewer than three zero crossings");
    double half_period = (crossings.back() - crossings.front()) / (crossings.size() - 1);
    return pi / half_period;
}

inline double mode_projection(const std::vector<double>& kappa, int n)
{
    const int N = static_cast<int>(kappa.size());
    double sum = 0, mean = 0;
    for (double k : kappa) mean += k;
    mean /= N;
    for (int j = 0; j < N; ++j) sum += (kappa[j] - mean) * std::cos(2 * pi * n * j / N);
    return 2 * sum / N;
}

// (Γ/2π) log(νt) [((κ_ss - κτ²)/κ) t - κ_s n - κτ b]
inline Vec3 darboux_vector(const FrameField& f, double gamma, double nu_t, int j)
{
    check_expansion_regime(nu_t);
    check_curvature(f.kappa);
    double k = f.kappa[j], tau = f.tau[j];
    double c = gamma / (2 * pi) * std::log(nu_t);
    return c * (((f.kappa_ss[j] - k * tau * tau) / k) * f.t[j] - f.kappa_s[j] * f.n[j] - k * tau * f.b[j]);
}

// t' = (Γ/4π) ∫_0^t log√(ντ) dτ, closed form
inline double time_map(double gamma, double nu, double t)
{
    if (!(nu > 0) || !(t >= 0)) throw ConfigError("time_map: nu must be positive and t non-negative");
    double x = nu * t;
    if (x >= 1) throw DomainError("time_map: nu*t must lie below 1");
    if (x == 0) return 0.0;
    return gamma / (8 * pi * nu) * x * (std::log(x) - 1);
}

inline double inverse_time_map(double gamma, double nu, double t_prime)
{
    if (!(gamma != 0) || !(nu > 0)) throw ConfigError("inverse_time_map: need gamma != 0 and nu > 0");
    double u = t_prime / (-gamma / (8 * pi * nu)); // x(1 - log x) = u for x = νt in (0, 1)
    if (!(u >= 0 && u < 1)) throw DomainError("inverse_time_map: t' outside the image of nu*t in (0, 1)");
    if (u == 0) return 0.0;
    auto f = [u](double x) { return x * (1 - std::log(x)) - u; };
    const double x0 = std::numeric_limits<double>::min();
    if (f(x0) >= 0) return x0 / nu;
    std::uintmax_t iters = 200;
    auto [lo, hi] = boost::math::tools::toms748_solve(f, x0, 1.0, f(x0), 1 - u,
                                                      boost::math::tools::eps_tolerance<double>(52), iters);
    if (iters >= 200) throw NonConvergenceError("inverse_time_map: root bracketing did not converge");
    return 0.5 * (lo + hi) / nu;
}

// the curvature-torsion time: dt' = -log(νt) d(νt)
inline double kt_time(double nu_t)
{
    check_expansion_regime(nu_t);
    return -nu_t * (std::log(nu_t) - 1);
}

} // namespace vortex

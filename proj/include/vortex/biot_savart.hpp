#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "vortex/errors.hpp"
#include "vortex/geometry.hpp"
#include "vortex/quadrature.hpp"
#include "vortex/spectral.hpp"
#include "vortex/vec3.hpp"

namespace vortex {

struct QuadratureSpec {
    // cut-off half-widths in arclength units; empty means ladder_spacings × grid spacing
    std::vector<double> epsilon_ladder;
    std::vector<double> ladder_spacings{32, 16, 8, 4};
    // 1: remainder model ε log(1/ε); 2: ε²
    int extrapolation_order = 2;
    double abs_tol = 1e-3; // per unit circulation

    std::vector<double> ladder(double h) const
    {
        std::vector<double> eps = epsilon_ladder;
        if (eps.empty())
            for (double m : ladder_spacings) eps.push_back(m * h);
        if (eps.size() < 2) throw ConfigError("epsilon ladder needs at least two values");
        for (std::size_t i = 1; i < eps.size(); ++i)
            if (!(eps[i] < eps[i - 1])) throw ConfigError("epsilon ladder must be strictly decreasing");
        if (eps.back() < 4 * h * (1 - 1e-12))
            throw ConfigError("smallest epsilon must be at least 4 grid spacings");
        if (extrapolation_order != 1 && extrapolation_order != 2)
            throw ConfigError("extrapolation_order must be 1 or 2");
        return eps;
    }
};

inline Vec3 filament_velocity(const Filament& fil, double gamma, const Vec3& x)
{
    const ClosedCurve& c = fil.curve();
    const auto& t = fil.frames().t;
    const double h = c.spacing();
    Vec3 sum;
    double dmin = std::numeric_limits<double>::infinity();
    for (int j = 0; j < c.size(); ++j) {
        Vec3 d = x - c.nodes[j];
        double r = norm(d);
        dmin = std::min(dmin, r);
        sum += cross(t[j], d) / (r * r * r);
    }
    if (dmin < 4 * h)
        throw ProximityError("filament_velocity: point within 4 grid spacings of the curve; use the desingularized limit");
    return gamma / (4 * pi) * h * sum;
}

struct DesingResult {
    Vec3 v;
    double diagnostic = 0;
    std::vector<double> epsilons;
    std::vector<Vec3> ladder; // I(ε) for each rung
};

namespace detail {

// I(ε) with the Γ/4π factor, computed by subtracting κb/(2ℓ(u)), ℓ(u) = (L/π)|sin(πu/L)|
class CutoffIntegral {
public:
    CutoffIntegral(const Filament& fil, double s) : fil_(fil), s_(s), L_(fil.length())
    {
        const ClosedCurve& c = fil.curve();
        int N = c.size();
        h_ = c.spacing();
        double k = s / h_;
        bool on_node = std::abs(k - std::round(k)) < 1e-12;
        if (on_node) {
            int j0 = static_cast<int>(std::lround(k)) % N;
            if (j0 < 0) j0 += N;
            x_.resize(N);
            t_.resize(N);
            for (int j = 0; j < N; ++j) {
                x_[j] = c.nodes[(j0 + j) % N];
                t_[j] = fil.frames().t[(j0 + j) % N];
            }
        } else {
            x_ = spectral::shift(c.nodes, L_, s);
            auto d1 = spectral::derivative(x_, L_, 1);
            t_.resize(N);
            for (int j = 0; j < N; ++j) t_[j] = normalized(d1[j]);
        }
        LocalFrame fr = fil.frame_at(s);
        d1_ = fil.interp()(s, 1);
        x0_ = x_[0];
        kb_ = fr.kappa * fr.b;
        // full-period trapezoid of g, skipping u = 0 where the odd jump averages to zero
        for (int j = 1; j < N; ++j) {
            double u = (j <= N / 2) ? j * h_ : (j - N) * h_;
            trapezoid_ += g(u, x_[j], t_[j]);
        }
        trapezoid_ *= h_;
    }

    Vec3 f(const Vec3& xp, const Vec3& tp) const
    {
        Vec3 d = x0_ - xp;
        double r = norm(d);
        return cross(tp, d) / (r * r * r);
    }

    Vec3 g(double u, const Vec3& xp, const Vec3& tp) const
    {
        double ell = (L_ / pi) * std::abs(std::sin(pi * u / L_));
        return f(xp, tp) - kb_ / (2 * ell);
    }

    Vec3 g_at(double u) const
    {
        const auto& X = fil_.interp();
        Vec3 dx = X.difference(s_, u, 0);
        Vec3 tp = normalized(d1_ + X.difference(s_, u, 1));
        double r = norm(dx);
        double ell = (L_ / pi) * std::abs(std::sin(pi * u / L_));
        return cross(tp, -dx) / (r * r * r) - kb_ / (2 * ell);
    }

    // ∫_{|u|>ε} f + κ b log ε
    Vec3 operator()(double eps) const
    {
        const auto& rule = quad::gauss_legendre<20>();
        Vec3 inner;
        for (std::size_t i = 0; i < rule.x.size(); ++i) {
            double u = 0.5 * eps * (1 + rule.x[i]);
            inner += (0.5 * eps * rule.w[i]) * (g_at(u) + g_at(-u));
        }
        Vec3 outside = trapezoid_ - inner - std::log(std::tan(pi * eps / (2 * L_))) * kb_;
        return outside + std::log(eps) * kb_;
    }

private:
    const Filament& fil_;
    double s_, L_, h_ = 0;
    std::vector<Vec3> x_, t_;
    Vec3 x0_, d1_, kb_, trapezoid_;
};

inline double ladder_model(double eps, double L, int order)
{
    double e = eps / L;
    return order == 2 ? e * e : e * std::log(1.0 / e);
}

} // namespace detail

inline DesingResult desingularized_velocity(const Filament& fil, double gamma, double s, const QuadratureSpec& spec = {})
{
    LocalFrame fr = fil.frame_at(s);
    if (!(fr.kappa > 0)) throw DegenerateFrameError("desingularized_velocity: zero curvature at s");
    const double L = fil.length();
    auto eps = spec.ladder(fil.curve().spacing());
    detail::CutoffIntegral I(fil, s);
    const double c = gamma / (4 * pi);
    DesingResult out;
    out.epsilons = eps;
    for (double e : eps) out.ladder.push_back(c * I(e));
    std::size_t n = eps.size();
    double m1 = detail::ladder_model(eps[n - 2], L, spec.extrapolation_order);
    double m2 = detail::ladder_model(eps[n - 1], L, spec.extrapolation_order);
    out.v = (m1 * out.ladder[n - 1] - m2 * out.ladder[n - 2]) / (m1 - m2);
    Vec3 half = c * I(0.5 * eps.back());
    out.diagnostic = norm(out.ladder.back() - half);
    if (out.diagnostic > spec.abs_tol * std::max(std::abs(gamma), 1e-300))
        throw NonConvergenceError("desingularized_velocity: ladder diagnostic " + std::to_string(out.diagnostic) +
                                  " exceeds tolerance " + std::to_string(spec.abs_tol));
    return out;
}

inline std::vector<Vec3> desingularized_velocity_nodes(const Filament& fil, double gamma, const QuadratureSpec& spec = {})
{
    std::vector<Vec3> out(fil.size());
    std::vector<std::string> failures(fil.size());
#pragma omp parallel for schedule(static)
    for (int j = 0; j < fil.size(); ++j) {
        try {
            out[j] = desingularized_velocity(fil, gamma, j * fil.curve().spacing(), spec).v;
        } catch (const Error& e) {
            failures[j] = e.what();
        }
    }
    for (const auto& f : failures)
        if (!f.empty()) throw NonConvergenceError(f);
    return out;
}

inline void check_expansion_regime(double nu_t)
{
    if (!(nu_t > 0 && nu_t < 1)) throw DomainError("nu*t must lie in (0, 1), got " + std::to_string(nu_t));
}

// -(Γ/4π) κ log√(νt) b
inline Vec3 lia_velocity(double kappa, const Vec3& b, double gamma, double nu_t)
{
    check_expansion_regime(nu_t);
    return -(gamma / (4 * pi)) * kappa * 0.5 * std::log(nu_t) * b;
}

inline Vec3 lia_velocity(const FrameField& f, double gamma, double nu_t, int j)
{
    return lia_velocity(f.kappa[j], f.b[j], gamma, nu_t);
}

inline double filament_law_coefficient(double kappa, double gamma, double nu_t)
{
    check_expansion_regime(nu_t);
    return -(gamma / (4 * pi)) * kappa * 0.5 * std::log(nu_t) + gamma * kappa * euler_gamma / (8 * pi) -
           gamma * kappa / (4 * pi);
}

inline Vec3 filament_law_velocity(double kappa, const Vec3& b, double gamma, double nu_t, const Vec3& vstar)
{
    return filament_law_coefficient(kappa, gamma, nu_t) * b + vstar;
}

inline Vec3 filament_law_velocity(const FrameField& f, double gamma, double nu_t, int j, const Vec3& vstar)
{
    return filament_law_velocity(f.kappa[j], f.b[j], gamma, nu_t, vstar);
}

// velocity at the filament centre: (Γκ/4π)(-log√(νt) + γ/2 - 1/2) b + v*
inline double center_velocity_coefficient(double kappa, double gamma, double nu_t)
{
    check_expansion_regime(nu_t);
    return gamma * kappa / (4 * pi) * (-0.5 * std::log(nu_t) + std::log(2.0) + 0.5 * (euler_gamma - 2 * std::log(2.0)) - 0.5);
}

inline Vec3 center_velocity(double kappa, const Vec3& b, double gamma, double nu_t, const Vec3& vstar)
{
    return center_velocity_coefficient(kappa, gamma, nu_t) * b + vstar;
}

// closed-form v* of a circular ring of radius R: (Γ/4πR) log(4R) along b
inline double ring_vstar(double R, double gamma) { return gamma / (4 * pi * R) * std::log(4 * R); }

} // namespace vortex

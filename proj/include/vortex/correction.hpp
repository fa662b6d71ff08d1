#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "vortex/errors.hpp"
#include "vortex/profiles.hpp"
#include "vortex/quadrature.hpp"
#include "vortex/vec3.hpp"

namespace vortex {

// curvature dipole ½κ(Γ/4π)ρe^{-ρ²/4}cosθ and its velocity, ½κ times the unit dipole
inline double omega1_local(double rho, double theta, double kappa, double gamma)
{
    return 0.5 * kappa * dipole_omega(rho, gamma) * std::cos(theta);
}

inline PolarFields omega1_local_fields(double rho, double theta, double kappa, double gamma)
{
    PolarFields d = dipole_fields(rho, theta, gamma);
    return {0.5 * kappa * d.omega, 0.5 * kappa * d.vr, 0.5 * kappa * d.vtheta};
}

// solution of -y/2 - ρy'/2 - (y'' + y'/ρ - y/ρ²) = f on the radial grid
struct ModeSolution {
    SampledProfile y;       // through its scaled values e^{ρ²/4} y
    std::vector<double> dy; // y' at the grid nodes
    std::vector<double> d2y;

    double operator()(double rho) const { return y(rho); }
    double derivative(double rho) const { return y.derivative(rho); }

    // second derivative at arbitrary ρ straight from the ODE
    double second_derivative(double rho, double f) const
    {
        double v = y(rho), d = y.derivative(rho);
        if (rho == 0) return 0.0;
        return -0.5 * v - 0.5 * rho * d - d / rho + v / (rho * rho) - f;
    }
};

namespace detail {

inline void check_mode_envelope(const std::vector<double>& fhat)
{
    double inner = 0, outer = 0;
    for (int k = 1; k < RadialGrid::size(); ++k) {
        double r = RadialGrid::node(k);
        if (!std::isfinite(fhat[k])) throw DomainError("solve_mode_ode: right-hand side is not finite");
        double ratio = std::abs(fhat[k]) / (r + std::pow(r, 8));
        if (r >= 1 && r <= 8) inner = std::max(inner, ratio);
        if (r >= 10) outer = std::max(outer, ratio);
    }
    if (outer > 100 * inner && outer > 1e-300)
        throw DomainError("solve_mode_ode: right-hand side decays slower than (ρ+ρ^M)e^{-ρ²/4}");
}

} // namespace detail

// fhat is the scaled right-hand side e^{ρ²/4} f
inline ModeSolution solve_mode_ode_hat(const std::function<double(double)>& fhat)
{
    const int n = RadialGrid::size();
    std::vector<double> fnode(n);
    for (int k = 0; k < n; ++k) fnode[k] = fhat(RadialGrid::node(k));
    detail::check_mode_envelope(fnode);

    // Fh(ρ) = ∫_ρ^∞ fhat(u) e^{(ρ²-u²)/4} du by backward recurrence, P(ρ) = ∫_0^ρ (1-e^{-u²/4}) fhat du
    std::vector<double> Fh(n), P(n, 0.0);
    double rmax = RadialGrid::rho_max;
    Fh[n - 1] = fnode[n - 1] * 2.0 / rmax;
    for (int k = n - 2; k >= 0; --k) {
        double a = RadialGrid::node(k), b = RadialGrid::node(k + 1);
        double cell = quad::gauss<8>([&](double u) { return fhat(u) * std::exp((a * a - u * u) / 4); }, a, b);
        Fh[k] = std::exp((a * a - b * b) / 4) * Fh[k + 1] + cell;
    }
    for (int k = 1; k < n; ++k) {
        double a = RadialGrid::node(k - 1), b = RadialGrid::node(k);
        P[k] = P[k - 1] + quad::gauss<8>([&](double u) { return -std::expm1(-u * u / 4) * fhat(u); }, a, b);
    }
    std::vector<double> yhat(n, 0.0);
    ModeSolution out;
    out.dy.assign(n, 0.0);
    out.d2y.assign(n, 0.0);
    for (int k = 1; k < n; ++k) {
        double r = RadialGrid::node(k), x = r * r / 4;
        yhat[k] = (2.0 / r) * (-std::expm1(-x) * Fh[k] + P[k]);
    }
    // ŷ ~ ρ F̂(0)/2 at the origin
    out.dy[0] = 0.5 * Fh[0];
    for (int k = 1; k < n; ++k) {
        double r = RadialGrid::node(k), x = r * r / 4, e = std::exp(-x);
        double y = e * yhat[k];
        double dy = e * (Fh[k] - yhat[k] * (1.0 / r + 0.5 * r));
        out.dy[k] = dy;
        out.d2y[k] = -0.5 * y - 0.5 * r * dy - dy / r + y / (r * r) - e * fnode[k];
    }
    out.y = SampledProfile(std::move(yhat));
    return out;
}

inline ModeSolution solve_mode_ode(const RadialMode& f)
{
    if (f.m != 1) throw DomainError("solve_mode_ode: mode index must be 1");
    auto fhat = [&f](double r) { return std::exp(r * r / 4) * f(r); };
    return solve_mode_ode_hat(fhat);
}

struct ForceInputs {
    double kappa = 0, vstar_n = 0, vstar_b = 0, gamma = 1, nu = 1;
};

struct ForceModes {
    SampledProfile cos_mode, sin_mode; // scaled e^{ρ²/4} F_z^{c,s}
    ForceInputs inputs;
    Envelope envelope_c, envelope_s;

    RadialMode fc() const
    {
        auto p = cos_mode;
        return {1, Parity::cos, [p](double r) { return p(r); }, DecayClass::gaussian};
    }
    RadialMode fs() const
    {
        auto p = sin_mode;
        return {1, Parity::sin, [p](double r) { return p(r); }, DecayClass::gaussian};
    }
};

// scaled sine and cosine force profiles at one ρ
inline std::pair<double, double> force_hat(double rho, const ForceInputs& in, const HTable& H)
{
    const double g4 = in.gamma / (4 * pi);
    const double x = rho * rho / 4;
    const double k = in.kappa, nu = in.nu;
    double fgh = 4 * pi * (1 - std::log(2.0)) + special_F(rho) + special_G(rho) + H(rho);
    double dip = -detail::one_minus_exp_over(x); // (e^{-x}-1)/x
    double s = (k / nu) * g4 * v0(rho, in.gamma)                         // Ω0 V0 stretching
               + (in.gamma * k / (nu * 16 * pi * pi)) * fgh * (-g4 * rho / 2) // F+G+H binormal drift
               + (1 / nu) * v0(rho, in.gamma) * 0.5 * k * g4                // V0 advection of the local dipole
               + (1 / nu) * (k / 4) * g4 * g4 * rho * dip                  // dipole radial velocity on Ω0'
               + (1 / nu) * in.vstar_b * g4 * rho / 2;
    double c = (1 / nu) * in.vstar_n * g4 * rho / 2;
    return {c, s};
}

inline ForceModes build_force_modes(double kappa, double vstar_n, double vstar_b, double gamma, double nu)
{
    if (!(nu > 0)) throw ConfigError("build_force_modes: nu must be positive");
    ForceModes out;
    out.inputs = {kappa, vstar_n, vstar_b, gamma, nu};
    const HTable& H = HTable::shared();
    std::vector<double> c(RadialGrid::size()), s(RadialGrid::size());
    for (int k = 0; k < RadialGrid::size(); ++k) {
        auto [fc, fs] = force_hat(RadialGrid::node(k), out.inputs, H);
        c[k] = fc;
        s[k] = fs;
    }
    out.cos_mode = SampledProfile(std::move(c));
    out.sin_mode = SampledProfile(std::move(s));
    auto cm = out.cos_mode, sm = out.sin_mode;
    out.envelope_c = fit_gaussian_envelope([cm](double r) { return cm(r); }, 1, 8);
    out.envelope_s = fit_gaussian_envelope([sm](double r) { return sm(r); }, 1, 8);
    return out;
}

struct CorrectionPair {
    ModeSolution omega_c, omega_s;
    std::shared_ptr<StreamMode1> stream_c, stream_s;
    int iterations = 0;
    double contraction_estimate = 0;
    double weighted_norm = 0; // sup e^{ρ²/4}|Ω|/(ρ+ρ²) over both modes
    ForceInputs inputs;

    // velocity coefficients: V_r = vr_c cosθ + vr_s sinθ, V_θ = vth_c cosθ + vth_s sinθ
    double vr_c(double r) const { return -stream_s->vr(r); }
    double vr_s(double r) const { return stream_c->vr(r); }
    double vth_c(double r) const { return stream_c->vtheta(r); }
    double vth_s(double r) const { return stream_s->vtheta(r); }

    double omega(double rho, double theta) const
    {
        return omega_c(rho) * std::cos(theta) + omega_s(rho) * std::sin(theta);
    }

    PolarFields fields(double rho, double theta) const
    {
        double c = std::cos(theta), s = std::sin(theta);
        return {omega_c(rho) * c + omega_s(rho) * s, vr_c(rho) * c + vr_s(rho) * s, vth_c(rho) * c + vth_s(rho) * s};
    }
};

namespace detail {

inline double weighted_sup(const std::vector<double>& a, const std::vector<double>& b)
{
    double m = 0;
    for (int k = 1; k < RadialGrid::size(); ++k) {
        double r = RadialGrid::node(k);
        if (r > 10) break;
        m = std::max(m, std::abs(a[k] - b[k]) / (r + r * r));
    }
    return m;
}

inline std::shared_ptr<StreamMode1> stream_of(const SampledProfile& p)
{
    return std::make_shared<StreamMode1>([p](double r) { return p(r); });
}

} // namespace detail

struct PicardOptions {
    double max_ratio = 0.25;
    double tolerance = 1e-9;
    int max_sweeps = 30;
};

inline CorrectionPair solve_omega1_2(const ForceModes& force, const PicardOptions& opt = {})
{
    const double gamma = force.inputs.gamma, nu = force.inputs.nu;
    const double ratio = gamma / nu;
    if (std::abs(ratio) > opt.max_ratio)
        throw ConfigError("solve_omega1_2: Gamma/nu = " + std::to_string(ratio) + " exceeds the admissibility guard " +
                          std::to_string(opt.max_ratio));
    const int n = RadialGrid::size();
    const double g4 = gamma / (4 * pi);
    std::vector<double> zero(n, 0.0);
    ModeSolution cur_c, cur_s;
    cur_c.y = SampledProfile(zero);
    cur_s.y = SampledProfile(zero);
    double prev_diff = 0;
    CorrectionPair out;
    out.inputs = force.inputs;
    for (int sweep = 1; sweep <= opt.max_sweeps; ++sweep) {
        std::vector<double> phi_c(n, 0.0), phi_s(n, 0.0);
        if (ratio != 0 && sweep > 1) {
            auto sc = detail::stream_of(cur_c.y), ss = detail::stream_of(cur_s.y);
            for (int k = 0; k < n; ++k) {
                phi_c[k] = sc->vr_node(k);
                phi_s[k] = ss->vr_node(k);
            }
        }
        std::vector<double> fc(n), fs(n);
        const auto& oc = cur_c.y.hat_values();
        const auto& os = cur_s.y.hat_values();
        const auto& Fc = force.cos_mode.hat_values();
        const auto& Fs = force.sin_mode.hat_values();
        for (int k = 0; k < n; ++k) {
            double r = RadialGrid::node(k);
            double v0r = (r == 0) ? gamma / (8 * pi) : v0(r, gamma) / r;
            fc[k] = Fc[k] - (1 / nu) * (v0r * os[k] + g4 * (r / 2) * phi_s[k]);
            fs[k] = Fs[k] + (1 / nu) * (v0r * oc[k] + g4 * (r / 2) * phi_c[k]);
        }
        SampledProfile pc(fc), ps(fs);
        ModeSolution next_c = solve_mode_ode_hat([&pc](double r) { return pc.hat(r); });
        ModeSolution next_s = solve_mode_ode_hat([&ps](double r) { return ps.hat(r); });
        double diff = std::max(detail::weighted_sup(next_c.y.hat_values(), oc),
                               detail::weighted_sup(next_s.y.hat_values(), os));
        double size = std::max(detail::weighted_sup(next_c.y.hat_values(), zero),
                               detail::weighted_sup(next_s.y.hat_values(), zero));
        if (sweep > 1 && prev_diff > 0) out.contraction_estimate = diff / prev_diff;
        prev_diff = diff;
        cur_c = std::move(next_c);
        cur_s = std::move(next_s);
        out.iterations = sweep;
        out.weighted_norm = size;
        if (ratio == 0 || diff <= opt.tolerance * size || size == 0) {
            out.omega_c = cur_c;
            out.omega_s = cur_s;
            out.stream_c = detail::stream_of(cur_c.y);
            out.stream_s = detail::stream_of(cur_s.y);
            return out;
        }
        if (sweep >= 5 && out.contraction_estimate >= 1)
            throw NonConvergenceError("solve_omega1_2: sweep map is not contracting (ratio " +
                                      std::to_string(out.contraction_estimate) + ")");
    }
    throw NonConvergenceError("solve_omega1_2: no convergence in " + std::to_string(opt.max_sweeps) + " sweeps");
}

// correction pairs at stations along the curve, linear in s between them
class CorrectionField {
public:
    CorrectionField() = default;
    CorrectionField(std::vector<double> stations, std::vector<CorrectionPair> pairs, double length)
        : s_(std::move(stations)), pairs_(std::move(pairs)), L_(length)
    {
        if (s_.empty() || s_.size() != pairs_.size()) throw ConfigError("CorrectionField: stations and pairs mismatch");
    }

    bool empty() const { return pairs_.empty(); }
    const std::vector<CorrectionPair>& pairs() const { return pairs_; }

    template <class Fn>
    double blend(double s, Fn&& fn) const
    {
        if (pairs_.size() == 1) return fn(pairs_[0]);
        s = std::fmod(s, L_);
        if (s < 0) s += L_;
        std::size_t hi = std::upper_bound(s_.begin(), s_.end(), s) - s_.begin();
        std::size_t lo = (hi == 0) ? s_.size() - 1 : hi - 1;
        if (hi == s_.size()) hi = 0;
        double a = s_[lo], b = s_[hi];
        double span = b - a;
        if (span <= 0) span += L_;
        double off = s - a;
        if (off < 0) off += L_;
        double w = off / span;
        return (1 - w) * fn(pairs_[lo]) + w * fn(pairs_[hi]);
    }

    double omega_c(double s, double rho) const
    {
        return blend(s, [rho](const CorrectionPair& p) { return p.omega_c(rho); });
    }
    double omega_s(double s, double rho) const
    {
        return blend(s, [rho](const CorrectionPair& p) { return p.omega_s(rho); });
    }

private:
    std::vector<double> s_;
    std::vector<CorrectionPair> pairs_;
    double L_ = 1;
};

} // namespace vortex

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "vortex/errors.hpp"
#include "vortex/quadrature.hpp"
#include "vortex/vec3.hpp"

namespace vortex {

struct FlowParams {
    double gamma = 1.0;
    double nu = 1.0;
    double t = 1e-4;

    double nu_t() const { return nu * t; }
    double ratio() const { return gamma / nu; }

    void validate(bool require_expansion_regime = true) const
    {
        if (!(nu > 0)) throw ConfigError("nu must be positive");
        if (!(t > 0)) throw ConfigError("t must be positive");
        if (require_expansion_regime && !(nu_t() < 1)) throw DomainError("nu*t must be below 1");
    }
};

namespace detail {

// (1 - e^{-x}) / x
inline double one_minus_exp_over(double x)
{
    if (x < 1e-3) return 1 - x / 2 + x * x / 6 - x * x * x / 24;
    return -std::expm1(-x) / x;
}

} // namespace detail

inline double omega0(double rho, double gamma = 1.0) { return gamma / (4 * pi) * std::exp(-rho * rho / 4); }

inline double omega0_prime(double rho, double gamma = 1.0) { return -0.5 * rho * omega0(rho, gamma); }

inline double v0(double rho, double gamma = 1.0)
{
    // (Γ/2πρ)(1-e^{-ρ²/4}) = (Γ/8π) ρ (1-e^{-x})/x
    double x = rho * rho / 4;
    return gamma / (8 * pi) * rho * detail::one_minus_exp_over(x);
}

// radial factor of the dipole velocity: V_r = dipole_vr(ρ) sinθ, V_θ = dipole_vtheta(ρ) cosθ
inline double dipole_vr(double rho, double gamma = 1.0)
{
    double x = rho * rho / 4;
    return -gamma / (4 * pi) * detail::one_minus_exp_over(x);
}

inline double dipole_vtheta(double rho, double gamma = 1.0)
{
    double x = rho * rho / 4;
    return -gamma / (4 * pi) * (2 * std::exp(-x) - detail::one_minus_exp_over(x));
}

inline double dipole_omega(double rho, double gamma = 1.0) { return gamma / (4 * pi) * rho * std::exp(-rho * rho / 4); }

struct PolarFields {
    double omega = 0, vr = 0, vtheta = 0;
};

inline PolarFields dipole_fields(double rho, double theta, double gamma = 1.0)
{
    return {dipole_omega(rho, gamma) * std::cos(theta), dipole_vr(rho, gamma) * std::sin(theta),
            dipole_vtheta(rho, gamma) * std::cos(theta)};
}

inline double special_G(double rho)
{
    double x = rho * rho / 4;
    return -4 * pi * detail::one_minus_exp_over(x);
}

inline double special_F(double s)
{
    if (s < 0) throw DomainError("special_F: negative argument");
    double head = (s > 0) ? 4 * pi * std::log(s) * (-std::expm1(-s * s / 4)) : 0.0;
    auto tail = quad::half_line([](double u) { return u * std::exp(-u * u / 4) * std::log(u); }, s, 1e-14);
    if (s == 0) {
        // the integrand has an integrable log singularity at 0; split it off
        auto near = quad::tanh_sinh([](double u) { return u * std::exp(-u * u / 4) * std::log(u); }, 0.0, 1.0, 1e-14);
        auto far = quad::half_line([](double u) { return u * std::exp(-u * u / 4) * std::log(u); }, 1.0, 1e-14);
        return 2 * pi * (near.value + far.value);
    }
    return head + 2 * pi * tail.value;
}

// direct 2-D quadrature of the defining double integral; the radial line is split at the
// foot of the near-singular point so both pieces see it only at an endpoint
inline quad::Result special_F_direct(double s, double tol = 1e-10)
{
    auto integrand = [s](double rp, double th) {
        double d2 = s * s + rp * rp - 2 * s * rp * std::cos(th);
        return std::exp(-rp * rp / 4) * rp * 0.5 * std::log(std::max(d2, 1e-300));
    };
    double inner_err = 0;
    auto along_ray = [&](double th) {
        double split = s * std::max(std::cos(th), 0.0);
        auto g = [&](double rp) { return integrand(rp, th); };
        double v = 0;
        if (split > 0) {
            auto a = quad::tanh_sinh<1>(g, 0.0, split, tol);
            v += a.value;
            inner_err = std::max(inner_err, a.error);
        }
        auto b = quad::half_line<1>(g, split, tol);
        inner_err = std::max(inner_err, b.error);
        return v + b.value;
    };
    auto outer = quad::tanh_sinh(along_ray, 0.0, pi, tol);
    return {2 * outer.value, 2 * (outer.error + pi * inner_err)};
}

// the defining triple integral with area element ρ' dρ' and σ' over the whole line
inline quad::Result special_H_quadrature(double rho, double rho_cut = 12.0, double tol = 1e-9)
{
    double err = 0;
    auto sigma_part = [&](double d2) {
        // σ = D u / sqrt(1-u²) maps ℝ to (-1,1); the transformed integrand is polynomial
        double D = std::sqrt(d2);
        auto g = [D](double u) {
            if (D < 1e-150) return u * u;
            double w = 1 - u * u;
            if (w <= 0) return 0.0;
            double sg = D * u / std::sqrt(w);
            double q = D * D + sg * sg;
            double jac = D / (w * std::sqrt(w));
            return sg * sg * D * D / (q * q * std::sqrt(q)) * jac;
        };
        auto r = quad::kronrod(g, -1.0, 1.0, tol, 6);
        err = std::max(err, std::abs(r.error));
        return r.value;
    };
    auto theta_part = [&](double rp) {
        auto h = [&](double th) {
            double d2 = rho * rho + rp * rp - 2 * rho * rp * std::cos(th);
            return std::cos(th) * std::cos(th) * sigma_part(std::max(d2, 0.0));
        };
        auto r = quad::kronrod(h, 0.0, 2 * pi, tol, 8);
        err = std::max(err, std::abs(r.error));
        return r.value;
    };
    auto radial = [&](double rp) { return std::exp(-rp * rp / 4) * rp * theta_part(rp); };
    quad::Result out;
    auto r = quad::kronrod(radial, 0.0, rho_cut, tol, 10);
    out.value = -1.5 * r.value;
    out.error = 1.5 * (std::abs(r.error) + 4 * pi * err) + 3 * pi * std::exp(-rho_cut * rho_cut / 4);
    return out;
}

inline double special_H(double rho)
{
    if (rho < 0) throw DomainError("special_H: negative argument");
    auto r = special_H_quadrature(rho);
    if (!(r.error <= 1e-5)) throw AccuracyError("special_H: quadrature error estimate " + std::to_string(r.error));
    return r.value;
}

// memoised H on a coarse grid with cubic interpolation; build before sharing across threads
class HTable {
public:
    explicit HTable(double rho_max = 12.0, double step = 0.5) : step_(step)
    {
        int n = static_cast<int>(std::ceil(rho_max / step)) + 4;
        values_.resize(n);
        for (int k = 0; k < n; ++k) values_[k] = special_H(k * step);
    }

    double operator()(double rho) const
    {
        double u = rho / step_;
        int k = std::clamp(static_cast<int>(u) - 1, 0, static_cast<int>(values_.size()) - 4);
        double f = u - k;
        double y0 = values_[k], y1 = values_[k + 1], y2 = values_[k + 2], y3 = values_[k + 3];
        return -y0 * (f - 1) * (f - 2) * (f - 3) / 6 + y1 * f * (f - 2) * (f - 3) / 2 - y2 * f * (f - 1) * (f - 3) / 2 +
               y3 * f * (f - 1) * (f - 2) / 6;
    }

    static const HTable& shared()
    {
        static const HTable table;
        return table;
    }

private:
    double step_;
    std::vector<double> values_;
};

// W at the origin along b: (3/2)(Γ/4π) ∫∫∫ e^{-ρ'²/4} σ² ρ'² cos²θ' / (ρ'²+σ²)^{5/2} ρ' dσ dθ' dρ'
inline double w_origin(double gamma = 1.0)
{
    return -gamma / (4 * pi) * special_H_quadrature(0.0).value;
}

enum class Parity { none, cos, sin };
enum class DecayClass { gaussian, algebraic };

struct RadialMode {
    int m = 1;
    Parity parity = Parity::cos;
    std::function<double(double)> eval;
    DecayClass decay = DecayClass::gaussian;

    double operator()(double rho) const { return eval ? eval(rho) : 0.0; }
};

// uniform ρ-grid on [0, 12] used for every mode function
struct RadialGrid {
    static constexpr double rho_max = 12.0;
    static constexpr int intervals = 1200;
    static constexpr double h = rho_max / intervals;

    static double node(int k) { return k * h; }
    static int size() { return intervals + 1; }
};

namespace detail {

// Lagrange interpolation through 6 equispaced nodes starting at k0, value or first derivative
inline double lagrange6(const std::vector<double>& y, int k0, double u, int deriv)
{
    double out = 0;
    for (int i = 0; i < 6; ++i) {
        double denom = 1;
        for (int j = 0; j < 6; ++j)
            if (j != i) denom *= (i - j);
        if (deriv == 0) {
            double num = 1;
            for (int j = 0; j < 6; ++j)
                if (j != i) num *= (u - j);
            out += y[k0 + i] * num / denom;
        } else {
            double sum = 0;
            for (int l = 0; l < 6; ++l) {
                if (l == i) continue;
                double num = 1;
                for (int j = 0; j < 6; ++j)
                    if (j != i && j != l) num *= (u - j);
                sum += num;
            }
            out += y[k0 + i] * sum / denom;
        }
    }
    return out;
}

} // namespace detail

// profile stored through its gaussian-scaled values  e^{ρ²/4} f(ρ) on the radial grid
class SampledProfile {
public:
    SampledProfile() : hat_(RadialGrid::size(), 0.0) {}
    explicit SampledProfile(std::vector<double> hat) : hat_(std::move(hat)) {}

    static SampledProfile from_function(const std::function<double(double)>& f)
    {
        std::vector<double> hat(RadialGrid::size());
        for (int k = 0; k < RadialGrid::size(); ++k) {
            double r = RadialGrid::node(k);
            hat[k] = std::exp(r * r / 4) * f(r);
        }
        return SampledProfile(std::move(hat));
    }

    static SampledProfile from_hat(const std::function<double(double)>& fhat)
    {
        std::vector<double> hat(RadialGrid::size());
        for (int k = 0; k < RadialGrid::size(); ++k) hat[k] = fhat(RadialGrid::node(k));
        return SampledProfile(std::move(hat));
    }

    double hat(double rho, int deriv = 0) const
    {
        if (rho > RadialGrid::rho_max) return 0.0;
        double u = rho / RadialGrid::h;
        int k0 = std::clamp(static_cast<int>(u) - 2, 0, RadialGrid::intervals - 5);
        double val = detail::lagrange6(hat_, k0, u - k0, deriv);
        return deriv ? val / RadialGrid::h : val;
    }

    double operator()(double rho) const
    {
        if (rho > RadialGrid::rho_max) return 0.0;
        return std::exp(-rho * rho / 4) * hat(rho);
    }

    double derivative(double rho) const
    {
        if (rho > RadialGrid::rho_max) return 0.0;
        return std::exp(-rho * rho / 4) * (hat(rho, 1) - 0.5 * rho * hat(rho));
    }

    const std::vector<double>& hat_values() const { return hat_; }
    std::vector<double>& hat_values() { return hat_; }

private:
    std::vector<double> hat_;
};

// per-cell 8-point Gauss integrals of f over the radial grid
inline std::vector<double> cell_integrals(const std::function<double(double)>& f)
{
    std::vector<double> c(RadialGrid::intervals);
    for (int k = 0; k < RadialGrid::intervals; ++k)
        c[k] = quad::gauss<8>(f, RadialGrid::node(k), RadialGrid::node(k + 1));
    return c;
}

// m=1 stream solve: vr = φ = -m/(2ρ²) - J/2, vθ = (ρφ)' = m/(2ρ²) - J/2,
// m = ∫_0^ρ u² Ω, J = ∫_ρ^∞ Ω. Cos-mode input gives V_r = vr sinθ, V_θ = vθ cosθ;
// sin-mode input gives V_r = -vr cosθ, V_θ = vθ sinθ.
class StreamMode1 {
public:
    StreamMode1() = default;
    explicit StreamMode1(std::function<double(double)> omega) : omega_(std::move(omega))
    {
        auto cm = cell_integrals([this](double u) { return u * u * omega_(u); });
        auto cj = cell_integrals(omega_);
        int n = RadialGrid::size();
        m_.assign(n, 0.0);
        j_.assign(n, 0.0);
        for (int k = 1; k < n; ++k) m_[k] = m_[k - 1] + cm[k - 1];
        for (int k = n - 2; k >= 0; --k) j_[k] = j_[k + 1] + cj[k];
        for (double v : cj)
            if (!std::isfinite(v)) throw DomainError("stream solve: vorticity mode is not integrable");
    }

    double moment(double rho) const
    {
        if (rho >= RadialGrid::rho_max) return m_.back();
        int k = static_cast<int>(rho / RadialGrid::h);
        double a = RadialGrid::node(k);
        return m_[k] + quad::gauss<8>([this](double u) { return u * u * omega_(u); }, a, rho);
    }

    double tail(double rho) const
    {
        if (rho >= RadialGrid::rho_max) return 0.0;
        int k = static_cast<int>(rho / RadialGrid::h);
        double a = RadialGrid::node(k);
        return j_[k] - quad::gauss<8>(omega_, a, rho);
    }

    double vr(double rho) const
    {
        if (rho == 0) return -0.5 * tail(0);
        return -moment(rho) / (2 * rho * rho) - 0.5 * tail(rho);
    }

    double vtheta(double rho) const
    {
        if (rho == 0) return -0.5 * tail(0);
        return moment(rho) / (2 * rho * rho) - 0.5 * tail(rho);
    }

    double psi(double rho) const { return rho * vr(rho); }

    // values at grid nodes without partial cells
    double vr_node(int k) const
    {
        double r = RadialGrid::node(k);
        if (k == 0) return -0.5 * j_[0];
        return -m_[k] / (2 * r * r) - 0.5 * j_[k];
    }

private:
    std::function<double(double)> omega_;
    std::vector<double> m_, j_;
};

struct StreamModes {
    RadialMode psi, vr, vtheta;
};

inline StreamModes solve_stream_mode1(const RadialMode& omega)
{
    if (omega.m != 1) throw DomainError("solve_stream_mode1: mode index must be 1");
    auto solver = std::make_shared<StreamMode1>(omega.eval);
    StreamModes out;
    Parity dual = (omega.parity == Parity::sin) ? Parity::cos : Parity::sin;
    double sign = (omega.parity == Parity::sin) ? -1.0 : 1.0;
    out.psi = {1, omega.parity, [solver](double r) { return solver->psi(r); }, DecayClass::algebraic};
    out.vr = {1, dual, [solver, sign](double r) { return sign * solver->vr(r); }, DecayClass::algebraic};
    out.vtheta = {1, omega.parity, [solver](double r) { return solver->vtheta(r); }, DecayClass::algebraic};
    return out;
}

// m=0 azimuthal velocity (1/ρ) ∫_0^ρ u Ω du
inline RadialMode solve_stream_mode0(const RadialMode& omega)
{
    auto f = omega.eval;
    auto cells = std::make_shared<std::vector<double>>(RadialGrid::size(), 0.0);
    auto ci = cell_integrals([f](double u) { return u * f(u); });
    for (int k = 1; k < RadialGrid::size(); ++k) (*cells)[k] = (*cells)[k - 1] + ci[k - 1];
    auto eval = [f, cells](double rho) {
        if (rho == 0) return 0.0;
        double total;
        if (rho >= RadialGrid::rho_max) {
            total = cells->back();
        } else {
            int k = static_cast<int>(rho / RadialGrid::h);
            total = (*cells)[k] + quad::gauss<8>([&](double u) { return u * f(u); }, RadialGrid::node(k), rho);
        }
        return total / rho;
    };
    return {0, Parity::none, eval, DecayClass::algebraic};
}

struct Envelope {
    double C = 0;
    int M = 0;
    double tail_slope = 0; // log-log slope of e^{ρ²/4}|f| over the fit window
};

// |f| <= C (ρ^low + ρ^M) e^{-ρ²/4}: M from the tail slope of the scaled profile, C the supremum on [0, rho_max]
inline Envelope fit_gaussian_envelope(const std::function<double(double)>& f, int low = 1, int max_M = 8,
                                      double rho_max = 10.0, double fit_lo = 10.0, double fit_hi = 12.0)
{
    Envelope env;
    double a = std::abs(f(fit_lo)) * std::exp(fit_lo * fit_lo / 4);
    double b = std::abs(f(fit_hi)) * std::exp(fit_hi * fit_hi / 4);
    env.tail_slope = (a > 0 && b > 0) ? std::log(b / a) / std::log(fit_hi / fit_lo) : 0.0;
    env.M = std::clamp(static_cast<int>(std::ceil(env.tail_slope - 1e-9)), low, max_M);
    const int samples = 1000;
    for (int i = 1; i <= samples; ++i) {
        double r = rho_max * i / samples;
        double ratio = std::abs(f(r)) * std::exp(r * r / 4) / (std::pow(r, low) + std::pow(r, env.M));
        env.C = std::max(env.C, ratio);
    }
    return env;
}

} // namespace vortex

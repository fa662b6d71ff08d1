#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace vortex::quad {

struct Rule {
    std::vector<double> x; // on [-1, 1]
    std::vector<double> w;
};

template <unsigned N>
const Rule& gauss_legendre()
{
    static const Rule rule = [] {
        using G = boost::math::quadrature::gauss<double, N>;
        Rule r;
        const auto& a = G::abscissa();
        const auto& w = G::weights();
        for (std::size_t i = a.size(); i-- > 0;) {
            if (a[i] == 0.0) continue;
            r.x.push_back(-a[i]);
            r.w.push_back(w[i]);
        }
        for (std::size_t i = 0; i < a.size(); ++i) {
            r.x.push_back(a[i]);
            r.w.push_back(w[i]);
        }
        return r;
    }();
    return rule;
}

template <unsigned N, class F>
double gauss(F&& f, double a, double b)
{
    const Rule& r = gauss_legendre<N>();
    double half = 0.5 * (b - a), mid = 0.5 * (a + b), sum = 0;
    for (std::size_t i = 0; i < r.x.size(); ++i) sum += r.w[i] * f(mid + half * r.x[i]);
    return sum * half;
}

struct Result {
    double value = 0;
    double error = 0;
};

template <class F>
Result kronrod(F&& f, double a, double b, double tol = 1e-12, unsigned depth = 15)
{
    Result r;
    r.value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, depth, tol, &r.error);
    return r;
}

// ∫_a^∞ f
// Level selects a distinct integrator instance so nested calls never share one
template <int Level = 0, class F>
Result half_line(F&& f, double a, double tol = 1e-13)
{
    static thread_local boost::math::quadrature::exp_sinh<double> integrator;
    Result r;
    double l1 = 0;
    r.value = integrator.integrate(f, a, std::numeric_limits<double>::infinity(), tol, &r.error, &l1);
    return r;
}

template <int Level = 0, class F>
Result tanh_sinh(F&& f, double a, double b, double tol = 1e-12)
{
    static thread_local boost::math::quadrature::tanh_sinh<double> integrator;
    Result r;
    double l1 = 0;
    r.value = integrator.integrate(f, a, b, tol, &r.error, &l1);
    return r;
}

} // namespace vortex::quad

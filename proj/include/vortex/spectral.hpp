#pragma once

#include <complex>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include <fftw3.h>

#include "vortex/vec3.hpp"

namespace vortex::spectral {

using cplx = std::complex<double>;

namespace detail {

class PlanCache {
public:
    static PlanCache& instance()
    {
        static PlanCache cache;
        return cache;
    }

    std::pair<fftw_plan, fftw_plan> plans(int n)
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = plans_.find(n);
        if (it != plans_.end()) return it->second;
        std::vector<cplx> a(n), b(n);
        auto* pa = reinterpret_cast<fftw_complex*>(a.data());
        auto* pb = reinterpret_cast<fftw_complex*>(b.data());
        unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        fftw_plan fwd = fftw_plan_dft_1d(n, pa, pb, FFTW_FORWARD, flags);
        fftw_plan bwd = fftw_plan_dft_1d(n, pa, pb, FFTW_BACKWARD, flags);
        plans_[n] = {fwd, bwd};
        return {fwd, bwd};
    }

    ~PlanCache()
    {
        for (auto& [n, p] : plans_) {
            fftw_destroy_plan(p.first);
            fftw_destroy_plan(p.second);
        }
    }

private:
    PlanCache() = default;
    std::mutex mutex_;
    std::map<int, std::pair<fftw_plan, fftw_plan>> plans_;
};

} // namespace detail

inline std::vector<cplx> fft(const std::vector<cplx>& in)
{
    int n = static_cast<int>(in.size());
    std::vector<cplx> out(n);
    auto p = detail::PlanCache::instance().plans(n).first;
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data())),
                     reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

inline std::vector<cplx> fft(const std::vector<double>& in)
{
    return fft(std::vector<cplx>(in.begin(), in.end()));
}

// unnormalised inverse; callers divide by n
inline std::vector<cplx> ifft(const std::vector<cplx>& in)
{
    int n = static_cast<int>(in.size());
    std::vector<cplx> out(n);
    auto p = detail::PlanCache::instance().plans(n).second;
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data())),
                     reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

inline double wavenumber(int k, int n, double length)
{
    int kk = (k <= n / 2) ? k : k - n;
    return 2.0 * pi * kk / length;
}

// d-th derivative of periodic samples on [0, length); odd derivatives drop the Nyquist mode
inline std::vector<double> derivative(const std::vector<double>& f, double length, int order)
{
    int n = static_cast<int>(f.size());
    auto c = fft(f);
    for (int k = 0; k < n; ++k) {
        if (n % 2 == 0 && k == n / 2 && order % 2 == 1) {
            c[k] = 0;
            continue;
        }
        cplx ik(0.0, wavenumber(k, n, length));
        cplx factor = 1.0;
        for (int d = 0; d < order; ++d) factor *= ik;
        c[k] *= factor;
    }
    auto out = ifft(c);
    std::vector<double> r(n);
    for (int j = 0; j < n; ++j) r[j] = out[j].real() / n;
    return r;
}

inline std::vector<Vec3> derivative(const std::vector<Vec3>& f, double length, int order)
{
    std::size_t n = f.size();
    std::vector<Vec3> r(n);
    for (int comp = 0; comp < 3; ++comp) {
        std::vector<double> g(n);
        for (std::size_t j = 0; j < n; ++j) g[j] = f[j][comp];
        auto dg = derivative(g, length, order);
        for (std::size_t j = 0; j < n; ++j) r[j][comp] = dg[j];
    }
    return r;
}

// samples of f(s_j + delta) by trigonometric interpolation
inline std::vector<double> shift(const std::vector<double>& f, double length, double delta)
{
    int n = static_cast<int>(f.size());
    auto c = fft(f);
    for (int k = 0; k < n; ++k) {
        double kw = wavenumber(k, n, length);
        if (n % 2 == 0 && k == n / 2) {
            c[k] *= std::cos(kw * delta);
            continue;
        }
        c[k] *= std::polar(1.0, kw * delta);
    }
    auto out = ifft(c);
    std::vector<double> r(n);
    for (int j = 0; j < n; ++j) r[j] = out[j].real() / n;
    return r;
}

inline std::vector<Vec3> shift(const std::vector<Vec3>& f, double length, double delta)
{
    std::size_t n = f.size();
    std::vector<Vec3> r(n);
    for (int comp = 0; comp < 3; ++comp) {
        std::vector<double> g(n);
        for (std::size_t j = 0; j < n; ++j) g[j] = f[j][comp];
        auto sg = shift(g, length, delta);
        for (std::size_t j = 0; j < n; ++j) r[j][comp] = sg[j];
    }
    return r;
}

// F(s_j) = ∫_0^{s_j} f, exact for the trigonometric interpolant
inline std::vector<double> cumulative_integral(const std::vector<double>& f, double length)
{
    int n = static_cast<int>(f.size());
    auto c = fft(f);
    double mean = c[0].real() / n;
    std::vector<cplx> g(n, 0.0);
    for (int k = 1; k < n; ++k) {
        if (n % 2 == 0 && k == n / 2) continue;
        g[k] = c[k] / cplx(0.0, wavenumber(k, n, length));
    }
    auto out = ifft(g);
    std::vector<double> r(n);
    double base = out[0].real() / n;
    for (int j = 0; j < n; ++j) r[j] = mean * length * j / n + out[j].real() / n - base;
    return r;
}

// trigonometric interpolant of a real periodic sequence, evaluable anywhere
class FourierSeries {
public:
    FourierSeries() = default;
    FourierSeries(const std::vector<double>& samples, double length)
        : n_(static_cast<int>(samples.size())), length_(length), c_(fft(samples))
    {
        for (auto& v : c_) v /= n_;
    }

    double operator()(double s, int order = 0) const
    {
        double sum = 0;
        if (order == 0) sum = c_[0].real();
        int kmax = (n_ - 1) / 2;
        double w = 2.0 * pi / length_;
        cplx rot = std::polar(1.0, w * s);
        cplx e = rot;
        for (int k = 1; k <= kmax; ++k) {
            cplx ik(0.0, w * k);
            cplx factor = 1.0;
            for (int d = 0; d < order; ++d) factor *= ik;
            sum += 2.0 * (c_[k] * factor * e).real();
            e *= rot;
        }
        if (n_ % 2 == 0) {
            double kn = w * (n_ / 2);
            cplx ik(0.0, kn);
            cplx factor = 1.0;
            for (int d = 0; d < order; ++d) factor *= ik;
            sum += c_[n_ / 2].real() * (factor * std::polar(1.0, kn * s)).real();
        }
        return sum;
    }

    // f^{(order)}(s+u) - f^{(order)}(s), accurate relative to its own size for small u
    double difference(double s, double u, int order = 0) const
    {
        double w = 2.0 * pi / length_;
        cplx rot = std::polar(1.0, w * s);
        cplx w1(-2.0 * std::pow(std::sin(0.5 * w * u), 2), std::sin(w * u));
        cplx e = rot, wk = w1, sum = 0.0;
        int kmax = (n_ - 1) / 2;
        for (int k = 1; k <= kmax; ++k) {
            cplx ik(0.0, w * k);
            cplx factor = 1.0;
            for (int d = 0; d < order; ++d) factor *= ik;
            sum += 2.0 * c_[k] * factor * e * wk;
            e *= rot;
            wk = wk + w1 + wk * w1;
        }
        double out = sum.real();
        if (n_ % 2 == 0) {
            double kn = w * (n_ / 2);
            cplx ik(0.0, kn);
            cplx factor = 1.0;
            for (int d = 0; d < order; ++d) factor *= ik;
            out += c_[n_ / 2].real() * (factor * std::polar(1.0, kn * s) * wk).real();
        }
        return out;
    }

    int size() const { return n_; }
    double length() const { return length_; }

private:
    int n_ = 0;
    double length_ = 1.0;
    std::vector<cplx> c_;
};

class FourierCurve {
public:
    FourierCurve() = default;
    FourierCurve(const std::vector<Vec3>& samples, double length)
    {
        for (int comp = 0; comp < 3; ++comp) {
            std::vector<double> g(samples.size());
            for (std::size_t j = 0; j < samples.size(); ++j) g[j] = samples[j][comp];
            series_[comp] = FourierSeries(g, length);
        }
    }

    Vec3 operator()(double s, int order = 0) const
    {
        return {series_[0](s, order), series_[1](s, order), series_[2](s, order)};
    }

    Vec3 difference(double s, double u, int order = 0) const
    {
        return {series_[0].difference(s, u, order), series_[1].difference(s, u, order),
                series_[2].difference(s, u, order)};
    }

    double length() const { return series_[0].length(); }
    int size() const { return series_[0].size(); }

private:
    FourierSeries series_[3];
};

} // namespace vortex::spectral

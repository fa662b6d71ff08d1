#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vortex/errors.hpp"
#include "vortex/spectral.hpp"
#include "vortex/vec3.hpp"

namespace vortex {

struct ClosedCurve {
    std::vector<Vec3> nodes;
    double length = 0;

    int size() const { return static_cast<int>(nodes.size()); }
    double spacing() const { return length / nodes.size(); }
};

namespace detail {

inline std::vector<Vec3> strip_closure(std::vector<Vec3> pts)
{
    if (pts.size() < 4) throw DomainError("curve needs at least 4 sample points");
    std::vector<double> gaps;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) gaps.push_back(norm(pts[i + 1] - pts[i]));
    std::vector<double> sorted = gaps;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    double median = sorted[sorted.size() / 2];
    double closing = norm(pts.front() - pts.back());
    if (closing <= 1e-12 * std::max(median, 1e-300) * pts.size()) {
        pts.pop_back();
        return pts;
    }
    if (closing > 10.0 * median) throw DomainError("curve is not closed: end-point gap " + std::to_string(closing));
    return pts;
}

} // namespace detail

// samples are taken to be uniform in some smooth periodic parameter
inline ClosedCurve resample_arclength(const std::vector<Vec3>& samples, int N)
{
    if (N < 16) throw ConfigError("resample_arclength: N must be at least 16, got " + std::to_string(N));
    std::vector<Vec3> pts = detail::strip_closure(samples);
    int m = static_cast<int>(pts.size());
    const double period = 2.0 * pi;
    spectral::FourierCurve X(pts, period);
    auto dx = spectral::derivative(pts, period, 1);
    std::vector<double> speed(m);
    for (int j = 0; j < m; ++j) speed[j] = norm(dx[j]);
    double mean_speed = 0;
    for (double v : speed) mean_speed += v;
    mean_speed /= m;
    double L = mean_speed * period;
    auto s_nodes = spectral::cumulative_integral(speed, period);
    std::vector<double> periodic(m);
    for (int j = 0; j < m; ++j) periodic[j] = s_nodes[j] - mean_speed * period * j / m;
    spectral::FourierSeries P(periodic, period), S(speed, period);
    auto arc = [&](double phi) { return mean_speed * phi + P(phi); };

    ClosedCurve out;
    out.length = L;
    out.nodes.resize(N);
    int seg = 0;
    for (int k = 0; k < N; ++k) {
        double target = L * k / N;
        while (seg + 1 < m && s_nodes[seg + 1] <= target) ++seg;
        double s0 = s_nodes[seg];
        double s1 = (seg + 1 < m) ? s_nodes[seg + 1] : L;
        double phi = period * (seg + (s1 > s0 ? (target - s0) / (s1 - s0) : 0.0)) / m;
        bool converged = false;
        for (int it = 0; it < 60; ++it) {
            double step = (arc(phi) - target) / S(phi);
            phi -= step;
            if (std::abs(step) < 1e-15 * period) {
                converged = true;
                break;
            }
        }
        if (!converged) throw NonConvergenceError("resample_arclength: arclength inversion did not converge");
        out.nodes[k] = X(phi);
    }
    return out;
}

inline ClosedCurve resample_arclength(const ClosedCurve& curve, int N)
{
    return resample_arclength(curve.nodes, N);
}

struct CurveSpec {
    std::string type = "circle";
    std::map<std::string, double> params;
    std::string file;

    double get(const std::string& key, double fallback) const
    {
        auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    }
};

inline int oversampled(int N) { return std::max(4 * N, 512); }

inline ClosedCurve make_circle(double R, int N)
{
    if (!(R > 0)) throw ConfigError("circle: R must be positive");
    int m = oversampled(N);
    std::vector<Vec3> p(m);
    for (int j = 0; j < m; ++j) {
        double phi = 2 * pi * j / m;
        p[j] = {R * std::cos(phi), R * std::sin(phi), 0.0};
    }
    return resample_arclength(p, N);
}

inline ClosedCurve make_ellipse(double a, double b, int N)
{
    if (!(a > 0 && b > 0)) throw ConfigError("ellipse: a and b must be positive");
    int m = oversampled(N);
    std::vector<Vec3> p(m);
    for (int j = 0; j < m; ++j) {
        double phi = 2 * pi * j / m;
        p[j] = {a * std::cos(phi), b * std::sin(phi), 0.0};
    }
    return resample_arclength(p, N);
}

inline ClosedCurve make_perturbed_ring(double R, int n, double amplitude, double zeta, int N)
{
    if (!(R > 0)) throw ConfigError("perturbed-ring: R must be positive");
    if (std::abs(amplitude) >= R) throw ConfigError("perturbed-ring: amplitude must be below R");
    int m = oversampled(std::max(N, 8 * std::abs(n)));
    std::vector<Vec3> p(m);
    for (int j = 0; j < m; ++j) {
        double phi = 2 * pi * j / m;
        double rr = R + amplitude * std::cos(n * phi);
        p[j] = {rr * std::cos(phi), rr * std::sin(phi), amplitude * std::sin(n * phi) * zeta};
    }
    return resample_arclength(p, N);
}

inline std::vector<Vec3> read_curve_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("from-file: cannot open " + path);
    std::vector<Vec3> pts;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        Vec3 v;
        if (!(ss >> v.x >> v.y >> v.z)) {
            if (pts.empty()) continue; // header row
            throw ConfigError("from-file: malformed row " + std::to_string(lineno) + " in " + path);
        }
        pts.push_back(v);
    }
    return pts;
}

inline ClosedCurve make_curve(const CurveSpec& spec, int N)
{
    if (spec.type == "circle") return make_circle(spec.get("R", 1.0), N);
    if (spec.type == "ellipse") return make_ellipse(spec.get("a", 2.0), spec.get("b", 1.0), N);
    if (spec.type == "perturbed-ring")
        return make_perturbed_ring(spec.get("R", 1.0), static_cast<int>(spec.get("n", 2)),
                                   spec.get("amplitude", 1e-3), spec.get("zeta", 0.0), N);
    if (spec.type == "from-file") return resample_arclength(read_curve_csv(spec.file), N);
    throw ConfigError("unknown curve type '" + spec.type + "'");
}

struct FrameField {
    std::vector<Vec3> t, n, b;
    std::vector<double> kappa, tau;
    std::vector<double> kappa_s, kappa_ss, tau_s;
    std::vector<Vec3> e1, e2;
    std::vector<double> theta0;
    double holonomy = 0;
};

inline FrameField compute_frenet(const ClosedCurve& curve)
{
    const int N = curve.size();
    const double L = curve.length;
    auto d1 = spectral::derivative(curve.nodes, L, 1);
    auto d2 = spectral::derivative(curve.nodes, L, 2);
    auto d3 = spectral::derivative(curve.nodes, L, 3);
    FrameField f;
    f.t.resize(N);
    f.n.resize(N);
    f.b.resize(N);
    f.kappa.resize(N);
    f.tau.resize(N);
    const double kmin = 1e-8 * (2 * pi / L);
    for (int j = 0; j < N; ++j) {
        double sp = norm(d1[j]);
        Vec3 c = cross(d1[j], d2[j]);
        double cn = norm(c);
        double kappa = cn / (sp * sp * sp);
        if (!(kappa >= kmin))
            throw DegenerateFrameError("Frenet frame undefined: curvature " + std::to_string(kappa) + " at node " +
                                       std::to_string(j));
        f.t[j] = d1[j] / sp;
        f.b[j] = c / cn;
        f.n[j] = cross(f.b[j], f.t[j]);
        f.kappa[j] = kappa;
        f.tau[j] = dot(c, d3[j]) / (cn * cn);
    }
    f.kappa_s = spectral::derivative(f.kappa, L, 1);
    f.kappa_ss = spectral::derivative(f.kappa, L, 2);
    f.tau_s = spectral::derivative(f.tau, L, 1);
    return f;
}

// transports e1 with e1_s = -(t_s . e1) t; returns the holonomy angle
inline double compute_parallel_frame(const ClosedCurve& curve, FrameField& f, Vec3 seed, int substeps = 4)
{
    const int N = curve.size();
    const double L = curve.length;
    const double h = L / N;
    auto ts = spectral::derivative(f.t, L, 1);
    const int m = std::max(1, substeps);
    // t and t_s on the 2m half-substep offsets
    std::vector<std::vector<Vec3>> T(2 * m + 1), TS(2 * m + 1);
    for (int q = 0; q <= 2 * m; ++q) {
        double delta = q * h / (2 * m);
        T[q] = (q == 0) ? f.t : spectral::shift(f.t, L, delta);
        TS[q] = (q == 0) ? ts : spectral::shift(ts, L, delta);
    }
    auto at = [&](const std::vector<std::vector<Vec3>>& tab, int node, int q) -> Vec3 {
        if (q == 2 * m) return tab[0][(node + 1) % N];
        return tab[q][node];
    };
    auto rhs = [&](int node, int q, const Vec3& e) {
        Vec3 tt = at(T, node, q);
        return -dot(at(TS, node, q), e) * tt;
    };
    auto project = [](Vec3 e, const Vec3& tt) {
        e -= dot(e, tt) * tt;
        return normalized(e);
    };

    Vec3 e = project(seed, f.t[0]);
    const Vec3 e_seed = e;
    f.e1.assign(N, Vec3{});
    f.e2.assign(N, Vec3{});
    const double dh = h / m;
    for (int j = 0; j < N; ++j) {
        f.e1[j] = e;
        f.e2[j] = cross(f.t[j], e);
        for (int sub = 0; sub < m; ++sub) {
            int q0 = 2 * sub, q1 = 2 * sub + 1, q2 = 2 * sub + 2;
            Vec3 k1 = rhs(j, q0, e);
            Vec3 k2 = rhs(j, q1, e + 0.5 * dh * k1);
            Vec3 k3 = rhs(j, q1, e + 0.5 * dh * k2);
            Vec3 k4 = rhs(j, q2, e + dh * k3);
            e += (dh / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            e = project(e, at(T, j, q2));
        }
    }
    f.theta0 = spectral::cumulative_integral(f.tau, L);
    f.holonomy = std::atan2(dot(cross(e_seed, e), f.t[0]), dot(e_seed, e));
    return f.holonomy;
}

inline FrameField compute_frames(const ClosedCurve& curve)
{
    FrameField f = compute_frenet(curve);
    compute_parallel_frame(curve, f, f.n[0]);
    return f;
}

struct LocalFrame {
    Vec3 x, t, n, b;
    double kappa = 0, tau = 0;
};

struct TubePoint {
    double s = 0, r = 0, theta = 0, rho = 0;
};

struct TubeChart {
    double R = 0;
};

struct TubeRadius {
    double R = 0;
    double curvature_bound = 0; // 1/(2 max kappa)
    double self_distance = std::numeric_limits<double>::infinity();
    bool self_distance_branch = false;
    bool under_resolved = false;
};

// closed curve with its frames and a spectral interpolant for off-node queries
class Filament {
public:
    Filament() = default;
    explicit Filament(ClosedCurve c) : curve_(std::move(c)), frames_(compute_frames(curve_)), interp_(curve_.nodes, curve_.length) {}

    const ClosedCurve& curve() const { return curve_; }
    const FrameField& frames() const { return frames_; }
    const spectral::FourierCurve& interp() const { return interp_; }
    double length() const { return curve_.length; }
    int size() const { return curve_.size(); }

    LocalFrame frame_at(double s) const
    {
        Vec3 d1 = interp_(s, 1), d2 = interp_(s, 2), d3 = interp_(s, 3);
        LocalFrame fr;
        fr.x = interp_(s, 0);
        double sp = norm(d1);
        Vec3 c = cross(d1, d2);
        double cn = norm(c);
        fr.t = d1 / sp;
        fr.kappa = cn / (sp * sp * sp);
        if (cn > 0) {
            fr.b = c / cn;
            fr.n = cross(fr.b, fr.t);
            fr.tau = dot(c, d3) / (cn * cn);
        }
        return fr;
    }

private:
    ClosedCurve curve_;
    FrameField frames_;
    spectral::FourierCurve interp_;
};

inline TubeRadius tube_radius(const ClosedCurve& curve, const FrameField& f, double safety, double grid_spacing = 0)
{
    if (!(safety > 0 && safety <= 1)) throw ConfigError("tube_radius: safety must lie in (0, 1]");
    const int N = curve.size();
    TubeRadius out;
    double kmax = *std::max_element(f.kappa.begin(), f.kappa.end());
    out.curvature_bound = 1.0 / (2.0 * kmax);
    const int band = std::max(1, (N + 7) / 8);
    auto dist = [&](int i, int j) { return norm(curve.nodes[i] - curve.nodes[((j % N) + N) % N]); };
    for (int i = 0; i < N; ++i) {
        for (int off = band + 1; off <= N - band - 1; ++off) {
            double dm = dist(i, i + off - 1), d0 = dist(i, i + off), dp = dist(i, i + off + 1);
            bool is_min = d0 < dm && d0 <= dp;
            bool is_max = d0 > dm && d0 >= dp;
            if (!is_min && !is_max) continue;
            double denom = dm - 2 * d0 + dp;
            double value = d0;
            if (denom != 0) {
                double shift = 0.5 * (dm - dp) / denom;
                value = d0 - 0.25 * (dm - dp) * shift;
            }
            out.self_distance = std::min(out.self_distance, value);
        }
    }
    double half_self = 0.5 * out.self_distance;
    out.self_distance_branch = half_self < out.curvature_bound;
    out.R = safety * std::min(out.curvature_bound, half_self);
    if (grid_spacing > 0 && out.R < 8 * grid_spacing) out.under_resolved = true;
    return out;
}

inline int nearest_node(const ClosedCurve& curve, const Vec3& x)
{
    int best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (int j = 0; j < curve.size(); ++j) {
        Vec3 d = x - curve.nodes[j];
        double dd = dot(d, d);
        if (dd < bd) {
            bd = dd;
            best = j;
        }
    }
    return best;
}

inline double foot_parameter(const Filament& fil, const Vec3& x)
{
    const double L = fil.length();
    double s = fil.curve().spacing() * nearest_node(fil.curve(), x);
    for (int it = 0; it < 20; ++it) {
        Vec3 X = fil.interp()(s, 0), d1 = fil.interp()(s, 1), d2 = fil.interp()(s, 2);
        Vec3 diff = x - X;
        double g = dot(diff, d1);
        double dg = -dot(d1, d1) + dot(diff, d2);
        if (dg >= 0) dg = -dot(d1, d1);
        double step = g / dg;
        s -= step;
        if (std::abs(step) < 1e-14 * L) {
            s = std::fmod(s, L);
            if (s < 0) s += L;
            return s;
        }
    }
    throw NonConvergenceError("project_to_tube: foot-point Newton iteration did not converge in 20 steps");
}

inline TubePoint project_to_tube(const TubeChart& chart, const Filament& fil, const Vec3& x, double nu_t = 0)
{
    TubePoint p;
    p.s = foot_parameter(fil, x);
    LocalFrame fr = fil.frame_at(p.s);
    Vec3 d = x - fr.x;
    p.r = norm(d);
    if (p.r >= chart.R) throw OutOfChartError("point lies outside the tube (r = " + std::to_string(p.r) + ")");
    p.theta = (p.r > 0) ? std::atan2(dot(d, fr.b), dot(d, fr.n)) : 0.0;
    if (nu_t > 0) p.rho = p.r / std::sqrt(nu_t);
    return p;
}

inline std::optional<TubePoint> try_project_to_tube(const TubeChart& chart, const Filament& fil, const Vec3& x,
                                                     double nu_t = 0)
{
    int j = nearest_node(fil.curve(), x);
    if (norm(x - fil.curve().nodes[j]) > chart.R + 2 * fil.curve().spacing()) return std::nullopt;
    try {
        return project_to_tube(chart, fil, x, nu_t);
    } catch (const OutOfChartError&) {
        return std::nullopt;
    }
}

inline Vec3 reconstruct(const Filament& fil, const TubePoint& p)
{
    LocalFrame fr = fil.frame_at(p.s);
    return fr.x + p.r * std::cos(p.theta) * fr.n + p.r * std::sin(p.theta) * fr.b;
}

// parallel-frame angle of a tube point
inline double parallel_angle(double theta, double theta0) { return theta + theta0; }

} // namespace vortex

#pragma once

#include "tlconv/eqconv.hpp"
#include "tlconv/filter.hpp"
#include "tlconv/group.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace oracle {

using tlconv::Mat2;
using tlconv::Plane;

inline Plane random_plane(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> d(0.0, 1.0);
    Plane p(n);
    for (double& v : p.values()) v = d(rng);
    return p;
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> d(0.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = d(rng);
    return v;
}

/// Quadruple loop zero-padded cross-correlation.
inline Plane naive_conv(const Plane& x, const Plane& k) {
    const int n = x.size();
    const int p = k.size();
    const int c = p / 2;
    Plane out(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int u = 0; u < p; ++u)
                for (int v = 0; v < p; ++v) {
                    const int a = i + u - c;
                    const int b = j + v - c;
                    if (a >= 0 && a < n && b >= 0 && b < n) s += k(u, v) * x(a, b);
                }
            out(i, j) = s;
        }
    return out;
}

/// Rotation by 2 pi k / t built from trigonometry, independent of the library.
inline Mat2 rot(int k, int t) {
    const double th = 2.0 * M_PI * k / t;
    return {std::cos(th), std::sin(th), -std::sin(th), std::cos(th)};
}

inline Mat2 dw(const tlconv::TransformParams& w) {
    const Mat2 r{std::cos(w.alpha), std::sin(w.alpha), -std::sin(w.alpha), std::cos(w.alpha)};
    return r * Mat2{w.sx, 0.0, 0.0, w.sy};
}

/// Samples phi_{pf}(m delta_uv) on the p x p grid at the filter mesh.
inline Plane sample_direct(const tlconv::ParamFilter& pf, const Mat2& m) {
    const int p = pf.spec.p;
    Plane out(p);
    for (int u = 0; u < p; ++u)
        for (int v = 0; v < p; ++v) {
            const tlconv::Vec2 d{tlconv::grid_coord(u, p, pf.spec.h), tlconv::grid_coord(v, p, pf.spec.h)};
            out(u, v) = tlconv::filter_eval(pf, m, d);
        }
    return out;
}

/// Direct form of the intermediate layer: for every output index b and input
/// index a, the filter phi_{B^-1 A} is sampled at B^-1 D^-1 delta and correlated
/// with F[a]. No precomputed stack or index shift is involved.
inline tlconv::GroupFeatureMap direct_mid_layer(const tlconv::GroupFeatureMap& f,
                                                const std::vector<tlconv::ParamFilter>& pfs,
                                                const tlconv::TransformParams& w) {
    const int t = f.t();
    tlconv::GroupFeatureMap out(f.n(), t, f.h);
    const Mat2 dinv = dw(w).inverse();
    for (int b = 0; b < t; ++b) {
        const Mat2 m = rot(b, t).inverse() * dinv;
        for (int a = 0; a < t; ++a) {
            int rel = a - b;
            while (rel < 0) rel += t;
            out.slices[b] += naive_conv(f.slices[a], sample_direct(pfs[rel], m));
        }
    }
    return out;
}

/// Triple-sum reference of the output layer.
inline Plane naive_output(const tlconv::GroupFeatureMap& f, const std::vector<Plane>& stack) {
    const int n = f.n();
    const int p = stack.front().size();
    const int c = p / 2;
    Plane out(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int b = 0; b < f.t(); ++b)
                for (int u = 0; u < p; ++u)
                    for (int v = 0; v < p; ++v) {
                        const int a = i + u - c;
                        const int q = j + v - c;
                        if (a >= 0 && a < n && q >= 0 && q < n) s += stack[b](u, v) * f.slices[b](a, q);
                    }
            out(i, j) = s;
        }
    return out;
}

inline double max_diff(const Plane& a, const Plane& b) {
    double m = 0.0;
    for (int i = 0; i < a.size(); ++i)
        for (int j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
    return m;
}

inline double max_diff(const tlconv::GroupFeatureMap& a, const tlconv::GroupFeatureMap& b) {
    double m = 0.0;
    for (int k = 0; k < a.t(); ++k) m = std::max(m, max_diff(a.slices[k], b.slices[k]));
    return m;
}

/// Array rotation by 90 degrees: out(i, j) = p(n - 1 - j, i).
inline Plane rot90(const Plane& p) {
    const int n = p.size();
    Plane out(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out(i, j) = p(n - 1 - j, i);
    return out;
}

inline Plane reflect(const Plane& p) {
    const int n = p.size();
    Plane out(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out(i, j) = p(n - 1 - i, n - 1 - j);
    return out;
}

}  // namespace oracle

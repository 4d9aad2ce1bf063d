#include "tlconv/group.hpp"

#include <algorithm>
#include <numbers>
#include <stdexcept>
#include <string>

namespace tlconv {

double Mat2::spectral_norm() const {
    // sqrt of the largest eigenvalue of M^T M
    const double p = a * a + b * b + c * c + d * d;
    const double q = std::abs(det());
    const double disc = std::sqrt(std::max(0.0, p * p - 4.0 * q * q));
    return std::sqrt(0.5 * (p + disc));
}

double Mat2::min_singular_value() const {
    const double smax = spectral_norm();
    return smax == 0.0 ? 0.0 : std::abs(det()) / smax;
}

double max_abs_diff(const Mat2& l, const Mat2& r) {
    return std::max({std::abs(l.a - r.a), std::abs(l.b - r.b), std::abs(l.c - r.c),
                     std::abs(l.d - r.d)});
}

double param_distance(const TransformParams& l, const TransformParams& r) {
    const double da = l.alpha - r.alpha;
    const double dx = l.sx - r.sx;
    const double dy = l.sy - r.sy;
    return std::sqrt(da * da + dx * dx + dy * dy);
}

double wrap_angle(double theta) {
    constexpr double pi = std::numbers::pi;
    double r = std::fmod(theta + pi, 2.0 * pi);
    if (r < 0.0) r += 2.0 * pi;
    // r in [0, 2pi); map 0 to pi so the result lies in (-pi, pi]
    return r == 0.0 ? pi : r - pi;
}

GroupSpec::GroupSpec(int t, TransformParams w) : t_(t), w_(w) {
    if (t < 1) throw std::invalid_argument("group order must be >= 1, got " + std::to_string(t));
    if (!(w.sx > 0.0) || !(w.sy > 0.0) || !std::isfinite(w.sx) || !std::isfinite(w.sy))
        throw std::invalid_argument("scales s_x, s_y must be positive and finite");
    if (!std::isfinite(w.alpha)) throw std::invalid_argument("alpha must be finite");
    w_.alpha = wrap_angle(w.alpha);
}

bool GroupSpec::in_recommended_range() const {
    return w_.sx >= 0.5 && w_.sx <= 1.5 && w_.sy >= 0.5 && w_.sy <= 1.5;
}

Mat2 rotation_matrix(double theta) {
    if (!std::isfinite(theta)) throw std::invalid_argument("rotation angle must be finite");
    const double cs = std::cos(theta);
    const double sn = std::sin(theta);
    return {cs, sn, -sn, cs};
}

Mat2 group_rotation(int k, int t) {
    k = ((k % t) + t) % t;
    if ((4 * k) % t == 0) {
        switch ((4 * k) / t) {
            case 0: return {1.0, 0.0, 0.0, 1.0};
            case 1: return {0.0, 1.0, -1.0, 0.0};
            case 2: return {-1.0, 0.0, 0.0, -1.0};
            case 3: return {0.0, -1.0, 1.0, 0.0};
            default: break;
        }
    }
    return rotation_matrix(2.0 * std::numbers::pi * k / t);
}

Mat2 dw_matrix(const TransformParams& w) {
    if (!(w.sx > 0.0) || !(w.sy > 0.0)) throw std::invalid_argument("scales must be positive");
    const double cs = std::cos(w.alpha);
    const double sn = std::sin(w.alpha);
    return {w.sx * cs, w.sy * sn, -w.sx * sn, w.sy * cs};
}

Mat2 dw_inverse(const TransformParams& w) {
    if (!(w.sx > 0.0) || !(w.sy > 0.0)) throw std::invalid_argument("scales must be positive");
    const double cs = std::cos(w.alpha);
    const double sn = std::sin(w.alpha);
    // diag(1/sx, 1/sy) * [[cs, -sn], [sn, cs]]
    return {cs / w.sx, -sn / w.sx, sn / w.sy, cs / w.sy};
}

std::array<Mat2, 3> dw_inverse_jacobian(const TransformParams& w) {
    const double cs = std::cos(w.alpha);
    const double sn = std::sin(w.alpha);
    const Mat2 d_alpha{-sn / w.sx, -cs / w.sx, cs / w.sy, -sn / w.sy};
    const Mat2 d_sx{-cs / (w.sx * w.sx), sn / (w.sx * w.sx), 0.0, 0.0};
    const Mat2 d_sy{0.0, 0.0, -sn / (w.sy * w.sy), -cs / (w.sy * w.sy)};
    return {d_alpha, d_sx, d_sy};
}

Mat2 conjugate_element(const GroupSpec& spec, int k) {
    const int t = spec.order();
    if (k < 0 || k >= t) throw std::invalid_argument("group index out of range");
    if (k == 0) return Mat2::identity();
    const Mat2 rot = group_rotation(k, t);
    if (2 * k == t) return rot;  // -I is central
    return dw_matrix(spec.params()) * rot * dw_inverse(spec.params());
}

std::vector<Mat2> group_elements(const GroupSpec& spec) {
    std::vector<Mat2> out;
    out.reserve(spec.order());
    for (int k = 0; k < spec.order(); ++k) out.push_back(conjugate_element(spec, k));
    return out;
}

ClosureReport verify_closure(const GroupSpec& spec, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("closure tolerance must be positive");
    const int t = spec.order();
    const auto elems = group_elements(spec);
    ClosureReport rep;
    for (int i = 0; i < t; ++i) {
        for (int j = 0; j < t; ++j) {
            const double dev = max_abs_diff(elems[i] * elems[j], elems[(i + j) % t]);
            if (dev > rep.max_deviation) {
                rep.max_deviation = dev;
                rep.worst_i = i;
                rep.worst_j = j;
            }
        }
    }
    rep.ok = rep.max_deviation <= tol;
    if (rep.ok) rep.worst_i = rep.worst_j = -1;
    return rep;
}

int group_index_compose(int a, int b, int t) { return (a + b) % t; }

int group_index_inverse(int a, int t) { return (t - a) % t; }

}  // namespace tlconv

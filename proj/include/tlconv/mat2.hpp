#pragma once

#include <array>
#include <cmath>

namespace tlconv {

struct Vec2 {
    double x0 = 0.0;
    double x1 = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x0 + b.x0, a.x1 + b.x1}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x0 - b.x0, a.x1 - b.x1}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x0, s * a.x1}; }
    double dot(Vec2 o) const { return x0 * o.x0 + x1 * o.x1; }
    double norm() const { return std::hypot(x0, x1); }
};

/// Row-major 2x2 matrix: [[a, b], [c, d]].
struct Mat2 {
    double a = 1.0, b = 0.0, c = 0.0, d = 1.0;

    static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }

    double det() const { return a * d - b * c; }
    Mat2 transpose() const { return {a, c, b, d}; }
    Mat2 inverse() const {
        const double k = 1.0 / det();
        return {d * k, -b * k, -c * k, a * k};
    }

    friend Mat2 operator*(const Mat2& l, const Mat2& r) {
        return {l.a * r.a + l.b * r.c, l.a * r.b + l.b * r.d,
                l.c * r.a + l.d * r.c, l.c * r.b + l.d * r.d};
    }
    friend Vec2 operator*(const Mat2& m, Vec2 x) {
        return {m.a * x.x0 + m.b * x.x1, m.c * x.x0 + m.d * x.x1};
    }
    friend Mat2 operator+(const Mat2& l, const Mat2& r) {
        return {l.a + r.a, l.b + r.b, l.c + r.c, l.d + r.d};
    }
    friend Mat2 operator-(const Mat2& l, const Mat2& r) {
        return {l.a - r.a, l.b - r.b, l.c - r.c, l.d - r.d};
    }
    friend Mat2 operator*(double s, const Mat2& m) { return {s * m.a, s * m.b, s * m.c, s * m.d}; }

    std::array<double, 4> to_array() const { return {a, b, c, d}; }

    /// Largest singular value.
    double spectral_norm() const;
    /// Smallest singular value.
    double min_singular_value() const;
};

double max_abs_diff(const Mat2& l, const Mat2& r);

}  // namespace tlconv

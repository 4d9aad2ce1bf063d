#pragma once

#include "tlconv/mat2.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace tlconv {

/// Square row-major array of doubles. Used for images, feature slices and
/// sampled filters alike.
class Plane {
public:
    Plane() = default;
    explicit Plane(int n, double fill = 0.0);

    int size() const { return n_; }
    double& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * n_ + j]; }
    double operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * n_ + j]; }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }
    double* row(int i) { return data_.data() + static_cast<std::size_t>(i) * n_; }
    const double* row(int i) const { return data_.data() + static_cast<std::size_t>(i) * n_; }

    Plane& operator+=(const Plane& o);
    Plane& operator*=(double s);
    friend Plane operator+(Plane l, const Plane& r) { return l += r; }
    friend Plane operator*(double s, Plane p) { return p *= s; }

    bool operator==(const Plane&) const = default;

private:
    int n_ = 0;
    std::vector<double> data_;
};

/// Centered coordinate of index i on an n-point grid with mesh h:
/// (i - (n - 1) / 2) * h for zero-based i.
inline double grid_coord(int i, int n, double h) { return (i - 0.5 * (n - 1)) * h; }

/// n x n sampled image with mesh h, centered at the origin.
struct GridImage {
    Plane data;
    double h = 1.0;

    int n() const { return data.size(); }
    Vec2 point(int i, int j) const { return {grid_coord(i, n(), h), grid_coord(j, n(), h)}; }
};

/// n x n x t feature map; slices[k] holds group index k.
struct GroupFeatureMap {
    std::vector<Plane> slices;
    double h = 1.0;

    GroupFeatureMap() = default;
    GroupFeatureMap(int n, int t, double h);

    int n() const { return slices.empty() ? 0 : slices.front().size(); }
    int t() const { return static_cast<int>(slices.size()); }
    double& at(int i, int j, int k) { return slices[k](i, j); }
    double at(int i, int j, int k) const { return slices[k](i, j); }
};

/// Sup-norm of l - r restricted to indices [crop, n - crop).
double max_abs_diff(const Plane& l, const Plane& r, int crop = 0);
double mean_abs_diff(const Plane& l, const Plane& r, int crop = 0);

/// Exact array transforms on square planes.
Plane rotate90(const Plane& p);        // out(i, j) = p(n-1-j, i)
Plane point_reflect(const Plane& p);   // out(i, j) = p(n-1-i, n-1-j)

}  // namespace tlconv

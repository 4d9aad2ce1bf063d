#include "tlconv/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tlconv {

Plane::Plane(int n, double fill) : n_(n), data_(static_cast<std::size_t>(n) * n, fill) {
    if (n < 0) throw std::invalid_argument("plane size must be nonnegative");
}

Plane& Plane::operator+=(const Plane& o) {
    if (o.n_ != n_) throw std::invalid_argument("plane size mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
}

Plane& Plane::operator*=(double s) {
    for (double& x : data_) x *= s;
    return *this;
}

GroupFeatureMap::GroupFeatureMap(int n, int t, double h) : slices(t, Plane(n)), h(h) {}

double max_abs_diff(const Plane& l, const Plane& r, int crop) {
    if (l.size() != r.size()) throw std::invalid_argument("plane size mismatch");
    const int n = l.size();
    double m = 0.0;
    for (int i = crop; i < n - crop; ++i)
        for (int j = crop; j < n - crop; ++j) m = std::max(m, std::abs(l(i, j) - r(i, j)));
    return m;
}

double mean_abs_diff(const Plane& l, const Plane& r, int crop) {
    if (l.size() != r.size()) throw std::invalid_argument("plane size mismatch");
    const int n = l.size();
    double s = 0.0;
    long count = 0;
    for (int i = crop; i < n - crop; ++i) {
        for (int j = crop; j < n - crop; ++j) {
            s += std::abs(l(i, j) - r(i, j));
            ++count;
        }
    }
    return count == 0 ? 0.0 : s / static_cast<double>(count);
}

Plane rotate90(const Plane& p) {
    const int n = p.size();
    Plane out(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out(i, j) = p(n - 1 - j, i);
    return out;
}

Plane point_reflect(const Plane& p) {
    const int n = p.size();
    Plane out(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out(i, j) = p(n - 1 - i, n - 1 - j);
    return out;
}

}  // namespace tlconv

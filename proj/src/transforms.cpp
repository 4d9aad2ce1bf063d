#include "tlconv/transforms.hpp"

#include "tlconv/filter.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace tlconv {

namespace {

double min_eigenvalue_sym(const Mat2& s) {
    const double mean = 0.5 * (s.a + s.d);
    const double diff = 0.5 * (s.a - s.d);
    return mean - std::sqrt(diff * diff + s.b * s.b);
}

}  // namespace

AnalyticImage::AnalyticImage(std::vector<GaussianBump> bumps) : bumps_(std::move(bumps)) {
    for (const GaussianBump& b : bumps_) {
        if (std::abs(b.cov.b - b.cov.c) > 1e-12 * (std::abs(b.cov.a) + std::abs(b.cov.d)))
            throw std::invalid_argument("bump covariance must be symmetric");
        const double lmin = min_eigenvalue_sym(b.cov);
        if (!(lmin > 0.0)) throw std::invalid_argument("bump covariance must be positive definite");
        cache_.push_back({b.cov.inverse(), lmin});
    }
}

double AnalyticImage::value(Vec2 x) const {
    double r = 0.0;
    for (std::size_t i = 0; i < bumps_.size(); ++i) {
        const Vec2 d = x - bumps_[i].center;
        r += bumps_[i].amplitude * std::exp(-0.5 * d.dot(cache_[i].precision * d));
    }
    return r;
}

Vec2 AnalyticImage::gradient(Vec2 x) const {
    Vec2 g;
    for (std::size_t i = 0; i < bumps_.size(); ++i) {
        const Vec2 d = x - bumps_[i].center;
        const Vec2 pd = cache_[i].precision * d;
        const double e = bumps_[i].amplitude * std::exp(-0.5 * d.dot(pd));
        g = g - e * pd;
    }
    return g;
}

Mat2 AnalyticImage::hessian(Vec2 x) const {
    Mat2 hs{0.0, 0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < bumps_.size(); ++i) {
        const Vec2 d = x - bumps_[i].center;
        const Mat2& p = cache_[i].precision;
        const Vec2 pd = p * d;
        const double e = bumps_[i].amplitude * std::exp(-0.5 * d.dot(pd));
        const Mat2 outer{pd.x0 * pd.x0, pd.x0 * pd.x1, pd.x1 * pd.x0, pd.x1 * pd.x1};
        hs = hs + e * (outer - p);
    }
    return hs;
}

SmoothBounds AnalyticImage::bounds() const {
    SmoothBounds b;
    const double e = std::exp(-0.5);
    for (std::size_t i = 0; i < bumps_.size(); ++i) {
        const double a = std::abs(bumps_[i].amplitude);
        const double l = cache_[i].lambda_min;
        b.f += a;
        b.g += a * e / std::sqrt(l);
        b.h += a / l;
    }
    return b;
}

Mat2 TransformSpec::spatial() const {
    if (k_tilde < 0 || k_tilde >= t) throw std::invalid_argument("k_tilde must lie in [0, t)");
    return conjugate_element(GroupSpec(t, w_hat), group_index_inverse(k_tilde, t));
}

GridImage sample_image(const AnalyticImage& r, int n, double h) {
    GridImage out{Plane(n), h};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out.data(i, j) = r.value(out.point(i, j));
    return out;
}

GridImage act_image_analytic(const AnalyticImage& r, const TransformSpec& ts, int n, double h) {
    const Mat2 g = ts.spatial();
    GridImage out{Plane(n), h};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out.data(i, j) = r.value(g * out.point(i, j));
    return out;
}

bool is_grid_exact(const Mat2& g) {
    auto unit = [](double x) {
        return std::abs(x) < 1e-12 || std::abs(std::abs(x) - 1.0) < 1e-12;
    };
    if (!unit(g.a) || !unit(g.b) || !unit(g.c) || !unit(g.d)) return false;
    const bool diag = std::abs(g.b) < 0.5 && std::abs(g.c) < 0.5 && std::abs(g.a) > 0.5 && std::abs(g.d) > 0.5;
    const bool anti = std::abs(g.a) < 0.5 && std::abs(g.d) < 0.5 && std::abs(g.b) > 0.5 && std::abs(g.c) > 0.5;
    return diag || anti;
}

Plane resample_plane(const Plane& p, double h, const Mat2& g) {
    const int n = p.size();
    Plane out(n);
    if (is_grid_exact(g)) {
        const int ga = static_cast<int>(std::lround(g.a)), gb = static_cast<int>(std::lround(g.b));
        const int gc = static_cast<int>(std::lround(g.c)), gd = static_cast<int>(std::lround(g.d));
        // Work in doubled centered indices so odd and even n are both exact.
        for (int i = 0; i < n; ++i) {
            const int ci = 2 * i - (n - 1);
            for (int j = 0; j < n; ++j) {
                const int cj = 2 * j - (n - 1);
                const int si = (ga * ci + gb * cj + (n - 1)) / 2;
                const int sj = (gc * ci + gd * cj + (n - 1)) / 2;
                out(i, j) = p(si, sj);
            }
        }
        return out;
    }
    const double c = 0.5 * (n - 1);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const Vec2 y = g * Vec2{(i - c) * h, (j - c) * h};
            const double fi = y.x0 / h + c;
            const double fj = y.x1 / h + c;
            const int i0 = static_cast<int>(std::floor(fi));
            const int j0 = static_cast<int>(std::floor(fj));
            if (i0 + 2 < 0 || i0 - 1 >= n || j0 + 2 < 0 || j0 - 1 >= n) continue;
            double kj[4];
            for (int b = 0; b < 4; ++b) kj[b] = keys_kernel(fj - (j0 - 1 + b));
            double v = 0.0;
            for (int a = 0; a < 4; ++a) {
                const int si = i0 - 1 + a;
                if (si < 0 || si >= n) continue;
                const double ki = keys_kernel(fi - si);
                if (ki == 0.0) continue;
                double row = 0.0;
                for (int b = 0; b < 4; ++b) {
                    const int sj = j0 - 1 + b;
                    if (sj >= 0 && sj < n) row += kj[b] * p(si, sj);
                }
                v += ki * row;
            }
            out(i, j) = v;
        }
    }
    return out;
}

GridImage act_image_resample(const GridImage& image, const TransformSpec& ts) {
    return {resample_plane(image.data, image.h, ts.spatial()), image.h};
}

GroupFeatureMap act_feature(const GroupFeatureMap& f, const TransformSpec& ts) {
    if (f.t() != ts.t) throw std::invalid_argument("feature map group order does not match transform");
    const Mat2 g = ts.spatial();
    GroupFeatureMap out;
    out.h = f.h;
    out.slices.reserve(f.t());
    for (int k = 0; k < f.t(); ++k) {
        const int src = (k - ts.k_tilde + ts.t) % ts.t;
        out.slices.push_back(resample_plane(f.slices[src], f.h, g));
    }
    return out;
}

AnalyticImage make_gaussian_mixture(std::uint64_t seed, int count, const MixtureBounds& bounds) {
    if (count < 0) throw std::invalid_argument("bump count must be nonnegative");
    if (!(bounds.sigma_min > 0.0) || bounds.sigma_max < bounds.sigma_min)
        throw std::invalid_argument("invalid sigma range");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
    std::vector<GaussianBump> bumps;
    for (int i = 0; i < count; ++i) {
        GaussianBump b;
        b.center = {uniform(-bounds.extent, bounds.extent), uniform(-bounds.extent, bounds.extent)};
        const double s0 = uniform(bounds.sigma_min, bounds.sigma_max);
        const double s1 = uniform(bounds.sigma_min, bounds.sigma_max);
        const Mat2 rot = rotation_matrix(uniform(0.0, std::numbers::pi));
        const Mat2 diag{s0 * s0, 0.0, 0.0, s1 * s1};
        Mat2 cov = rot.transpose() * diag * rot;
        cov.c = cov.b;
        b.cov = cov;
        b.amplitude = uniform(-bounds.amplitude, bounds.amplitude);
        bumps.push_back(b);
    }
    return AnalyticImage(std::move(bumps));
}

nlohmann::json to_json(const AnalyticImage& r) {
    nlohmann::json j = nlohmann::json::array();
    for (const GaussianBump& b : r.bumps())
        j.push_back({{"center", {b.center.x0, b.center.x1}},
                     {"cov", b.cov.to_array()},
                     {"amplitude", b.amplitude}});
    return {{"bumps", j}, {"bounds", {r.bounds().f, r.bounds().g, r.bounds().h}}};
}

AnalyticImage analytic_image_from_json(const nlohmann::json& j) {
    std::vector<GaussianBump> bumps;
    for (const auto& b : j.at("bumps")) {
        const auto c = b.at("center").get<std::array<double, 2>>();
        const auto m = b.at("cov").get<std::array<double, 4>>();
        bumps.push_back({{c[0], c[1]}, {m[0], m[1], m[2], m[3]}, b.at("amplitude").get<double>()});
    }
    return AnalyticImage(std::move(bumps));
}

}  // namespace tlconv

#include "tlconv/symmetry.hpp"

#include "tlconv/eqconv.hpp"
#include "tlconv/filter.hpp"

#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace tlconv {

void Dataset::validate() const {
    if (images.empty()) throw std::invalid_argument("dataset is empty");
    for (const GridImage& im : images)
        if (im.n() != images.front().n() || im.h != images.front().h)
            throw std::invalid_argument("dataset images differ in geometry");
}

namespace {

/// The Sobel stencil sits at the center of a zero 7 x 7 lattice so the support
/// mask falls where the interpolant has decayed.
ParamFilter sobel(double h, bool along_columns) {
    static constexpr double base[9] = {-1, 0, 1, -2, 0, 2, -1, 0, 1};
    constexpr int p = 7;
    std::vector<double> v(p * p, 0.0);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            v[(r + 2) * p + c + 2] = along_columns ? base[r * 3 + c] : base[c * 3 + r];
    return ParamFilter(FilterSpec(p, h), std::move(v));
}

Plane sample_kernel(const ParamFilter& pf, const Mat2& g, double mesh) {
    const double smin = g.min_singular_value();
    if (!(smin > 0.0)) throw std::invalid_argument("kernel map must be invertible");
    const int half = static_cast<int>(std::ceil(pf.spec.support_radius() / (mesh * smin) - 1e-12));
    Sampling s{2 * half + 1, mesh, 1.0};
    return sample_filter(pf, g, s);
}

}  // namespace

double local_feature(const GridImage& image, const Mat2& g, const FeatureOptions& opt) {
    if (!(opt.scale > 0.0)) throw std::invalid_argument("kernel scale must be positive");
    const int n = image.n();
    const int crop = opt.crop;
    if (2 * crop >= n) throw std::invalid_argument("crop leaves an empty interior");
    const Region box{crop, n - crop, crop, n - crop};
    double total = 0.0;
    Plane rx(n), ry(n);
    const Plane kx = sample_kernel(sobel(image.h * opt.scale, true), g, image.h);
    const Plane ky = sample_kernel(sobel(image.h * opt.scale, false), g, image.h);
    conv2d_accumulate(image.data, kx, rx, box);
    conv2d_accumulate(image.data, ky, ry, box);
    for (int i = box.r0; i < box.r1; ++i)
        for (int j = box.c0; j < box.c1; ++j) total += std::abs(rx(i, j)) + std::abs(ry(i, j));
    return total;
}

double dataset_mean(const Dataset& data, const Mat2& g, const FeatureOptions& opt) {
    data.validate();
    double s = 0.0;
    for (const GridImage& im : data.images) s += local_feature(im, g, opt);
    return s / static_cast<double>(data.images.size());
}

SymmetryProfile variance_over_group(const Dataset& data, const TransformParams& w, int angles,
                                    const FeatureOptions& opt) {
    if (angles < 16) throw std::invalid_argument("at least 16 angles are required");
    SymmetryProfile prof;
    prof.w = w;
    const Mat2 d = dw_matrix(w);
    const Mat2 dinv = dw_inverse(w);
    double mean = 0.0;
    for (int m = 0; m < angles; ++m) {
        const double theta = 2.0 * std::numbers::pi * m / angles;
        const double r = dataset_mean(data, d * rotation_matrix(theta) * dinv, opt);
        prof.theta.push_back(theta);
        prof.mean_feature.push_back(r);
        mean += r;
    }
    mean /= angles;
    double var = 0.0;
    for (double r : prof.mean_feature) var += (r - mean) * (r - mean);
    prof.variance = var / angles;
    return prof;
}

namespace {

struct Objective {
    const Dataset* data;
    const FitConfig* config;
    int evaluations = 0;

    TransformParams project(double alpha, double sx, double sy) const {
        return {wrap_angle(alpha), std::clamp(sx, config->s_lo, config->s_hi), std::clamp(sy, config->s_lo, config->s_hi)};
    }
    double operator()(const TransformParams& w) {
        ++evaluations;
        return variance_over_group(*data, w, config->angles, config->feature).variance;
    }
};

double gsl_objective(const gsl_vector* x, void* params) {
    auto* obj = static_cast<Objective*>(params);
    return (*obj)(obj->project(gsl_vector_get(x, 0), gsl_vector_get(x, 1), gsl_vector_get(x, 2)));
}

}  // namespace

FitResult fit_w(const Dataset& data, const FitConfig& config) {
    data.validate();
    if (config.grid < 2) throw std::invalid_argument("grid needs at least two points per axis");
    if (!(config.s_lo > 0.0) || config.s_hi <= config.s_lo) throw std::invalid_argument("invalid scale box");
    Objective obj{&data, &config};
    FitResult res;
    res.identity_variance = obj(TransformParams::identity());

    const double pi = std::numbers::pi;
    double best = std::numeric_limits<double>::infinity();
    double worst = -best;
    for (int i = 0; i < config.grid; ++i) {
        const double alpha = -pi / 2 + pi * (i + 1) / config.grid;
        for (int a = 0; a < config.grid; ++a) {
            const double sx = config.s_lo + (config.s_hi - config.s_lo) * a / (config.grid - 1);
            for (int b = 0; b < config.grid; ++b) {
                const double sy = config.s_lo + (config.s_hi - config.s_lo) * b / (config.grid - 1);
                const TransformParams w{alpha, sx, sy};
                const double v = obj(w);
                worst = std::max(worst, v);
                if (v < best) {
                    best = v;
                    res.grid_best = w;
                }
            }
        }
    }
    res.grid_variance = best;
    if (worst - best <= 1e-12 * std::max(1.0, std::abs(worst))) {
        res.flat = true;
        res.w_hat = TransformParams::identity();
        res.profile = variance_over_group(data, res.w_hat, config.angles, config.feature);
        res.evaluations = obj.evaluations;
        return res;
    }

    gsl_multimin_function fn{&gsl_objective, 3, &obj};
    gsl_vector* x = gsl_vector_alloc(3);
    gsl_vector* step = gsl_vector_alloc(3);
    gsl_vector_set(x, 0, res.grid_best.alpha);
    gsl_vector_set(x, 1, res.grid_best.sx);
    gsl_vector_set(x, 2, res.grid_best.sy);
    gsl_vector_set(step, 0, 0.5 * pi / config.grid);
    gsl_vector_set(step, 1, 0.5 * (config.s_hi - config.s_lo) / (config.grid - 1));
    gsl_vector_set(step, 2, 0.5 * (config.s_hi - config.s_lo) / (config.grid - 1));
    gsl_multimin_fminimizer* nm = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 3);
    gsl_multimin_fminimizer_set(nm, &fn, x, step);
    for (int it = 0; it < config.max_iterations; ++it) {
        if (gsl_multimin_fminimizer_iterate(nm) != 0) break;
        if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(nm), config.simplex_tol) == GSL_SUCCESS) break;
    }
    const gsl_vector* xb = gsl_multimin_fminimizer_x(nm);
    const TransformParams refined = obj.project(gsl_vector_get(xb, 0), gsl_vector_get(xb, 1), gsl_vector_get(xb, 2));
    const double refined_value = gsl_multimin_fminimizer_minimum(nm);
    gsl_multimin_fminimizer_free(nm);
    gsl_vector_free(step);
    gsl_vector_free(x);

    res.w_hat = refined_value <= best ? refined : res.grid_best;
    res.profile = variance_over_group(data, res.w_hat, config.angles, config.feature);
    res.evaluations = obj.evaluations;
    return res;
}

Dataset make_warped_dataset(const TransformParams& w_star, std::uint64_t seed, int count, const RingConfig& rc) {
    if (count < 1) throw std::invalid_argument("dataset needs at least one image");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
    const Mat2 dinv = dw_inverse(w_star);
    Dataset data;
    data.id = "warped-rings";
    for (int c = 0; c < count; ++c) {
        struct Ring {
            double radius, width, amplitude;
        };
        const Vec2 center{uniform(-rc.center_extent, rc.center_extent), uniform(-rc.center_extent, rc.center_extent)};
        std::vector<Ring> rings;
        for (int r = 0; r < rc.rings; ++r) {
            Ring ring;
            ring.radius = uniform(rc.radius_min, rc.radius_max);
            ring.width = uniform(rc.width_min, rc.width_max);
            ring.amplitude = uniform(0.5, 1.0);
            rings.push_back(ring);
        }
        GridImage im{Plane(rc.n), rc.h};
        for (int i = 0; i < rc.n; ++i) {
            for (int j = 0; j < rc.n; ++j) {
                const double u = (dinv * im.point(i, j) - center).norm();
                double v = 0.0;
                for (const Ring& ring : rings) {
                    const double d = u - ring.radius;
                    v += ring.amplitude * std::exp(-0.5 * d * d / (ring.width * ring.width));
                }
                im.data(i, j) = v;
            }
        }
        data.images.push_back(std::move(im));
    }
    return data;
}

GaugeView canonical_gauge(const TransformParams& w) {
    GaugeView g{w.sx / w.sy, w.alpha};
    if (g.ratio < 1.0) {
        g.ratio = 1.0 / g.ratio;
        g.alpha += std::numbers::pi / 2;
    }
    g.alpha = std::remainder(g.alpha, std::numbers::pi);
    if (g.alpha <= -std::numbers::pi / 2) g.alpha += std::numbers::pi;
    return g;
}

}  // namespace tlconv

#pragma once

#include "tlconv/grid.hpp"
#include "tlconv/group.hpp"

#include <json.hpp>

#include <cstdint>
#include <vector>

namespace tlconv {

/// a * exp(-0.5 (x - c)^T S^-1 (x - c)) with S symmetric positive definite.
struct GaussianBump {
    Vec2 center;
    Mat2 cov;
    double amplitude = 1.0;
};

/// Sup bounds of |r|, ||grad r|| and ||hess r||.
struct SmoothBounds {
    double f = 0.0;
    double g = 0.0;
    double h = 0.0;
};

class AnalyticImage {
public:
    AnalyticImage() = default;
    /// Throws std::invalid_argument when a covariance is not SPD.
    explicit AnalyticImage(std::vector<GaussianBump> bumps);

    double value(Vec2 x) const;
    Vec2 gradient(Vec2 x) const;
    Mat2 hessian(Vec2 x) const;
    /// Sum of closed-form per-bump bounds.
    SmoothBounds bounds() const;

    const std::vector<GaussianBump>& bumps() const { return bumps_; }

private:
    struct Cached {
        Mat2 precision;
        double lambda_min;
    };
    std::vector<GaussianBump> bumps_;
    std::vector<Cached> cache_;
};

enum class Interp { analytic, bicubic };

/// The transform A~ = R(2 pi k~ / t) of the conjugated group for w^.
struct TransformSpec {
    int t = 4;
    int k_tilde = 0;
    TransformParams w_hat = TransformParams::identity();
    Interp interp = Interp::analytic;

    /// Spatial map g = D A~^-1 D^-1; the transformed image is r(g x).
    Mat2 spatial() const;
};

GridImage sample_image(const AnalyticImage& r, int n, double h);

/// Exact samples of r(g x_ij).
GridImage act_image_analytic(const AnalyticImage& r, const TransformSpec& ts, int n, double h);
/// Keys bicubic resampling of I at g x_ij, zero outside the sampled domain.
GridImage act_image_resample(const GridImage& image, const TransformSpec& ts);
/// Slice k of the result is slice (k - k~) mod t spatially transformed.
GroupFeatureMap act_feature(const GroupFeatureMap& f, const TransformSpec& ts);

/// out(x_ij) = p(g x_ij). A pure index permutation when g is a signed
/// permutation matrix, Keys bicubic interpolation otherwise.
Plane resample_plane(const Plane& p, double h, const Mat2& g);
/// True when every entry of g is within 1e-12 of 0 or +-1 and g permutes axes.
bool is_grid_exact(const Mat2& g);

struct MixtureBounds {
    double extent = 1.0;       // centers drawn in [-extent, extent]^2
    double sigma_min = 0.1;
    double sigma_max = 0.2;
    double amplitude = 1.0;    // amplitudes drawn in [-amplitude, amplitude]
};

AnalyticImage make_gaussian_mixture(std::uint64_t seed, int count, const MixtureBounds& bounds);

nlohmann::json to_json(const AnalyticImage& r);
AnalyticImage analytic_image_from_json(const nlohmann::json& j);

}  // namespace tlconv

#pragma once

#include "tlconv/grid.hpp"
#include "tlconv/group.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace tlconv {

struct Dataset {
    std::string id;
    std::vector<GridImage> images;

    /// Throws std::invalid_argument when empty or when geometries differ.
    void validate() const;
};

/// The classical 3 x 3 Sobel pair, read as a cardinal filter whose node
/// spacing is `scale` pixels, so it can be sampled under any linear map.
enum class DifferentialKernel { sobel };

struct FeatureOptions {
    int crop = 1;
    double scale = 2.0;
    DifferentialKernel kernel = DifferentialKernel::sobel;
};

/// sum over the interior of |phi_x(g .) * r| + |phi_y(g .) * r|. The crop is
/// fixed by the caller so all g share one aggregation window.
double local_feature(const GridImage& image, const Mat2& g, const FeatureOptions& opt = {});

double dataset_mean(const Dataset& data, const Mat2& g, const FeatureOptions& opt = {});

struct SymmetryProfile {
    TransformParams w;
    std::vector<double> theta;
    std::vector<double> mean_feature;
    double variance = 0.0;  // population variance over the angles
};

/// theta_m = 2 pi m / angles, g = D_w R(theta_m) D_w^-1.
SymmetryProfile variance_over_group(const Dataset& data, const TransformParams& w, int angles = 36,
                                    const FeatureOptions& opt = {});

struct FitConfig {
    int grid = 9;
    double s_lo = 0.5;
    double s_hi = 1.5;
    int angles = 36;
    FeatureOptions feature;
    int max_iterations = 300;
    double simplex_tol = 1e-5;
};

struct FitResult {
    TransformParams w_hat;
    SymmetryProfile profile;
    TransformParams grid_best;
    double grid_variance = 0.0;
    double identity_variance = 0.0;
    bool flat = false;
    int evaluations = 0;
};

/// Coarse grid over alpha in (-pi/2, pi/2] and s in [s_lo, s_hi], then a
/// Nelder-Mead refinement with scales clamped to the box.
FitResult fit_w(const Dataset& data, const FitConfig& config = {});

struct RingConfig {
    int n = 48;
    double h = 1.0 / 16.0;
    int rings = 2;
    double center_extent = 0.15;
    double radius_min = 0.05;
    double radius_max = 0.3;
    double width_min = 0.1;
    double width_max = 0.14;
};

/// Images f(|D_{w*}^-1 x - c|): concentric Gaussian rings around one random
/// center per image, warped through D_{w*}.
Dataset make_warped_dataset(const TransformParams& w_star, std::uint64_t seed, int count,
                            const RingConfig& rings = {});

/// Gauge-invariant summary of w: the axis ratio folded to >= 1 and the
/// matching angle modulo pi, in (-pi/2, pi/2].
struct GaugeView {
    double ratio = 1.0;
    double alpha = 0.0;
};
GaugeView canonical_gauge(const TransformParams& w);

}  // namespace tlconv

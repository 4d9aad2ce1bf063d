#pragma once

#include "tlconv/eqconv.hpp"
#include "tlconv/filter.hpp"
#include "tlconv/transforms.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tlconv {

struct EquivarianceReport {
    std::string kind;
    int t = 0;
    int k_tilde = 0;
    TransformParams w;
    TransformParams w_hat;
    double h = 0.0;
    int n = 0;
    int crop = 0;
    double error_inf = 0.0;
    double error_mean = 0.0;
    Interp mode = Interp::analytic;

    double dist_w() const;
};

/// One layer under test. Input and output layers take a single filter,
/// intermediate layers take t filters (one per group index a).
struct LayerProbe {
    LayerKind kind = LayerKind::input;
    std::vector<ParamFilter> filters;
    TransformParams w = TransformParams::identity();
    int refine = 1;
};

/// ceil(size / 2) * passes + 2.
int default_crop(int kernel_size, int passes);

/// Smallest crop such that g maps the cropped box, widened by the 4 x 4 Keys
/// stencil, into the part of an n-grid that lies `valid_margin` away from the border.
int geometric_crop(int n, int valid_margin, const Mat2& g);

/// sup | Layer(pi_R I) - pi_E(Layer I) | over the interior. `sources` holds one
/// analytic image for an input layer and t analytic slices otherwise. When
/// `crop` is given it overrides the automatic choice (0 compares the full grid).
EquivarianceReport layer_error(const LayerProbe& probe, const std::vector<AnalyticImage>& sources,
                               const TransformSpec& ts, int n, double h,
                               std::optional<int> crop = std::nullopt);

EquivarianceReport network_error(const EqNetwork& net, const AnalyticImage& r, const TransformSpec& ts,
                                 int n, double h, int refine = 1, std::optional<int> crop = std::nullopt);

struct SweepRow {
    double x = 0.0;  // h for mesh sweeps, epsilon for parameter sweeps
    EquivarianceReport report;
};

struct SweepTable {
    std::vector<SweepRow> rows;
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;
    bool monotone = true;  // strictly decreasing for mesh sweeps, nondecreasing for parameter sweeps
};

/// Least-squares line through (log x, log error) of rows with x > 0 and error > 0.
void fit_loglog(SweepTable& table);

/// Shared experiment setup of the mesh and parameter sweeps. The filter lives on
/// a basis lattice of mesh q * extent / n0 and is sampled at the image mesh.
struct SweepSetup {
    double extent = 2.0;
    int t = 8;
    int k_tilde = 1;
    TransformParams w_hat{0.3, 1.2, 0.8};
    int p = 9;
    int q = 2;
    int n0 = 64;
    double fit_stretch = 1.36;
    int bumps = 6;
    MixtureBounds mixture{0.5, 0.1, 0.2, 1.0};
    std::uint64_t seed = 1;
    int threads = 1;

    FilterSpec filter_spec() const;
    ParamFilter make_filter() const;
    AnalyticImage make_image() const;
    /// Refinement factor for an n-point grid; throws when n q / n0 is not an integer.
    int refine_for(int n) const;
};

struct SweepHConfig {
    SweepSetup setup;
    std::vector<int> ns{64, 128, 256, 512};
};

struct SweepWConfig {
    SweepSetup setup;
    int n = 256;
    std::vector<double> eps{0.0, 0.02, 0.04, 0.08, 0.16};
    int directions = 5;
};

struct SweepHResult {
    SweepTable table;
    ParamFilter filter;
    AnalyticImage image;
};

struct SweepWResult {
    std::vector<SweepTable> tables;  // one per direction
    std::vector<std::array<double, 3>> directions;
    ParamFilter filter;
    AnalyticImage image;
};

SweepHResult sweep_h(const SweepHConfig& config);
SweepWResult sweep_w(const SweepWConfig& config);

/// Parameter-sweep shape checks.
struct SweepWCheck {
    bool min_at_zero = true;
    bool nondecreasing = true;
    std::vector<double> ratios;  // error(2 eps) / error(eps) where error(eps) >= 10 x baseline
    bool ratios_ok = true;
};
SweepWCheck check_sweep_w(const SweepTable& table, double lo = 1.5, double hi = 2.5);

struct Certificate {
    double measured = 0.0;
    double bound = 0.0;
    double c_tilde = 0.0;
    double c = 0.0;
    bool ok = false;
};

/// Error bound C~ ||w - w^|| + C h^2 for one layer, with filter bounds scaled
/// by the sampling weight, C_a = F_2 p^2 and C_d = (p + 1) h for the sampled size p.
/// Intermediate and output layers carry an extra factor t.
Certificate bound_certificate(const EquivarianceReport& report, const SmoothBounds& image,
                              const FilterBounds& filter, const Sampling& sampling, LayerKind kind);

const char* to_string(Interp mode);

}  // namespace tlconv

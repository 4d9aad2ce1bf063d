#pragma once

#include "tlconv/eqconv.hpp"
#include "tlconv/transforms.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace tlconv {

struct DenoisePair {
    GridImage noisy;
    GridImage clean;
};

struct DenoiseDataConfig {
    int count = 16;
    int n = 32;
    double h = 1.0 / 16.0;
    double noise = 0.1;
    int bumps = 5;
    MixtureBounds mixture{0.7, 0.12, 0.3, 1.0};
    /// When set, clean images are isotropic bumps warped through D_w.
    std::optional<TransformParams> warp;
};

std::vector<DenoisePair> make_denoise_set(std::uint64_t seed, const DenoiseDataConfig& config);

/// input (1 -> 4) -> ReLU -> intermediate (4 -> 4) -> ReLU -> output (4 -> 1),
/// t = 4, p = 5 at the image mesh.
EqNetwork make_toy_network(std::uint64_t seed, double h, TransformParams w = TransformParams::identity());

/// Filter generation path. The strict path samples with A^-1 only and never forms D_w.
enum class FilterPath { learnable, strict };

struct GradBundle {
    double loss = 0.0;
    std::vector<std::vector<std::vector<double>>> v;  // [layer][filter][coefficient]
    std::array<double, 3> w{0.0, 0.0, 0.0};
};

/// Mean squared error over batch interiors (a `crop` border is ignored).
double loss(const EqNetwork& net, const std::vector<DenoisePair>& batch, int crop,
            FilterPath path = FilterPath::learnable);

/// Exact reverse-mode gradients of `loss` with respect to every coefficient and
/// the shared w. ReLU has subgradient 0 at 0. The strict path reports w = 0.
GradBundle backward(const EqNetwork& net, const std::vector<DenoisePair>& batch, int crop,
                    FilterPath path = FilterPath::learnable);

struct TrainConfig {
    int steps = 200;
    double lr_v = 0.05;
    double lr_w = 0.005;
    int batch = 4;
    int crop = 3;
    std::uint64_t seed = 1;
    bool freeze_w = false;
    FilterPath path = FilterPath::learnable;
};

struct TrainHistory {
    std::vector<double> loss;
    std::vector<TransformParams> w;
    bool diverged = false;
};

/// Plain SGD. Batches cycle through the data in order. Throws std::runtime_error
/// with a diagnostic when the loss becomes non-finite.
TrainHistory train(const TrainConfig& config, const std::vector<DenoisePair>& data, EqNetwork& net);

struct GradCheckEntry {
    int layer = -1;  // -1 marks a w coordinate
    int filter = 0;
    int index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_error = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double max_rel_error = 0.0;
};

/// Central differences on `coords` random coefficients plus all 3 coordinates of w.
GradCheckReport grad_check(const EqNetwork& net, const std::vector<DenoisePair>& batch, int crop, int coords,
                           std::uint64_t seed, double step = 1e-6);

}  // namespace tlconv

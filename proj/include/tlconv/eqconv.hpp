#pragma once

#include "tlconv/filter.hpp"
#include "tlconv/grid.hpp"
#include "tlconv/group.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace tlconv {

/// Half-open index box [r0, r1) x [c0, c1) of an output plane.
struct Region {
    int r0 = 0, r1 = 0, c0 = 0, c1 = 0;

    static Region full(int n) { return {0, n, 0, n}; }
    bool empty() const { return r0 >= r1 || c0 >= c1; }
};

/// Zero-padded "same" cross-correlation:
/// out(i, j) = sum_{u, v} k(u, v) x(i + u - c, j + v - c), c = (p - 1) / 2.
/// Kernel entry (u, v) is the filter sampled at the centered offset delta_uv.
Plane conv2d(const Plane& x, const Plane& k);

/// Adds the correlation into out, restricted to an output region.
void conv2d_accumulate(const Plane& x, const Plane& k, Plane& out, const Region& region);

Plane relu(Plane p);
GroupFeatureMap relu(GroupFeatureMap f);

/// Single-channel layers.
GroupFeatureMap input_layer(const GridImage& image, const FilterStack& stack);
/// Output slice b = sum_a stack[b][(a - b) mod t] * F[a].
GroupFeatureMap mid_layer(const GroupFeatureMap& f, const FilterStackMid& stack);
/// sum_b stack[b] * F[b].
GridImage output_layer(const GroupFeatureMap& f, const FilterStack& stack);

/// Multi-channel layers. Stacks are indexed [ci * out_channels + co]. Every
/// output plane is computed on `region` only (the rest stays zero).
std::vector<GroupFeatureMap> input_layer(const std::vector<GridImage>& images,
                                         const std::vector<FilterStack>& stacks, int out_channels,
                                         std::optional<Region> region = std::nullopt);
std::vector<GroupFeatureMap> mid_layer(const std::vector<GroupFeatureMap>& f,
                                       const std::vector<FilterStackMid>& stacks, int out_channels,
                                       std::optional<Region> region = std::nullopt);
std::vector<GridImage> output_layer(const std::vector<GroupFeatureMap>& f,
                                    const std::vector<FilterStack>& stacks, int out_channels,
                                    std::optional<Region> region = std::nullopt);

enum class LayerKind { input, intermediate, output };

const char* to_string(LayerKind kind);

/// One TL-Conv layer. Filters are indexed [ci * out + co] for input and output
/// layers and [(ci * out + co) * t + a] for intermediate layers.
struct EqLayer {
    LayerKind kind = LayerKind::input;
    int in_channels = 1;
    int out_channels = 1;
    std::vector<ParamFilter> filters;
    /// Per-layer transformation parameters; the network's shared w when empty.
    std::optional<TransformParams> w;

    const ParamFilter& filter(int ci, int co, int a = 0, int t = 1) const;
};

/// input conv -> (ReLU -> intermediate conv)^(L-2) -> ReLU -> output conv.
struct EqNetwork {
    int t = 4;
    TransformParams w = TransformParams::identity();
    std::vector<EqLayer> layers;

    int depth() const { return static_cast<int>(layers.size()); }
    /// Throws std::invalid_argument when the layer sequence or channels do not chain.
    void validate() const;
    TransformParams layer_params(int l) const;
};

struct NetworkShape {
    int t = 4;
    std::vector<int> channels{1, 1, 1};  // n_0 ... n_L
    FilterSpec filter{5, 1.0};
    TransformParams w = TransformParams::identity();
    bool per_layer_w = false;
};

/// Random coefficients with He-style scaling sqrt(2 / fan_in). When
/// `fit_stretch` > 0 only nodes whose footprint fits the support disk under that
/// stretch receive weight.
EqNetwork make_random_network(const NetworkShape& shape, std::uint64_t seed, double fit_stretch = 0.0);

/// Discretized filters of every layer.
struct DiscreteLayer {
    LayerKind kind = LayerKind::input;
    int in_channels = 1;
    int out_channels = 1;
    std::vector<FilterStack> stacks;        // input / output
    std::vector<FilterStackMid> mid_stacks; // intermediate
};

struct DiscreteNetwork {
    int t = 4;
    std::vector<DiscreteLayer> layers;
};

DiscreteNetwork discretize(const EqNetwork& net, int refine = 1);
/// Strict-rotation discretization (ignores every w).
DiscreteNetwork discretize_strict(const EqNetwork& net);

std::vector<GridImage> forward(const DiscreteNetwork& net, const std::vector<GridImage>& images,
                               std::optional<Region> region = std::nullopt);
GridImage forward(const EqNetwork& net, const GridImage& image, int refine = 1);

/// Number of filter coefficients plus the 3 parameters of each distinct w.
std::int64_t param_count(const EqNetwork& net);
std::int64_t coefficient_count(const EqNetwork& net);
/// Parameters of the channel-matched plain CNN: t times the coefficient count.
std::int64_t plain_equiv_count(const EqNetwork& net);

}  // namespace tlconv

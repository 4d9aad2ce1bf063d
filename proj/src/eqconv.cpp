#include "tlconv/eqconv.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace tlconv {

void conv2d_accumulate(const Plane& x, const Plane& k, Plane& out, const Region& region) {
    const int n = x.size();
    const int p = k.size();
    if (p % 2 == 0) throw std::invalid_argument("kernel size must be odd");
    if (out.size() != n) throw std::invalid_argument("output plane size mismatch");
    const int c = (p - 1) / 2;
    for (int u = 0; u < p; ++u) {
        for (int v = 0; v < p; ++v) {
            const double kv = k(u, v);
            if (kv == 0.0) continue;
            const int du = u - c;
            const int dv = v - c;
            const int i0 = std::max(region.r0, -du);
            const int i1 = std::min(region.r1, n - du);
            const int j0 = std::max(region.c0, -dv);
            const int j1 = std::min(region.c1, n - dv);
            for (int i = i0; i < i1; ++i) {
                double* o = out.row(i);
                const double* src = x.row(i + du) + dv;
                for (int j = j0; j < j1; ++j) o[j] += kv * src[j];
            }
        }
    }
}

Plane conv2d(const Plane& x, const Plane& k) {
    if (k.size() > x.size()) throw std::invalid_argument("kernel larger than image");
    Plane out(x.size());
    conv2d_accumulate(x, k, out, Region::full(x.size()));
    return out;
}

Plane relu(Plane p) {
    for (double& v : p.values()) v = v > 0.0 ? v : 0.0;
    return p;
}

GroupFeatureMap relu(GroupFeatureMap f) {
    for (Plane& s : f.slices) s = relu(std::move(s));
    return f;
}

GroupFeatureMap input_layer(const GridImage& image, const FilterStack& stack) {
    return input_layer(std::vector<GridImage>{image}, std::vector<FilterStack>{stack}, 1).front();
}

GroupFeatureMap mid_layer(const GroupFeatureMap& f, const FilterStackMid& stack) {
    return mid_layer(std::vector<GroupFeatureMap>{f}, std::vector<FilterStackMid>{stack}, 1).front();
}

GridImage output_layer(const GroupFeatureMap& f, const FilterStack& stack) {
    return output_layer(std::vector<GroupFeatureMap>{f}, std::vector<FilterStack>{stack}, 1).front();
}

namespace {

void check_kernel(int p, int n) {
    if (p > n) throw std::invalid_argument("kernel larger than image");
}

}  // namespace

std::vector<GroupFeatureMap> input_layer(const std::vector<GridImage>& images,
                                         const std::vector<FilterStack>& stacks, int out_channels,
                                         std::optional<Region> region) {
    const int in = static_cast<int>(images.size());
    if (in == 0) throw std::invalid_argument("input layer needs at least one channel");
    if (static_cast<int>(stacks.size()) != in * out_channels)
        throw std::invalid_argument("input layer: expected in*out filter stacks");
    const int n = images.front().n();
    const int t = static_cast<int>(stacks.front().size());
    const Region reg = region.value_or(Region::full(n));
    std::vector<GroupFeatureMap> out(out_channels, GroupFeatureMap(n, t, images.front().h));
    for (int ci = 0; ci < in; ++ci) {
        if (images[ci].n() != n) throw std::invalid_argument("input channels differ in size");
        for (int co = 0; co < out_channels; ++co) {
            const FilterStack& st = stacks[ci * out_channels + co];
            if (static_cast<int>(st.size()) != t) throw std::invalid_argument("input stacks differ in group order");
            for (int k = 0; k < t; ++k) {
                check_kernel(st[k].size(), n);
                conv2d_accumulate(images[ci].data, st[k], out[co].slices[k], reg);
            }
        }
    }
    return out;
}

std::vector<GroupFeatureMap> mid_layer(const std::vector<GroupFeatureMap>& f,
                                       const std::vector<FilterStackMid>& stacks, int out_channels,
                                       std::optional<Region> region) {
    const int in = static_cast<int>(f.size());
    if (in == 0) throw std::invalid_argument("intermediate layer needs at least one channel");
    if (static_cast<int>(stacks.size()) != in * out_channels)
        throw std::invalid_argument("intermediate layer: expected in*out filter stacks");
    const int n = f.front().n();
    const int t = f.front().t();
    const Region reg = region.value_or(Region::full(n));
    std::vector<GroupFeatureMap> out(out_channels, GroupFeatureMap(n, t, f.front().h));
    for (int ci = 0; ci < in; ++ci) {
        if (f[ci].t() != t || f[ci].n() != n) throw std::invalid_argument("feature map shape mismatch");
        for (int co = 0; co < out_channels; ++co) {
            const FilterStackMid& st = stacks[ci * out_channels + co];
            if (st.t != t) throw std::invalid_argument("filter stack group order does not match feature map");
            for (int b = 0; b < t; ++b) {
                for (int a = 0; a < t; ++a) {
                    const Plane& k = st.at(b, (a - b + t) % t);
                    check_kernel(k.size(), n);
                    conv2d_accumulate(f[ci].slices[a], k, out[co].slices[b], reg);
                }
            }
        }
    }
    return out;
}

std::vector<GridImage> output_layer(const std::vector<GroupFeatureMap>& f,
                                    const std::vector<FilterStack>& stacks, int out_channels,
                                    std::optional<Region> region) {
    const int in = static_cast<int>(f.size());
    if (in == 0) throw std::invalid_argument("output layer needs at least one channel");
    if (static_cast<int>(stacks.size()) != in * out_channels)
        throw std::invalid_argument("output layer: expected in*out filter stacks");
    const int n = f.front().n();
    const int t = f.front().t();
    const Region reg = region.value_or(Region::full(n));
    std::vector<GridImage> out(out_channels, GridImage{Plane(n), f.front().h});
    for (int ci = 0; ci < in; ++ci) {
        if (f[ci].t() != t || f[ci].n() != n) throw std::invalid_argument("feature map shape mismatch");
        for (int co = 0; co < out_channels; ++co) {
            const FilterStack& st = stacks[ci * out_channels + co];
            if (static_cast<int>(st.size()) != t)
                throw std::invalid_argument("filter stack group order does not match feature map");
            for (int b = 0; b < t; ++b) {
                check_kernel(st[b].size(), n);
                conv2d_accumulate(f[ci].slices[b], st[b], out[co].data, reg);
            }
        }
    }
    return out;
}

const char* to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::input: return "input";
        case LayerKind::intermediate: return "intermediate";
        case LayerKind::output: return "output";
    }
    return "unknown";
}

const ParamFilter& EqLayer::filter(int ci, int co, int a, int t) const {
    const std::size_t pair = static_cast<std::size_t>(ci) * out_channels + co;
    return kind == LayerKind::intermediate ? filters[pair * t + a] : filters[pair];
}

void EqNetwork::validate() const {
    if (t < 1) throw std::invalid_argument("group order must be >= 1");
    if (layers.size() < 2) throw std::invalid_argument("network needs at least an input and an output layer");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const EqLayer& layer = layers[l];
        const LayerKind want = l == 0 ? LayerKind::input
                               : l + 1 == layers.size() ? LayerKind::output
                                                        : LayerKind::intermediate;
        if (layer.kind != want)
            throw std::invalid_argument("layer " + std::to_string(l) + " should be " + to_string(want));
        if (l > 0 && layers[l - 1].out_channels != layer.in_channels)
            throw std::invalid_argument("channel counts do not chain at layer " + std::to_string(l));
        const std::size_t per_pair = layer.kind == LayerKind::intermediate ? static_cast<std::size_t>(t) : 1;
        if (layer.filters.size() != per_pair * layer.in_channels * layer.out_channels)
            throw std::invalid_argument("layer " + std::to_string(l) + " has the wrong number of filters");
    }
}

TransformParams EqNetwork::layer_params(int l) const { return layers[l].w.value_or(w); }

EqNetwork make_random_network(const NetworkShape& shape, std::uint64_t seed, double fit_stretch) {
    const int L = static_cast<int>(shape.channels.size()) - 1;
    if (L < 2) throw std::invalid_argument("network needs at least two layers");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const FilterSpec& fs = shape.filter;
    EqNetwork net{shape.t, shape.w, {}};
    for (int l = 0; l < L; ++l) {
        EqLayer layer;
        layer.kind = l == 0 ? LayerKind::input : l == L - 1 ? LayerKind::output : LayerKind::intermediate;
        layer.in_channels = shape.channels[l];
        layer.out_channels = shape.channels[l + 1];
        if (shape.per_layer_w) layer.w = shape.w;
        const int per_pair = layer.kind == LayerKind::intermediate ? shape.t : 1;
        const int fan_in = layer.in_channels * fs.num_nodes() * (layer.kind == LayerKind::input ? 1 : shape.t);
        const double scale = std::sqrt(2.0 / fan_in);
        const FilterRole role = layer.kind == LayerKind::input   ? FilterRole::input
                                : layer.kind == LayerKind::output ? FilterRole::output
                                                                  : FilterRole::intermediate;
        for (int pair = 0; pair < layer.in_channels * layer.out_channels; ++pair) {
            for (int a = 0; a < per_pair; ++a) {
                std::vector<double> v(fs.num_nodes());
                for (int k = 0; k < fs.num_nodes(); ++k) {
                    const double draw = normal(rng);
                    v[k] = (fit_stretch > 0.0 && !fs.node_fits(k, fit_stretch)) ? 0.0 : scale * draw;
                }
                layer.filters.emplace_back(fs, std::move(v), role, a);
            }
        }
        net.layers.push_back(std::move(layer));
    }
    return net;
}

namespace {

DiscreteNetwork discretize_impl(const EqNetwork& net, int refine, bool strict) {
    net.validate();
    DiscreteNetwork out{net.t, {}};
    for (int l = 0; l < net.depth(); ++l) {
        const EqLayer& layer = net.layers[l];
        const GroupSpec group(net.t, net.layer_params(l));
        DiscreteLayer dl{layer.kind, layer.in_channels, layer.out_channels, {}, {}};
        for (int ci = 0; ci < layer.in_channels; ++ci) {
            for (int co = 0; co < layer.out_channels; ++co) {
                if (layer.kind == LayerKind::intermediate) {
                    std::vector<ParamFilter> pfs;
                    for (int a = 0; a < net.t; ++a) pfs.push_back(layer.filter(ci, co, a, net.t));
                    dl.mid_stacks.push_back(strict ? discretize_mid_strict(pfs, net.t)
                                                   : discretize_mid(pfs, group, Sampling::refined(pfs[0].spec, refine)));
                } else {
                    const ParamFilter& pf = layer.filter(ci, co);
                    const Sampling s = Sampling::refined(pf.spec, refine);
                    if (strict)
                        dl.stacks.push_back(discretize_strict(pf, net.t));
                    else if (layer.kind == LayerKind::input)
                        dl.stacks.push_back(discretize_input(pf, group, s));
                    else
                        dl.stacks.push_back(discretize_output(pf, group, s));
                }
            }
        }
        out.layers.push_back(std::move(dl));
    }
    return out;
}

int kernel_half(const DiscreteLayer& layer) {
    const Plane& k = layer.kind == LayerKind::intermediate ? layer.mid_stacks.front().slices.front()
                                                           : layer.stacks.front().front();
    return (k.size() - 1) / 2;
}

Region grow(Region r, int by, int n) {
    return {std::max(0, r.r0 - by), std::min(n, r.r1 + by), std::max(0, r.c0 - by), std::min(n, r.c1 + by)};
}

}  // namespace

DiscreteNetwork discretize(const EqNetwork& net, int refine) { return discretize_impl(net, refine, false); }

DiscreteNetwork discretize_strict(const EqNetwork& net) { return discretize_impl(net, 1, true); }

std::vector<GridImage> forward(const DiscreteNetwork& net, const std::vector<GridImage>& images,
                               std::optional<Region> region) {
    if (net.layers.empty()) throw std::invalid_argument("empty network");
    const int n = images.front().n();
    const int L = static_cast<int>(net.layers.size());
    // Each layer only needs its successors' footprint around the requested region.
    std::vector<Region> regions(L);
    regions[L - 1] = region.value_or(Region::full(n));
    for (int l = L - 2; l >= 0; --l) regions[l] = grow(regions[l + 1], kernel_half(net.layers[l + 1]), n);

    const DiscreteLayer& first = net.layers.front();
    auto features = input_layer(images, first.stacks, first.out_channels, regions[0]);
    for (int l = 1; l < L - 1; ++l) {
        for (auto& f : features) f = relu(std::move(f));
        const DiscreteLayer& layer = net.layers[l];
        features = mid_layer(features, layer.mid_stacks, layer.out_channels, regions[l]);
    }
    for (auto& f : features) f = relu(std::move(f));
    const DiscreteLayer& last = net.layers.back();
    return output_layer(features, last.stacks, last.out_channels, regions[L - 1]);
}

GridImage forward(const EqNetwork& net, const GridImage& image, int refine) {
    return forward(discretize(net, refine), std::vector<GridImage>{image}).front();
}

std::int64_t coefficient_count(const EqNetwork& net) {
    std::int64_t count = 0;
    for (const EqLayer& layer : net.layers)
        for (const ParamFilter& pf : layer.filters) count += static_cast<std::int64_t>(pf.v.size());
    return count;
}

std::int64_t param_count(const EqNetwork& net) {
    std::int64_t distinct_w = 1;
    bool any_shared = false;
    std::int64_t per_layer = 0;
    for (const EqLayer& layer : net.layers) {
        if (layer.w) ++per_layer;
        else any_shared = true;
    }
    distinct_w = per_layer + (any_shared ? 1 : 0);
    return coefficient_count(net) + 3 * distinct_w;
}

std::int64_t plain_equiv_count(const EqNetwork& net) { return net.t * coefficient_count(net); }

}  // namespace tlconv

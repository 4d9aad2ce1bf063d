#include "tlconv/trainer.hpp"

#include "tlconv/filter.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace tlconv {

std::vector<DenoisePair> make_denoise_set(std::uint64_t seed, const DenoiseDataConfig& config) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<DenoisePair> out;
    for (int c = 0; c < config.count; ++c) {
        AnalyticImage r = make_gaussian_mixture(rng(), config.bumps, config.mixture);
        if (config.warp) {
            const Mat2 d = dw_matrix(*config.warp);
            std::vector<GaussianBump> bumps = r.bumps();
            for (GaussianBump& b : bumps) {
                const double s = std::sqrt(std::abs(b.cov.det()));
                b.center = d * b.center;
                Mat2 cov = s * (d * d.transpose());
                cov.c = cov.b;
                b.cov = cov;
            }
            r = AnalyticImage(std::move(bumps));
        }
        DenoisePair pair{sample_image(r, config.n, config.h), sample_image(r, config.n, config.h)};
        for (double& x : pair.noisy.data.values()) x += config.noise * normal(rng);
        out.push_back(std::move(pair));
    }
    return out;
}

EqNetwork make_toy_network(std::uint64_t seed, double h, TransformParams w) {
    NetworkShape shape;
    shape.t = 4;
    shape.channels = {1, 4, 4, 1};
    shape.filter = FilterSpec(5, h);
    shape.w = w;
    return make_random_network(shape, seed);
}

namespace {

DiscreteNetwork discretize_path(const EqNetwork& net, FilterPath path) {
    for (const EqLayer& layer : net.layers)
        if (layer.w) throw std::invalid_argument("the trainer supports one shared w only");
    return path == FilterPath::strict ? discretize_strict(net) : discretize(net, 1);
}

using Features = std::vector<GroupFeatureMap>;

struct Trace {
    std::vector<Features> z;  // pre-activations of every layer but the last
    std::vector<GridImage> y;
};

Trace forward_trace(const DiscreteNetwork& dn, const GridImage& x) {
    Trace tr;
    const int L = static_cast<int>(dn.layers.size());
    const DiscreteLayer& first = dn.layers.front();
    tr.z.push_back(input_layer({x}, first.stacks, first.out_channels));
    for (int l = 1; l < L - 1; ++l) {
        Features a = tr.z.back();
        for (auto& f : a) f = relu(std::move(f));
        tr.z.push_back(mid_layer(a, dn.layers[l].mid_stacks, dn.layers[l].out_channels));
    }
    Features a = tr.z.back();
    for (auto& f : a) f = relu(std::move(f));
    tr.y = output_layer(a, dn.layers.back().stacks, dn.layers.back().out_channels);
    return tr;
}

Plane flip(const Plane& k) {
    const int p = k.size();
    Plane out(p);
    for (int u = 0; u < p; ++u)
        for (int v = 0; v < p; ++v) out(u, v) = k(p - 1 - u, p - 1 - v);
    return out;
}

/// dK(u, v) += sum_ij g(i, j) x(i + u - c, j + v - c).
void kernel_grad(const Plane& x, const Plane& g, Plane& dk) {
    const int n = x.size();
    const int p = dk.size();
    const int c = (p - 1) / 2;
    for (int u = 0; u < p; ++u) {
        const int du = u - c;
        const int i0 = std::max(0, -du), i1 = std::min(n, n - du);
        for (int v = 0; v < p; ++v) {
            const int dv = v - c;
            const int j0 = std::max(0, -dv), j1 = std::min(n, n - dv);
            double s = 0.0;
            for (int i = i0; i < i1; ++i) {
                const double* gr = g.row(i);
                const double* xr = x.row(i + du) + dv;
                for (int j = j0; j < j1; ++j) s += gr[j] * xr[j];
            }
            dk(u, v) += s;
        }
    }
}

void input_grad(const Plane& g, const Plane& k, Plane& dx) {
    conv2d_accumulate(g, flip(k), dx, Region::full(g.size()));
}

void mask_relu(Features& grad, const Features& z) {
    for (std::size_t c = 0; c < grad.size(); ++c)
        for (std::size_t k = 0; k < grad[c].slices.size(); ++k) {
            auto gv = grad[c].slices[k].values();
            auto zv = z[c].slices[k].values();
            for (std::size_t i = 0; i < gv.size(); ++i)
                if (!(zv[i] > 0.0)) gv[i] = 0.0;
        }
}

Features relu_copy(const Features& z) {
    Features a = z;
    for (auto& f : a) f = relu(std::move(f));
    return a;
}

/// Gradients with respect to every sampled filter plane, same layout as the discrete net.
DiscreteNetwork zero_like(const DiscreteNetwork& dn) {
    DiscreteNetwork out = dn;
    for (DiscreteLayer& layer : out.layers) {
        for (FilterStack& st : layer.stacks)
            for (Plane& p : st) p = Plane(p.size());
        for (FilterStackMid& st : layer.mid_stacks)
            for (Plane& p : st.slices) p = Plane(p.size());
    }
    return out;
}

void backprop_sample(const DiscreteNetwork& dn, const Trace& tr, const GridImage& x,
                     const std::vector<Plane>& gy, DiscreteNetwork& ds) {
    const int L = static_cast<int>(dn.layers.size());
    const int t = dn.t;
    // output layer
    const DiscreteLayer& out = dn.layers.back();
    const Features act = relu_copy(tr.z.back());
    Features grad(out.in_channels, GroupFeatureMap(x.n(), t, x.h));
    for (int ci = 0; ci < out.in_channels; ++ci)
        for (int co = 0; co < out.out_channels; ++co)
            for (int b = 0; b < t; ++b) {
                const std::size_t idx = static_cast<std::size_t>(ci) * out.out_channels + co;
                kernel_grad(act[ci].slices[b], gy[co], ds.layers.back().stacks[idx][b]);
                input_grad(gy[co], out.stacks[idx][b], grad[ci].slices[b]);
            }
    mask_relu(grad, tr.z.back());

    for (int l = L - 2; l >= 1; --l) {
        const DiscreteLayer& layer = dn.layers[l];
        const Features in = relu_copy(tr.z[l - 1]);
        Features next(layer.in_channels, GroupFeatureMap(x.n(), t, x.h));
        for (int ci = 0; ci < layer.in_channels; ++ci)
            for (int co = 0; co < layer.out_channels; ++co) {
                const std::size_t idx = static_cast<std::size_t>(ci) * layer.out_channels + co;
                for (int b = 0; b < t; ++b)
                    for (int a = 0; a < t; ++a) {
                        const int shift = (a - b + t) % t;
                        kernel_grad(in[ci].slices[a], grad[co].slices[b], ds.layers[l].mid_stacks[idx].at(b, shift));
                        input_grad(grad[co].slices[b], layer.mid_stacks[idx].at(b, shift), next[ci].slices[a]);
                    }
            }
        mask_relu(next, tr.z[l - 1]);
        grad = std::move(next);
    }

    const DiscreteLayer& first = dn.layers.front();
    for (int co = 0; co < first.out_channels; ++co)
        for (int k = 0; k < t; ++k)
            kernel_grad(x.data, grad[co].slices[k], ds.layers.front().stacks[co][k]);
}

struct GenerationMap {
    Mat2 m;
    std::array<Mat2, 3> dm;
};

std::vector<GenerationMap> generation_maps(const EqNetwork& net, FilterPath path) {
    std::vector<GenerationMap> maps;
    const GroupSpec group(net.t, net.w);
    const auto dinv = dw_inverse_jacobian(net.w);
    for (int k = 0; k < net.t; ++k) {
        const Mat2 at = group_rotation(k, net.t).transpose();
        if (path == FilterPath::strict) {
            const Mat2 zero{0.0, 0.0, 0.0, 0.0};
            maps.push_back({at, {zero, zero, zero}});
        } else {
            maps.push_back({filter_coordinate_map(group, k), {at * dinv[0], at * dinv[1], at * dinv[2]}});
        }
    }
    return maps;
}

double batch_loss(const DiscreteNetwork& dn, const std::vector<DenoisePair>& batch, int crop,
                  std::vector<Trace>* traces) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    const int n = batch.front().clean.n();
    if (2 * crop >= n) throw std::invalid_argument("crop leaves an empty interior");
    const double count = static_cast<double>(batch.size()) * (n - 2 * crop) * (n - 2 * crop);
    double s = 0.0;
    for (const DenoisePair& pair : batch) {
        Trace tr = forward_trace(dn, pair.noisy);
        const Plane& y = tr.y.front().data;
        for (int i = crop; i < n - crop; ++i)
            for (int j = crop; j < n - crop; ++j) {
                const double r = y(i, j) - pair.clean.data(i, j);
                s += r * r;
            }
        if (traces) traces->push_back(std::move(tr));
    }
    return s / count;
}

}  // namespace

double loss(const EqNetwork& net, const std::vector<DenoisePair>& batch, int crop, FilterPath path) {
    return batch_loss(discretize_path(net, path), batch, crop, nullptr);
}

GradBundle backward(const EqNetwork& net, const std::vector<DenoisePair>& batch, int crop, FilterPath path) {
    const DiscreteNetwork dn = discretize_path(net, path);
    if (dn.layers.back().out_channels != 1) throw std::invalid_argument("the trainer expects one output channel");
    std::vector<Trace> traces;
    GradBundle gb;
    gb.loss = batch_loss(dn, batch, crop, &traces);

    const int n = batch.front().clean.n();
    const double count = static_cast<double>(batch.size()) * (n - 2 * crop) * (n - 2 * crop);
    DiscreteNetwork ds = zero_like(dn);
    for (std::size_t s = 0; s < batch.size(); ++s) {
        Plane gy(n);
        const Plane& y = traces[s].y.front().data;
        for (int i = crop; i < n - crop; ++i)
            for (int j = crop; j < n - crop; ++j) gy(i, j) = 2.0 * (y(i, j) - batch[s].clean.data(i, j)) / count;
        backprop_sample(dn, traces[s], batch[s].noisy, {gy}, ds);
    }

    const auto maps = generation_maps(net, path);
    const int t = net.t;
    for (int l = 0; l < net.depth(); ++l) {
        const EqLayer& layer = net.layers[l];
        std::vector<std::vector<double>> gv;
        for (const ParamFilter& pf : layer.filters) gv.emplace_back(pf.v.size(), 0.0);
        const Sampling s = Sampling::native(layer.filters.front().spec);
        for (int ci = 0; ci < layer.in_channels; ++ci)
            for (int co = 0; co < layer.out_channels; ++co) {
                const std::size_t pair = static_cast<std::size_t>(ci) * layer.out_channels + co;
                if (layer.kind == LayerKind::intermediate) {
                    for (int b = 0; b < t; ++b)
                        for (int a = 0; a < t; ++a)
                            accumulate_filter_grad(layer.filters[pair * t + a], s, maps[b].m, maps[b].dm,
                                                   ds.layers[l].mid_stacks[pair].at(b, a), gv[pair * t + a], gb.w);
                } else {
                    for (int k = 0; k < t; ++k)
                        accumulate_filter_grad(layer.filters[pair], s, maps[k].m, maps[k].dm,
                                               ds.layers[l].stacks[pair][k], gv[pair], gb.w);
                }
            }
        gb.v.push_back(std::move(gv));
    }
    if (path == FilterPath::strict) gb.w = {0.0, 0.0, 0.0};
    return gb;
}

TrainHistory train(const TrainConfig& config, const std::vector<DenoisePair>& data, EqNetwork& net) {
    if (config.steps < 0 || config.batch < 1) throw std::invalid_argument("steps and batch size must be positive");
    if (config.lr_v < 0.0 || config.lr_w < 0.0) throw std::invalid_argument("learning rates must be nonnegative");
    if (data.empty()) throw std::invalid_argument("training set is empty");
    TrainHistory hist;
    std::size_t cursor = 0;
    for (int step = 0; step < config.steps; ++step) {
        std::vector<DenoisePair> batch;
        for (int b = 0; b < config.batch; ++b) {
            batch.push_back(data[cursor]);
            cursor = (cursor + 1) % data.size();
        }
        const GradBundle gb = backward(net, batch, config.crop, config.path);
        if (!std::isfinite(gb.loss)) {
            hist.diverged = true;
            throw std::runtime_error("training diverged at step " + std::to_string(step) + " (loss is not finite)");
        }
        hist.loss.push_back(gb.loss);
        hist.w.push_back(net.w);
        for (int l = 0; l < net.depth(); ++l)
            for (std::size_t f = 0; f < net.layers[l].filters.size(); ++f) {
                auto& v = net.layers[l].filters[f].v;
                for (std::size_t i = 0; i < v.size(); ++i) v[i] -= config.lr_v * gb.v[l][f][i];
            }
        if (!config.freeze_w && config.path == FilterPath::learnable) {
            net.w.alpha = wrap_angle(net.w.alpha - config.lr_w * gb.w[0]);
            net.w.sx -= config.lr_w * gb.w[1];
            net.w.sy -= config.lr_w * gb.w[2];
        }
    }
    return hist;
}

GradCheckReport grad_check(const EqNetwork& net, const std::vector<DenoisePair>& batch, int crop, int coords,
                           std::uint64_t seed, double step) {
    const GradBundle gb = backward(net, batch, crop);
    std::mt19937_64 rng(seed);
    GradCheckReport rep;
    auto record = [&](GradCheckEntry e, double plus, double minus) {
        e.numeric = (plus - minus) / (2.0 * step);
        const double scale = std::max({std::abs(e.analytic), std::abs(e.numeric), 1e-8});
        e.rel_error = std::abs(e.analytic - e.numeric) / scale;
        rep.max_rel_error = std::max(rep.max_rel_error, e.rel_error);
        rep.entries.push_back(e);
    };
    for (int c = 0; c < coords; ++c) {
        const int l = std::uniform_int_distribution<int>(0, net.depth() - 1)(rng);
        const int f = std::uniform_int_distribution<int>(0, static_cast<int>(net.layers[l].filters.size()) - 1)(rng);
        const int i = std::uniform_int_distribution<int>(0, static_cast<int>(net.layers[l].filters[f].v.size()) - 1)(rng);
        EqNetwork probe = net;
        double& x = probe.layers[l].filters[f].v[i];
        const double x0 = x;
        x = x0 + step;
        const double plus = loss(probe, batch, crop);
        x = x0 - step;
        const double minus = loss(probe, batch, crop);
        record({l, f, i, gb.v[l][f][i], 0.0, 0.0}, plus, minus);
    }
    for (int c = 0; c < 3; ++c) {
        EqNetwork probe = net;
        double* x = c == 0 ? &probe.w.alpha : c == 1 ? &probe.w.sx : &probe.w.sy;
        const double x0 = *x;
        *x = x0 + step;
        const double plus = loss(probe, batch, crop);
        *x = x0 - step;
        const double minus = loss(probe, batch, crop);
        record({-1, 0, c, gb.w[c], 0.0, 0.0}, plus, minus);
    }
    return rep;
}

}  // namespace tlconv

#include "tlconv/lab.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <random>
#include <stdexcept>

namespace tlconv {

double EquivarianceReport::dist_w() const {
    const double da = wrap_angle(w.alpha - w_hat.alpha);
    const double dx = w.sx - w_hat.sx;
    const double dy = w.sy - w_hat.sy;
    return std::sqrt(da * da + dx * dx + dy * dy);
}

const char* to_string(Interp mode) { return mode == Interp::analytic ? "analytic" : "bicubic"; }

int default_crop(int kernel_size, int passes) { return (kernel_size + 1) / 2 * passes + 2; }

int geometric_crop(int n, int valid_margin, const Mat2& g) {
    const double half = 0.5 * (n - 1);
    const double row_norm = std::max(std::abs(g.a) + std::abs(g.b), std::abs(g.c) + std::abs(g.d));
    const double room = half - valid_margin - (is_grid_exact(g) ? 0.0 : 2.0);
    if (room <= 0.0) return n;
    const double box = room / row_norm;
    return std::max(0, static_cast<int>(std::ceil(half - box - 1e-9)));
}

namespace {

/// Output box whose image under g (plus the interpolation stencil) covers `box`.
Region footprint(const Mat2& g, const Region& box, int n) {
    const double c = 0.5 * (n - 1);
    double lo0 = 1e300, hi0 = -1e300, lo1 = 1e300, hi1 = -1e300;
    for (int r : {box.r0, box.r1 - 1}) {
        for (int q : {box.c0, box.c1 - 1}) {
            const Vec2 y = g * Vec2{r - c, q - c};
            lo0 = std::min(lo0, y.x0);
            hi0 = std::max(hi0, y.x0);
            lo1 = std::min(lo1, y.x1);
            hi1 = std::max(hi1, y.x1);
        }
    }
    auto lo = [&](double v) { return std::max(0, static_cast<int>(std::floor(v + c)) - 2); };
    auto hi = [&](double v) { return std::min(n, static_cast<int>(std::ceil(v + c)) + 3); };
    return {lo(lo0), hi(hi0), lo(lo1), hi(hi1)};
}

Region interior(int n, int crop) {
    if (2 * crop >= n) throw std::invalid_argument("crop leaves an empty interior");
    return {crop, n - crop, crop, n - crop};
}

void accumulate_error(const Plane& l, const Plane& r, int crop, double& inf, double& mean_sum) {
    inf = std::max(inf, max_abs_diff(l, r, crop));
    mean_sum += mean_abs_diff(l, r, crop);
}

GroupFeatureMap sample_slices(const std::vector<AnalyticImage>& sources, const TransformSpec* ts, int n,
                              double h) {
    const int t = static_cast<int>(sources.size());
    GroupFeatureMap f;
    f.h = h;
    for (int k = 0; k < t; ++k) {
        if (ts == nullptr) {
            f.slices.push_back(sample_image(sources[k], n, h).data);
        } else {
            const AnalyticImage& src = sources[(k - ts->k_tilde + t) % t];
            f.slices.push_back(act_image_analytic(src, *ts, n, h).data);
        }
    }
    return f;
}

GroupFeatureMap transformed_slices(const std::vector<AnalyticImage>& sources, const TransformSpec& ts, int n,
                                   double h) {
    if (ts.interp == Interp::analytic) return sample_slices(sources, &ts, n, h);
    return act_feature(sample_slices(sources, nullptr, n, h), ts);
}

}  // namespace

EquivarianceReport layer_error(const LayerProbe& probe, const std::vector<AnalyticImage>& sources,
                               const TransformSpec& ts, int n, double h, std::optional<int> crop) {
    const int t = ts.t;
    const GroupSpec group(t, probe.w);
    if (probe.filters.empty()) throw std::invalid_argument("layer probe has no filters");
    const Sampling s = Sampling::refined(probe.filters.front().spec, probe.refine);
    const int half = (s.size - 1) / 2;
    const Mat2 g = ts.spatial();

    EquivarianceReport rep;
    rep.kind = to_string(probe.kind);
    rep.t = t;
    rep.k_tilde = ts.k_tilde;
    rep.w = probe.w;
    rep.w_hat = ts.w_hat;
    rep.h = h;
    rep.n = n;
    rep.mode = ts.interp;
    rep.crop = crop.value_or(std::max(default_crop(s.size, 1), geometric_crop(n, half, g)));
    const Region box = interior(n, rep.crop);
    const Region source_box = footprint(g, box, n);

    double mean_sum = 0.0;
    int planes = 0;
    switch (probe.kind) {
        case LayerKind::input: {
            if (sources.size() != 1) throw std::invalid_argument("input layer probe takes one source image");
            const FilterStack stack = discretize_input(probe.filters.front(), group, s);
            const GridImage image = sample_image(sources.front(), n, h);
            const GridImage moved = ts.interp == Interp::analytic ? act_image_analytic(sources.front(), ts, n, h)
                                                                  : act_image_resample(image, ts);
            const auto lhs = input_layer({moved}, {stack}, 1, box).front();
            const auto rhs = act_feature(input_layer({image}, {stack}, 1, source_box).front(), ts);
            for (int k = 0; k < t; ++k) accumulate_error(lhs.slices[k], rhs.slices[k], rep.crop, rep.error_inf, mean_sum);
            planes = t;
            break;
        }
        case LayerKind::intermediate: {
            if (static_cast<int>(sources.size()) != t || static_cast<int>(probe.filters.size()) != t)
                throw std::invalid_argument("intermediate layer probe takes t sources and t filters");
            const FilterStackMid stack = discretize_mid(probe.filters, group, s);
            const GroupFeatureMap f = sample_slices(sources, nullptr, n, h);
            const GroupFeatureMap moved = transformed_slices(sources, ts, n, h);
            const auto lhs = mid_layer({moved}, {stack}, 1, box).front();
            const auto rhs = act_feature(mid_layer({f}, {stack}, 1, source_box).front(), ts);
            for (int k = 0; k < t; ++k) accumulate_error(lhs.slices[k], rhs.slices[k], rep.crop, rep.error_inf, mean_sum);
            planes = t;
            break;
        }
        case LayerKind::output: {
            if (static_cast<int>(sources.size()) != t) throw std::invalid_argument("output layer probe takes t sources");
            const FilterStack stack = discretize_output(probe.filters.front(), group, s);
            const GroupFeatureMap f = sample_slices(sources, nullptr, n, h);
            const GroupFeatureMap moved = transformed_slices(sources, ts, n, h);
            const auto lhs = output_layer({moved}, {stack}, 1, box).front();
            const auto out = output_layer({f}, {stack}, 1, source_box).front();
            const Plane rhs = resample_plane(out.data, h, g);
            accumulate_error(lhs.data, rhs, rep.crop, rep.error_inf, mean_sum);
            planes = 1;
            break;
        }
    }
    rep.error_mean = mean_sum / planes;
    return rep;
}

EquivarianceReport network_error(const EqNetwork& net, const AnalyticImage& r, const TransformSpec& ts, int n,
                                 double h, int refine, std::optional<int> crop) {
    if (ts.t != net.t) throw std::invalid_argument("transform group order does not match network");
    const DiscreteNetwork dn = discretize(net, refine);
    int margin = 0;
    int widest = 1;
    for (const DiscreteLayer& layer : dn.layers) {
        const int size = layer.kind == LayerKind::intermediate ? layer.mid_stacks.front().slices.front().size()
                                                               : layer.stacks.front().front().size();
        margin += (size - 1) / 2;
        widest = std::max(widest, size);
    }
    const Mat2 g = ts.spatial();

    EquivarianceReport rep;
    rep.kind = "network";
    rep.t = net.t;
    rep.k_tilde = ts.k_tilde;
    rep.w = net.w;
    rep.w_hat = ts.w_hat;
    rep.h = h;
    rep.n = n;
    rep.mode = ts.interp;
    rep.crop = crop.value_or(std::max(default_crop(widest, net.depth()), geometric_crop(n, margin, g)));
    const Region box = interior(n, rep.crop);

    const GridImage image = sample_image(r, n, h);
    const GridImage moved = ts.interp == Interp::analytic ? act_image_analytic(r, ts, n, h)
                                                          : act_image_resample(image, ts);
    const GridImage lhs = forward(dn, {moved}, box).front();
    const GridImage out = forward(dn, {image}, footprint(g, box, n)).front();
    const Plane rhs = resample_plane(out.data, h, g);
    rep.error_inf = max_abs_diff(lhs.data, rhs, rep.crop);
    rep.error_mean = mean_abs_diff(lhs.data, rhs, rep.crop);
    return rep;
}

void fit_loglog(SweepTable& table) {
    std::vector<double> xs, ys;
    for (const SweepRow& row : table.rows) {
        if (row.x > 0.0 && row.report.error_inf > 0.0) {
            xs.push_back(std::log(row.x));
            ys.push_back(std::log(row.report.error_inf));
        }
    }
    const std::size_t m = xs.size();
    if (m < 2) {
        table.slope = table.intercept = table.residual = std::nan("");
        return;
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= m;
    my /= m;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    table.slope = sxy / sxx;
    table.intercept = my - table.slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double e = ys[i] - (table.intercept + table.slope * xs[i]);
        ss += e * e;
    }
    table.residual = std::sqrt(ss / m);
}

FilterSpec SweepSetup::filter_spec() const { return FilterSpec(p, q * extent / n0); }

ParamFilter SweepSetup::make_filter() const {
    const FilterSpec spec = filter_spec();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> v(spec.num_nodes());
    for (int k = 0; k < spec.num_nodes(); ++k) {
        const double draw = normal(rng);
        v[k] = spec.node_fits(k, fit_stretch) ? draw : 0.0;
    }
    return ParamFilter(spec, std::move(v), FilterRole::input);
}

AnalyticImage SweepSetup::make_image() const { return make_gaussian_mixture(seed + 1, bumps, mixture); }

int SweepSetup::refine_for(int n) const {
    if (n <= 0 || (n * q) % n0 != 0)
        throw std::invalid_argument("grid size " + std::to_string(n) + " is not a multiple of n0 / q");
    return n * q / n0;
}

namespace {

/// Runs jobs on up to `threads` workers; results keep job order.
template <class T>
std::vector<T> run_jobs(const std::vector<std::function<T()>>& jobs, int threads) {
    std::vector<T> out(jobs.size());
    if (threads <= 1) {
        for (std::size_t i = 0; i < jobs.size(); ++i) out[i] = jobs[i]();
        return out;
    }
    for (std::size_t start = 0; start < jobs.size(); start += threads) {
        std::vector<std::future<T>> running;
        for (std::size_t i = start; i < std::min(jobs.size(), start + threads); ++i)
            running.push_back(std::async(std::launch::async, jobs[i]));
        for (std::size_t i = 0; i < running.size(); ++i) out[start + i] = running[i].get();
    }
    return out;
}

}  // namespace

SweepHResult sweep_h(const SweepHConfig& config) {
    const SweepSetup& su = config.setup;
    SweepHResult res{{}, su.make_filter(), su.make_image()};
    const TransformSpec ts{su.t, su.k_tilde, su.w_hat, Interp::analytic};
    std::vector<std::function<SweepRow()>> jobs;
    for (int n : config.ns) {
        const int refine = su.refine_for(n);
        jobs.push_back([&, n, refine] {
            const double h = su.extent / n;
            const LayerProbe probe{LayerKind::input, {res.filter}, su.w_hat, refine};
            return SweepRow{h, layer_error(probe, {res.image}, ts, n, h)};
        });
    }
    res.table.rows = run_jobs(jobs, su.threads);
    for (std::size_t i = 1; i < res.table.rows.size(); ++i)
        if (!(res.table.rows[i].report.error_inf < res.table.rows[i - 1].report.error_inf)) res.table.monotone = false;
    fit_loglog(res.table);
    return res;
}

SweepWResult sweep_w(const SweepWConfig& config) {
    const SweepSetup& su = config.setup;
    SweepWResult res{{}, {}, su.make_filter(), su.make_image()};
    std::mt19937_64 rng(su.seed + 2);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int d = 0; d < config.directions; ++d) {
        std::array<double, 3> u{normal(rng), normal(rng), normal(rng)};
        const double len = std::sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
        for (double& x : u) x /= len;
        res.directions.push_back(u);
    }
    const TransformSpec ts{su.t, su.k_tilde, su.w_hat, Interp::analytic};
    const int n = config.n;
    const double h = su.extent / n;
    const int refine = su.refine_for(n);
    auto run = [&](TransformParams w) {
        const LayerProbe probe{LayerKind::input, {res.filter}, w, refine};
        return layer_error(probe, {res.image}, ts, n, h);
    };

    std::vector<std::function<EquivarianceReport()>> jobs;
    std::vector<std::pair<int, double>> where;
    std::optional<std::size_t> zero_job;
    for (int d = 0; d < config.directions; ++d) {
        for (double e : config.eps) {
            if (e == 0.0 && zero_job) continue;
            if (e == 0.0) zero_job = jobs.size();
            const auto& u = res.directions[d];
            const TransformParams w{su.w_hat.alpha + e * u[0], su.w_hat.sx + e * u[1], su.w_hat.sy + e * u[2]};
            jobs.push_back([&run, w] { return run(w); });
        }
    }
    const auto reports = run_jobs(jobs, su.threads);
    std::size_t next = 0;
    for (int d = 0; d < config.directions; ++d) {
        SweepTable table;
        for (double e : config.eps) {
            if (e == 0.0) {
                table.rows.push_back({0.0, reports[*zero_job]});
                if (d == 0) ++next;
            } else {
                table.rows.push_back({e, reports[next++]});
            }
        }
        for (std::size_t i = 1; i < table.rows.size(); ++i)
            if (table.rows[i].report.error_inf < table.rows[i - 1].report.error_inf) table.monotone = false;
        fit_loglog(table);
        res.tables.push_back(std::move(table));
    }
    return res;
}

SweepWCheck check_sweep_w(const SweepTable& table, double lo, double hi) {
    SweepWCheck c;
    double base = -1.0;
    for (const SweepRow& row : table.rows)
        if (row.x == 0.0) base = row.report.error_inf;
    if (base < 0.0) throw std::invalid_argument("parameter sweep needs an epsilon = 0 row");
    for (const SweepRow& row : table.rows)
        if (row.report.error_inf < base) c.min_at_zero = false;
    c.nondecreasing = table.monotone;
    for (const SweepRow& a : table.rows) {
        if (a.x <= 0.0 || a.report.error_inf < 10.0 * base) continue;
        for (const SweepRow& b : table.rows) {
            if (std::abs(b.x - 2.0 * a.x) > 1e-12 * a.x) continue;
            const double ratio = b.report.error_inf / a.report.error_inf;
            c.ratios.push_back(ratio);
            if (!(ratio >= lo && ratio <= hi)) c.ratios_ok = false;
        }
    }
    return c;
}

Certificate bound_certificate(const EquivarianceReport& report, const SmoothBounds& image,
                              const FilterBounds& filter, const Sampling& sampling, LayerKind kind) {
    for (double b : {image.f, image.g, image.h, filter.f, filter.g, filter.h})
        if (!(b >= 0.0) || !std::isfinite(b)) throw std::invalid_argument("certificate needs finite nonnegative bounds");
    const double f2 = sampling.weight * filter.f;
    const double g2 = sampling.weight * filter.g;
    const double h2 = sampling.weight * filter.h;
    const double p = sampling.size;
    const double cd = (p + 1.0) * sampling.mesh;
    // C_a / F_2 = p^2, written out so zero filters give a zero bound.
    const double ca_over_f2 = p * p;
    Certificate c;
    c.c_tilde = 24.0 * image.f * g2 * ca_over_f2 * cd;
    c.c = (8.0 * image.f * h2 + 2.0 * f2 * image.h + 8.0 * image.g * g2) * ca_over_f2;
    const double factor = kind == LayerKind::input ? 1.0 : static_cast<double>(report.t);
    c.measured = report.error_inf;
    c.bound = factor * (c.c_tilde * report.dist_w() + c.c * report.h * report.h);
    c.ok = c.measured <= c.bound;
    return c;
}

}  // namespace tlconv

#include "support/oracles.hpp"

#include "tlconv/eqconv.hpp"
#include "tlconv/filter.hpp"
#include "tlconv/group.hpp"
#include "tlconv/lab.hpp"
#include "tlconv/symmetry.hpp"
#include "tlconv/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>

using namespace tlconv;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, double time_limit, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (time_limit > 0.0 && secs > time_limit) {
        o.pass = false;
        o.detail += " [over time limit]";
    }
    if (!o.pass) ++failures;
    std::printf("[%s] %2d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs);
    std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

TransformParams random_w(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> alpha(-std::numbers::pi, std::numbers::pi), s(0.5, 1.5);
    return {alpha(rng), s(rng), s(rng)};
}

constexpr double kImageMesh = 1.0 / 16;

NetworkShape shape3(int t, TransformParams w) {
    NetworkShape s;
    s.t = t;
    s.w = w;
    s.channels = {1, 2, 2, 1};
    s.filter = FilterSpec(5, kImageMesh);
    return s;
}

std::vector<ParamFilter> random_filters(std::mt19937_64& rng, int count, FilterRole role) {
    std::vector<ParamFilter> out;
    for (int a = 0; a < count; ++a)
        out.emplace_back(FilterSpec(5, kImageMesh), oracle::random_vector(25, rng), role, a);
    return out;
}

std::vector<AnalyticImage> images(int count, std::uint64_t seed) {
    std::vector<AnalyticImage> out;
    for (int i = 0; i < count; ++i) out.push_back(make_gaussian_mixture(seed + i, 5, {0.6, 0.1, 0.25, 1.0}));
    return out;
}

}  // namespace

int main() {
    criterion(1, "exact p4 equivariance", 10.0, [] {
        const EqNetwork net = make_random_network(shape3(4, {0, 1, 1}), 1);
        const AnalyticImage r = images(1, 2).front();
        double worst = 0.0;
        for (int k = 1; k < 4; ++k)
            worst = std::max(worst, network_error(net, r, {4, k, {0, 1, 1}}, 48, kImageMesh, 1, 0).error_inf);
        return Outcome{worst <= 1e-9, fmt("max network error %.3g over k~ = 1..3", worst)};
    });

    criterion(2, "exact half-turn conjugated equivariance", 0.0, [] {
        std::mt19937_64 rng(20);
        double worst = 0.0;
        const int orders[] = {2, 4, 6, 8};
        for (int draw = 0; draw < 20; ++draw) {
            const int t = orders[draw % 4];
            const TransformParams w = random_w(rng);
            const TransformSpec ts{t, t / 2, w};
            const auto in = random_filters(rng, 1, FilterRole::input);
            const auto mid = random_filters(rng, t, FilterRole::intermediate);
            const auto out = random_filters(rng, 1, FilterRole::output);
            worst = std::max(worst, layer_error({LayerKind::input, in, w}, images(1, 100 + draw), ts, 40, kImageMesh, 0).error_inf);
            worst = std::max(worst, layer_error({LayerKind::intermediate, mid, w}, images(t, 200 + draw), ts, 40, kImageMesh, 0).error_inf);
            worst = std::max(worst, layer_error({LayerKind::output, out, w}, images(t, 300 + draw), ts, 40, kImageMesh, 0).error_inf);
            const EqNetwork net = make_random_network(shape3(t, w), 400 + draw);
            worst = std::max(worst, network_error(net, images(1, 500 + draw).front(), ts, 40, kImageMesh, 1, 0).error_inf);
        }
        return Outcome{worst <= 1e-9, fmt("max layer/network error %.3g over 20 draws", worst)};
    });

    SweepHConfig hc;
    SweepHResult hres;
    criterion(3, "mesh-size scaling", 120.0, [&] {
        hres = sweep_h(hc);
        std::string errs;
        for (const SweepRow& row : hres.table.rows) errs += fmt("%.3g ", row.report.error_inf);
        const bool slope_ok = hres.table.slope >= 1.7 && hres.table.slope <= 2.3;
        return Outcome{hres.table.monotone && slope_ok,
                       fmt("slope %.3f (target [1.7, 2.3]), strictly decreasing: ", hres.table.slope) +
                           (hres.table.monotone ? "yes" : "no") + ", errors " + errs};
    });

    SweepWConfig wc;
    wc.setup.q = 1;
    SweepWResult wres;
    criterion(4, "parameter-mismatch term", 0.0, [&] {
        wres = sweep_w(wc);
        bool ok = true;
        double lo = INFINITY, hi = -INFINITY;
        for (const SweepTable& t : wres.tables) {
            const SweepWCheck c = check_sweep_w(t);
            ok = ok && c.min_at_zero && c.ratios_ok && !c.ratios.empty();
            for (double r : c.ratios) {
                lo = std::min(lo, r);
                hi = std::max(hi, r);
            }
        }
        return Outcome{ok, fmt("%g directions, minimum at eps = 0 and doubling ratios in [%.3f, %.3f]",
                               static_cast<double>(wres.tables.size()), lo, hi)};
    });

    criterion(5, "bound certificate", 0.0, [&] {
        int violations = 0, rows = 0;
        double tightest = 0.0;
        auto check = [&](const SweepRow& row, const ParamFilter& f, const AnalyticImage& r, int refine) {
            const Certificate c = bound_certificate(row.report, r.bounds(), filter_bounds(f),
                                                    Sampling::refined(f.spec, refine), LayerKind::input);
            ++rows;
            if (!c.ok) ++violations;
            tightest = std::max(tightest, c.measured / c.bound);
        };
        for (const SweepRow& row : hres.table.rows) check(row, hres.filter, hres.image, hc.setup.refine_for(row.report.n));
        for (const SweepTable& t : wres.tables)
            for (const SweepRow& row : t.rows) check(row, wres.filter, wres.image, wc.setup.refine_for(wc.n));
        return Outcome{rows > 0 && violations == 0,
                       fmt("%g rows, %g violations, largest measured/bound %.3g", static_cast<double>(rows),
                           static_cast<double>(violations), tightest)};
    });

    criterion(6, "direct and shifted intermediate forms agree", 0.0, [] {
        std::mt19937_64 rng(60);
        std::uniform_int_distribution<int> td(1, 8);
        double worst = 0.0;
        for (int trial = 0; trial < 50; ++trial) {
            const int t = td(rng);
            const TransformParams w = random_w(rng);
            const auto pfs = random_filters(rng, t, FilterRole::intermediate);
            GroupFeatureMap f(16, t, kImageMesh);
            for (Plane& s : f.slices) s = oracle::random_plane(16, rng);
            const GroupFeatureMap shifted = mid_layer(f, discretize_mid(pfs, GroupSpec(t, w)));
            worst = std::max(worst, oracle::max_diff(shifted, oracle::direct_mid_layer(f, pfs, w)));
        }
        return Outcome{worst <= 1e-12, fmt("max difference %.3g over 50 instances", worst)};
    });

    criterion(7, "gradient fidelity", 0.0, [] {
        DenoiseDataConfig dc;
        dc.count = 2;
        const auto batch = make_denoise_set(5, dc);
        const EqNetwork net = make_toy_network(3, dc.h, {0.2, 1.1, 0.9});
        const GradCheckReport rep = grad_check(net, batch, 3, 50, 9);
        int w_coords = 0;
        for (const GradCheckEntry& e : rep.entries) w_coords += e.layer == -1;
        return Outcome{rep.max_rel_error <= 1e-5 && w_coords == 3 && rep.entries.size() >= 53,
                       fmt("max relative error %.3g over %g coordinates", rep.max_rel_error,
                           static_cast<double>(rep.entries.size()))};
    });

    criterion(8, "parameter count ratio", 0.0, [] {
        bool ok = true;
        std::string detail;
        for (int t : {1, 4, 8}) {
            const EqNetwork net = make_random_network(shape3(t, {0, 1, 1}), 8);
            const std::int64_t own = param_count(net) - 3;
            const std::int64_t plain = plain_equiv_count(net);
            ok = ok && plain == t * own;
            detail += "t=" + std::to_string(t) + ": " + std::to_string(own) + "/" + std::to_string(plain) + " ";
        }
        return Outcome{ok, detail};
    });

    criterion(9, "symmetry fitting recovery", 300.0, [] {
        const TransformParams w_star{0.4, 1.25, 0.8};
        const Dataset data = make_warped_dataset(w_star, 11, 5);
        const FitResult fit = fit_w(data, {});
        const GaugeView got = canonical_gauge(fit.w_hat), want = canonical_gauge(w_star);
        const double ratio_err = std::abs(got.ratio / want.ratio - 1.0);
        double dalpha = std::remainder(got.alpha - want.alpha, std::numbers::pi);
        dalpha = std::abs(dalpha) * 180.0 / std::numbers::pi;
        const double gain = fit.identity_variance / fit.profile.variance;
        return Outcome{ratio_err <= 0.1 && dalpha <= 5.0 && gain >= 5.0,
                       fmt("ratio error %.3g, angle error %.3g deg, variance reduction %.3gx", ratio_err, dalpha, gain)};
    });

    criterion(10, "toy training", 0.0, [] {
        DenoiseDataConfig dc;
        const auto data = make_denoise_set(4, dc);
        TrainConfig tc;
        tc.seed = 3;
        EqNetwork net = make_toy_network(3, dc.h);
        const double before = loss(net, data, tc.crop);
        train(tc, data, net);
        const double after = loss(net, data, tc.crop);

        TrainConfig frozen = tc, strict = tc;
        frozen.freeze_w = true;
        strict.path = FilterPath::strict;
        EqNetwork a = make_toy_network(3, dc.h), b = make_toy_network(3, dc.h);
        const TrainHistory ha = train(frozen, data, a);
        const TrainHistory hb = train(strict, data, b);
        bool same = ha.loss == hb.loss;
        for (std::size_t l = 0; l < a.layers.size(); ++l)
            for (std::size_t f = 0; f < a.layers[l].filters.size(); ++f)
                same = same && a.layers[l].filters[f].v == b.layers[l].filters[f].v;
        return Outcome{after <= 0.5 * before && same,
                       fmt("dataset loss %.4g -> %.4g (ratio %.3g), frozen and strict histories ", before, after,
                           after / before) +
                           (same ? "bit-identical" : "differ")};
    });

    criterion(11, "group closure", 0.0, [] {
        std::mt19937_64 rng(110);
        double worst = 0.0;
        bool ok = true;
        for (int t : {1, 2, 4, 8, 16})
            for (int draw = 0; draw < 20; ++draw) {
                const ClosureReport r = verify_closure(GroupSpec(t, random_w(rng)), 1e-10);
                ok = ok && r.ok;
                worst = std::max(worst, r.max_deviation);
            }
        return Outcome{ok, fmt("max deviation %.3g over 100 groups", worst)};
    });

    std::printf("%d of 11 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}

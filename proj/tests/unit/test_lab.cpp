#include "support/oracles.hpp"

#include "tlconv/lab.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace tlconv;

namespace {

ParamFilter random_filter(std::mt19937_64& rng, FilterRole role, int a = 0) {
    return ParamFilter(FilterSpec(5, 1.0 / 16), oracle::random_vector(25, rng), role, a);
}

std::vector<AnalyticImage> sources(int count, std::uint64_t seed) {
    std::vector<AnalyticImage> out;
    for (int i = 0; i < count; ++i) out.push_back(make_gaussian_mixture(seed + i, 4, {0.6, 0.1, 0.25, 1.0}));
    return out;
}

SweepTable synthetic(const std::vector<std::pair<double, double>>& pts) {
    SweepTable t;
    for (auto [x, e] : pts) {
        SweepRow row;
        row.x = x;
        row.report.error_inf = e;
        t.rows.push_back(row);
    }
    return t;
}

}  // namespace

TEST_CASE("grid-exact layer errors vanish") {
    std::mt19937_64 rng(1);
    const double h = 1.0 / 16;
    const TransformSpec p4{4, 1, {0, 1, 1}};
    CHECK(layer_error({LayerKind::input, {random_filter(rng, FilterRole::input)}, {0, 1, 1}}, sources(1, 3), p4, 40, h, 0)
              .error_inf <= 1e-10);
    std::vector<ParamFilter> mids;
    for (int a = 0; a < 4; ++a) mids.push_back(random_filter(rng, FilterRole::intermediate, a));
    CHECK(layer_error({LayerKind::intermediate, mids, {0, 1, 1}}, sources(4, 5), p4, 40, h, 0).error_inf <= 1e-10);
    CHECK(layer_error({LayerKind::output, {random_filter(rng, FilterRole::output)}, {0, 1, 1}}, sources(4, 9), p4, 40, h, 0)
              .error_inf <= 1e-10);

    const TransformParams w{0.8, 1.3, 0.6};
    const TransformSpec half{6, 3, w};
    const auto rep = layer_error({LayerKind::input, {random_filter(rng, FilterRole::input)}, w}, sources(1, 13), half, 40, h, 0);
    CHECK(rep.error_inf <= 1e-10);
    CHECK(rep.crop == 0);
    CHECK(rep.kind == "input");
}

TEST_CASE("zero image gives zero layer error") {
    std::mt19937_64 rng(2);
    const auto rep = layer_error({LayerKind::input, {random_filter(rng, FilterRole::input)}, {0.3, 1.2, 0.8}},
                                 {AnalyticImage()}, {8, 1, {0.1, 1.0, 0.9}}, 48, 1.0 / 16);
    CHECK(rep.error_inf == 0.0);
    CHECK(rep.crop > 0);
}

TEST_CASE("network errors") {
    NetworkShape shape;
    shape.t = 4;
    shape.channels = {1, 2, 2, 1};
    shape.filter = FilterSpec(5, 1.0 / 16);
    const AnalyticImage r = make_gaussian_mixture(4, 5, {0.6, 0.1, 0.25, 1.0});
    const EqNetwork net = make_random_network(shape, 3);
    for (int k = 1; k < 4; ++k) CHECK(network_error(net, r, {4, k, {0, 1, 1}}, 40, 1.0 / 16, 1, 0).error_inf <= 1e-9);

    EqNetwork zero = net;
    for (EqLayer& l : zero.layers)
        for (ParamFilter& pf : l.filters) std::fill(pf.v.begin(), pf.v.end(), 0.0);
    CHECK(network_error(zero, r, {4, 1, {0, 1, 1}}, 40, 1.0 / 16).error_inf == 0.0);

    shape.t = 8;
    shape.w = {0.5, 0.7, 1.3};
    const EqNetwork n8 = make_random_network(shape, 5);
    CHECK(network_error(n8, r, {8, 4, shape.w}, 40, 1.0 / 16, 1, 0).error_inf <= 1e-9);
    CHECK_THROWS_AS(network_error(n8, r, {4, 1, shape.w}, 40, 1.0 / 16), std::invalid_argument);
}

TEST_CASE("crop helpers") {
    CHECK(default_crop(5, 1) == 5);
    CHECK(default_crop(9, 3) == 17);
    CHECK(geometric_crop(64, 0, Mat2::identity()) == 0);
    CHECK(geometric_crop(64, 4, Mat2::identity()) == 4);
    const int tilted = geometric_crop(64, 4, rotation_matrix(std::numbers::pi / 4));
    CHECK(tilted > 4);
    CHECK(tilted < 32);
}

TEST_CASE("report distance wraps the angle") {
    EquivarianceReport r;
    r.w = {std::numbers::pi - 0.01, 1.0, 1.0};
    r.w_hat = {-std::numbers::pi + 0.01, 1.0, 1.0};
    CHECK(r.dist_w() == doctest::Approx(0.02));
}

TEST_CASE("log-log fit") {
    SweepTable t = synthetic({{0.1, 3e-2}, {0.05, 7.5e-3}, {0.025, 1.875e-3}});
    fit_loglog(t);
    CHECK(t.slope == doctest::Approx(2.0));
    CHECK(t.residual < 1e-12);
    SweepTable one = synthetic({{0.1, 1.0}});
    fit_loglog(one);
    CHECK(std::isnan(one.slope));
}

TEST_CASE("parameter sweep checks") {
    const SweepTable good = synthetic({{0.0, 1e-5}, {0.02, 1e-4}, {0.04, 2e-4}, {0.08, 4.1e-4}});
    const SweepWCheck c = check_sweep_w(good);
    CHECK(c.min_at_zero);
    CHECK(c.ratios.size() == 2);
    CHECK(c.ratios_ok);
    CHECK_FALSE(check_sweep_w(synthetic({{0.0, 1e-3}, {0.02, 5e-4}, {0.04, 5e-2}})).min_at_zero);
    const SweepWCheck steep = check_sweep_w(synthetic({{0.0, 1e-5}, {0.02, 1e-3}, {0.04, 5e-2}}));
    CHECK(steep.min_at_zero);
    CHECK_FALSE(steep.ratios_ok);
    CHECK_THROWS_AS(check_sweep_w(synthetic({{0.02, 1.0}})), std::invalid_argument);
}

TEST_CASE("certificate") {
    const ParamFilter zero(FilterSpec(5, 0.1), std::vector<double>(25, 0.0));
    EquivarianceReport rep;
    rep.t = 8;
    rep.h = 0.1;
    const Certificate c = bound_certificate(rep, {1, 1, 1}, filter_bounds(zero), Sampling::native(zero.spec), LayerKind::input);
    CHECK(c.bound == 0.0);
    CHECK(c.measured == 0.0);
    CHECK(c.ok);

    std::mt19937_64 rng(3);
    const ParamFilter pf(FilterSpec(5, 0.1), oracle::random_vector(25, rng));
    rep.error_inf = 1e-3;
    const Certificate in = bound_certificate(rep, {1, 2, 3}, filter_bounds(pf), Sampling::native(pf.spec), LayerKind::input);
    const Certificate mid = bound_certificate(rep, {1, 2, 3}, filter_bounds(pf), Sampling::native(pf.spec), LayerKind::intermediate);
    CHECK(mid.bound == doctest::Approx(8 * in.bound));
    rep.w = {0.1, 1, 1};
    CHECK(bound_certificate(rep, {1, 2, 3}, filter_bounds(pf), Sampling::native(pf.spec), LayerKind::input).bound > in.bound);
    CHECK_THROWS_AS(bound_certificate(rep, {-1, 0, 0}, filter_bounds(pf), Sampling::native(pf.spec), LayerKind::input),
                    std::invalid_argument);
}

TEST_CASE("small sweeps") {
    SweepHConfig hc;
    hc.setup.t = 4;
    hc.setup.w_hat = {0, 1, 1};
    hc.ns = {64, 128};
    const SweepHResult control = sweep_h(hc);
    REQUIRE(control.table.rows.size() == 2);
    for (const SweepRow& row : control.table.rows) CHECK(row.report.error_inf < 1e-12);

    SweepHConfig h64;
    h64.ns = {64};
    SweepWConfig wc;
    wc.n = 64;
    wc.eps = {0.0, 0.04};
    wc.directions = 2;
    const SweepHResult hres = sweep_h(h64);
    const SweepWResult wres = sweep_w(wc);
    REQUIRE(wres.tables.size() == 2);
    for (const SweepTable& t : wres.tables) {
        CHECK(t.rows.front().x == 0.0);
        CHECK(t.rows.front().report.error_inf == hres.table.rows.front().report.error_inf);
        CHECK(t.rows.back().report.error_inf > t.rows.front().report.error_inf);
    }
    for (const auto& d : wres.directions) CHECK(std::hypot(d[0], d[1], d[2]) == doctest::Approx(1.0));

    SweepHConfig threaded = h64;
    threaded.setup.threads = 2;
    CHECK(sweep_h(threaded).table.rows.front().report.error_inf == hres.table.rows.front().report.error_inf);
    SweepHConfig bad = h64;
    bad.ns = {100};
    CHECK_THROWS_AS(sweep_h(bad), std::invalid_argument);
}

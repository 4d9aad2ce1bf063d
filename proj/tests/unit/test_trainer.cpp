#include "tlconv/trainer.hpp"

#include <doctest.h>

#include <cmath>

using namespace tlconv;

namespace {

std::vector<DenoisePair> small_set(int count = 2) {
    DenoiseDataConfig dc;
    dc.count = count;
    dc.n = 20;
    return make_denoise_set(5, dc);
}

}  // namespace

TEST_CASE("denoise data") {
    const auto a = small_set(), b = small_set();
    REQUIRE(a.size() == 2);
    CHECK(a[0].noisy.data == b[0].noisy.data);
    CHECK_FALSE(a[0].noisy.data == a[0].clean.data);
    DenoiseDataConfig warped;
    warped.count = 1;
    warped.warp = TransformParams{0.4, 1.25, 0.8};
    CHECK(make_denoise_set(1, warped).size() == 1);
}

TEST_CASE("loss basics") {
    const EqNetwork net = make_toy_network(3, 1.0 / 16, {0.2, 1.1, 0.9});
    auto batch = small_set();
    CHECK(loss(net, batch, 3) >= 0.0);
    for (DenoisePair& p : batch) p.clean = forward(net, p.noisy);
    CHECK(loss(net, batch, 3) == 0.0);
    const GradBundle zero = backward(net, batch, 3);
    for (const auto& layer : zero.v)
        for (const auto& f : layer)
            for (double g : f) CHECK(g == 0.0);
    for (double g : zero.w) CHECK(g == 0.0);

    auto doubled = small_set();
    const double base = loss(net, doubled, 3);
    for (DenoisePair& p : doubled) {
        const GridImage pred = forward(net, p.noisy);
        for (int i = 0; i < pred.n(); ++i)
            for (int j = 0; j < pred.n(); ++j) p.clean.data(i, j) = 2 * p.clean.data(i, j) - pred.data(i, j);
    }
    CHECK(loss(net, doubled, 3) == doctest::Approx(4 * base).epsilon(1e-10));
    CHECK_THROWS_AS(loss(net, {}, 3), std::invalid_argument);
    CHECK_THROWS_AS(loss(net, batch, 10), std::invalid_argument);
}

TEST_CASE("backward agrees with finite differences") {
    const EqNetwork net = make_toy_network(3, 1.0 / 16, {0.2, 1.1, 0.9});
    const GradCheckReport rep = grad_check(net, small_set(1), 3, 20, 9);
    CHECK(rep.entries.size() == 23);
    int w_entries = 0;
    for (const GradCheckEntry& e : rep.entries) w_entries += e.layer == -1;
    CHECK(w_entries == 3);
    CHECK(rep.max_rel_error <= 1e-5);
}

TEST_CASE("strict path reports no w gradient") {
    const EqNetwork net = make_toy_network(4, 1.0 / 16);
    const GradBundle gb = backward(net, small_set(), 3, FilterPath::strict);
    for (double g : gb.w) CHECK(g == 0.0);
    CHECK(gb.loss == loss(net, small_set(), 3, FilterPath::strict));
}

TEST_CASE("training") {
    const auto data = small_set(4);
    TrainConfig tc;
    tc.steps = 6;
    tc.batch = 2;

    EqNetwork still = make_toy_network(2, 1.0 / 16, {0.3, 1.1, 0.9});
    TrainConfig zero = tc;
    zero.lr_v = zero.lr_w = 0.0;
    zero.batch = 4;
    const TrainHistory flat = train(zero, data, still);
    for (double l : flat.loss) CHECK(l == flat.loss.front());

    EqNetwork frozen = make_toy_network(2, 1.0 / 16);
    EqNetwork strict = frozen;
    TrainConfig fz = tc;
    fz.freeze_w = true;
    TrainConfig st = tc;
    st.path = FilterPath::strict;
    const TrainHistory a = train(fz, data, frozen);
    const TrainHistory b = train(st, data, strict);
    CHECK(a.loss == b.loss);
    for (std::size_t l = 0; l < frozen.layers.size(); ++l)
        for (std::size_t f = 0; f < frozen.layers[l].filters.size(); ++f)
            CHECK(frozen.layers[l].filters[f].v == strict.layers[l].filters[f].v);

    EqNetwork learn = make_toy_network(2, 1.0 / 16);
    const double before = loss(learn, data, 3);
    const TrainHistory c = train(tc, data, learn);
    CHECK(c.loss.size() == 6);
    CHECK(c.w.size() == 6);
    CHECK(loss(learn, data, 3) < before);

    EqNetwork wild = make_toy_network(2, 1.0 / 16);
    auto poisoned = data;
    poisoned[1].clean.data(10, 10) = std::nan("");
    CHECK_THROWS_AS(train(tc, poisoned, wild), std::runtime_error);
    TrainConfig negative = tc;
    negative.lr_v = -1;
    CHECK_THROWS_AS(train(negative, data, wild), std::invalid_argument);
}

TEST_CASE("per-layer w is rejected") {
    EqNetwork net = make_toy_network(1, 1.0 / 16);
    net.layers[1].w = TransformParams{0.1, 1, 1};
    CHECK_THROWS_AS(loss(net, small_set(), 3), std::invalid_argument);
}

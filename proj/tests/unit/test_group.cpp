#include "support/oracles.hpp"

#include "tlconv/group.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace tlconv;

namespace {

double mat_diff(const Mat2& a, const Mat2& b) {
    return std::max({std::abs(a.a - b.a), std::abs(a.b - b.b), std::abs(a.c - b.c), std::abs(a.d - b.d)});
}

TransformParams random_w(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> alpha(-std::numbers::pi, std::numbers::pi);
    std::uniform_real_distribution<double> s(0.5, 1.5);
    return {alpha(rng), s(rng), s(rng)};
}

}  // namespace

TEST_CASE("rotation matrix values") {
    CHECK(mat_diff(rotation_matrix(0.0), Mat2::identity()) == 0.0);
    CHECK(mat_diff(rotation_matrix(std::numbers::pi / 2), Mat2{0, 1, -1, 0}) < 1e-15);
    CHECK(mat_diff(rotation_matrix(std::numbers::pi), Mat2{-1, 0, 0, -1}) < 1e-15);
    CHECK_THROWS_AS(rotation_matrix(std::nan("")), std::invalid_argument);
    CHECK_THROWS_AS(rotation_matrix(INFINITY), std::invalid_argument);
}

TEST_CASE("rotation composition and orthogonality") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-5, 5);
    for (int i = 0; i < 50; ++i) {
        const double a = u(rng), b = u(rng);
        CHECK(mat_diff(rotation_matrix(a) * rotation_matrix(b), rotation_matrix(a + b)) < 1e-12);
        CHECK(std::abs(rotation_matrix(a).det() - 1.0) < 1e-12);
    }
}

TEST_CASE("dw matrix") {
    CHECK(mat_diff(dw_matrix({0, 1, 1}), Mat2::identity()) == 0.0);
    CHECK(mat_diff(dw_matrix({std::numbers::pi / 2, 1, 1}), Mat2{0, 1, -1, 0}) < 1e-15);
    CHECK(dw_matrix({0.3, 0.8, 1.2}).det() == doctest::Approx(0.96).epsilon(1e-12));
    CHECK_THROWS_AS(dw_matrix({0, 0, 1}), std::invalid_argument);
    CHECK_THROWS_AS(dw_matrix({0, 1, -1}), std::invalid_argument);
    std::mt19937_64 rng(5);
    for (int i = 0; i < 50; ++i) {
        const TransformParams w = random_w(rng);
        CHECK(mat_diff(dw_inverse(w) * dw_matrix(w), Mat2::identity()) < 1e-12);
        CHECK(mat_diff(dw_matrix(w), oracle::dw(w)) < 1e-14);
    }
}

TEST_CASE("dw inverse jacobian matches finite differences") {
    const TransformParams w{0.4, 1.2, 0.7};
    const auto jac = dw_inverse_jacobian(w);
    const double step = 1e-6;
    for (int m = 0; m < 3; ++m) {
        auto a = w.to_array(), b = w.to_array();
        a[m] += step;
        b[m] -= step;
        const Mat2 pa = dw_inverse({a[0], a[1], a[2]});
        const Mat2 pb = dw_inverse({b[0], b[1], b[2]});
        const Mat2 fd{(pa.a - pb.a) / (2 * step), (pa.b - pb.b) / (2 * step), (pa.c - pb.c) / (2 * step),
                      (pa.d - pb.d) / (2 * step)};
        CHECK(mat_diff(jac[m], fd) < 1e-8);
    }
}

TEST_CASE("conjugate element examples") {
    for (int k = 0; k < 8; ++k)
        CHECK(mat_diff(conjugate_element(GroupSpec(8, {0, 1, 1}), k), oracle::rot(k, 8)) < 1e-14);
    const TransformParams w{0, 2, 1};
    const Mat2 direct = oracle::dw(w) * oracle::rot(1, 4) * oracle::dw(w).inverse();
    CHECK(mat_diff(conjugate_element(GroupSpec(4, w), 1), direct) < 1e-14);
    CHECK(mat_diff(conjugate_element(GroupSpec(4, w), 1), Mat2{0, 2, -0.5, 0}) < 1e-14);
    CHECK(mat_diff(conjugate_element(GroupSpec(4, {0.7, 1.3, 0.6}), 2), Mat2{-1, 0, 0, -1}) < 1e-12);
    CHECK(mat_diff(conjugate_element(GroupSpec(6, {0.7, 1.3, 0.6}), 0), Mat2::identity()) < 1e-15);
}

TEST_CASE("half turn is central for every w") {
    std::mt19937_64 rng(6);
    for (int i = 0; i < 30; ++i)
        for (int t : {2, 4, 6, 8, 16}) {
            const Mat2 m = conjugate_element(GroupSpec(t, random_w(rng)), t / 2);
            CHECK(mat_diff(m, Mat2{-1, 0, 0, -1}) < 1e-12);
        }
}

TEST_CASE("closure") {
    const ClosureReport p4 = verify_closure(GroupSpec(4, {0, 1, 1}), 1e-12);
    CHECK(p4.ok);
    CHECK(p4.max_deviation < 1e-15);
    CHECK(verify_closure(GroupSpec(8, {0.3, 1.2, 0.7}), 1e-10).ok);
    const ClosureReport one = verify_closure(GroupSpec(1, {1.0, 0.6, 1.4}), 1e-12);
    CHECK(one.ok);
    CHECK(group_elements(GroupSpec(1, {1.0, 0.6, 1.4})).size() == 1);
    const ClosureReport strict = verify_closure(GroupSpec(8, {0.3, 1.4, 0.5}), 1e-30);
    CHECK_FALSE(strict.ok);
    CHECK(strict.worst_i >= 0);
    CHECK(strict.worst_j >= 0);
}

TEST_CASE("group spec validation and wrapping") {
    CHECK_THROWS_AS(GroupSpec(0, {0, 1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(GroupSpec(4, {0, -1, 1}), std::invalid_argument);
    const GroupSpec g(4, {3 * std::numbers::pi, 1, 1});
    CHECK(std::abs(g.params().alpha) == doctest::Approx(std::numbers::pi));
    CHECK(GroupSpec(4, {0, 1.2, 0.9}).in_recommended_range());
    CHECK_FALSE(GroupSpec(4, {0, 2.0, 0.9}).in_recommended_range());
    CHECK(wrap_angle(2 * std::numbers::pi + 0.1) == doctest::Approx(0.1));
}

TEST_CASE("group index arithmetic") {
    CHECK(group_index_compose(1, 3, 4) == 0);
    CHECK(group_index_inverse(0, 7) == 0);
    CHECK(group_index_inverse(3, 8) == 5);
    CHECK(group_index_compose(group_index_inverse(3, 4), 1, 4) == 2);
}

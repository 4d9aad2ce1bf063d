#include "tlconv/filter.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tlconv {

double keys_kernel(double a) {
    a = std::abs(a);
    if (a <= 1.0) return (1.5 * a - 2.5) * a * a + 1.0;
    if (a < 2.0) return ((-0.5 * a + 2.5) * a - 4.0) * a + 2.0;
    return 0.0;
}

double keys_derivative(double a) {
    const double s = a < 0.0 ? -1.0 : 1.0;
    a = std::abs(a);
    if (a <= 1.0) return s * (4.5 * a - 5.0) * a;
    if (a < 2.0) return s * ((-1.5 * a + 5.0) * a - 4.0);
    return 0.0;
}

double keys_second_derivative(double a) {
    a = std::abs(a);
    if (a <= 1.0) return 9.0 * a - 5.0;
    if (a < 2.0) return -3.0 * a + 5.0;
    return 0.0;
}

FilterSpec::FilterSpec(int p, double h) : p(p), h(h) {
    if (p < 1 || p % 2 == 0) throw std::invalid_argument("filter size must be odd and positive, got " + std::to_string(p));
    if (!(h > 0.0)) throw std::invalid_argument("filter mesh must be positive");
}

bool FilterSpec::node_fits(int k, double stretch) const {
    const Vec2 u = node(k);
    const double reach = std::hypot(std::abs(u.x0) + 2.0 * h, std::abs(u.x1) + 2.0 * h);
    return stretch * reach < support_radius();
}

namespace {

// Points within this distance of the mask circle count as outside, so rounding in
// exactly rotated lattice points cannot flip the mask.
double mask_radius(const FilterSpec& spec) { return spec.support_radius() - 1e-9 * spec.h; }

bool masked(const FilterSpec& spec, Vec2 x) { return x.norm() >= mask_radius(spec); }

// Range of lattice indices whose kernel covers coordinate y along one axis.
std::pair<int, int> node_range(const FilterSpec& spec, double y) {
    const double c = 0.5 * (spec.p - 1);
    const double pos = y / spec.h + c;
    const int lo = std::max(0, static_cast<int>(std::floor(pos)) - 1);
    const int hi = std::min(spec.p - 1, static_cast<int>(std::floor(pos)) + 2);
    return {lo, hi};
}

}  // namespace

double basis_eval(const FilterSpec& spec, int k, Vec2 x) {
    if (masked(spec, x)) return 0.0;
    const Vec2 u = spec.node(k);
    return keys_kernel((x.x0 - u.x0) / spec.h) * keys_kernel((x.x1 - u.x1) / spec.h);
}

Vec2 basis_gradient(const FilterSpec& spec, int k, Vec2 x) {
    if (masked(spec, x)) return {};
    const Vec2 u = spec.node(k);
    const double a = (x.x0 - u.x0) / spec.h;
    const double b = (x.x1 - u.x1) / spec.h;
    return {keys_derivative(a) * keys_kernel(b) / spec.h, keys_kernel(a) * keys_derivative(b) / spec.h};
}

ParamFilter::ParamFilter(FilterSpec spec, std::vector<double> v, FilterRole role, int group_index)
    : spec(spec), v(std::move(v)), role(role), group_index(group_index) {
    if (static_cast<int>(this->v.size()) != spec.num_nodes())
        throw std::invalid_argument("filter needs p^2 coefficients");
}

double ParamFilter::l1_norm() const {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
}

double filter_eval(const ParamFilter& pf, const Mat2& m, Vec2 x) {
    const FilterSpec& spec = pf.spec;
    const Vec2 y = m * x;
    if (masked(spec, y)) return 0.0;
    const auto [i0, i1] = node_range(spec, y.x0);
    const auto [j0, j1] = node_range(spec, y.x1);
    double acc = 0.0;
    for (int i = i0; i <= i1; ++i) {
        const double ki = keys_kernel(y.x0 / spec.h - (i - 0.5 * (spec.p - 1)));
        if (ki == 0.0) continue;
        for (int j = j0; j <= j1; ++j) {
            const double kj = keys_kernel(y.x1 / spec.h - (j - 0.5 * (spec.p - 1)));
            acc += pf.v[static_cast<std::size_t>(i) * spec.p + j] * ki * kj;
        }
    }
    return acc;
}

Vec2 filter_gradient(const ParamFilter& pf, Vec2 y) {
    const FilterSpec& spec = pf.spec;
    if (masked(spec, y)) return {};
    const auto [i0, i1] = node_range(spec, y.x0);
    const auto [j0, j1] = node_range(spec, y.x1);
    Vec2 g;
    for (int i = i0; i <= i1; ++i) {
        const double a = y.x0 / spec.h - (i - 0.5 * (spec.p - 1));
        const double ki = keys_kernel(a);
        const double dki = keys_derivative(a);
        for (int j = j0; j <= j1; ++j) {
            const double b = y.x1 / spec.h - (j - 0.5 * (spec.p - 1));
            const double vk = pf.v[static_cast<std::size_t>(i) * spec.p + j];
            g.x0 += vk * dki * keys_kernel(b);
            g.x1 += vk * ki * keys_derivative(b);
        }
    }
    return (1.0 / spec.h) * g;
}

Sampling Sampling::native(const FilterSpec& spec) { return {spec.p, spec.h, 1.0}; }

Sampling Sampling::refined(const FilterSpec& spec, int factor) {
    if (factor < 1) throw std::invalid_argument("refinement factor must be >= 1");
    return {factor * (spec.p + 1) - 1, spec.h / factor, 1.0 / (static_cast<double>(factor) * factor)};
}

Mat2 filter_coordinate_map(const GroupSpec& spec, int k) {
    return group_rotation(k, spec.order()).transpose() * dw_inverse(spec.params());
}

Plane sample_filter(const ParamFilter& pf, const Mat2& m, const Sampling& s) {
    Plane out(s.size);
    for (int i = 0; i < s.size; ++i)
        for (int j = 0; j < s.size; ++j) out(i, j) = s.weight * filter_eval(pf, m, s.point(i, j));
    return out;
}

FilterStack discretize_input(const ParamFilter& pf, const GroupSpec& spec) {
    return discretize_input(pf, spec, Sampling::native(pf.spec));
}

namespace {

FilterStack discretize_single(const ParamFilter& pf, const GroupSpec& spec, const Sampling& s) {
    FilterStack out;
    out.reserve(spec.order());
    for (int k = 0; k < spec.order(); ++k) out.push_back(sample_filter(pf, filter_coordinate_map(spec, k), s));
    return out;
}

}  // namespace

FilterStack discretize_input(const ParamFilter& pf, const GroupSpec& spec, const Sampling& s) {
    if (pf.role != FilterRole::input) throw std::invalid_argument("discretize_input needs an input-role filter");
    return discretize_single(pf, spec, s);
}

FilterStack discretize_output(const ParamFilter& pf, const GroupSpec& spec) {
    return discretize_output(pf, spec, Sampling::native(pf.spec));
}

FilterStack discretize_output(const ParamFilter& pf, const GroupSpec& spec, const Sampling& s) {
    if (pf.role != FilterRole::output) throw std::invalid_argument("discretize_output needs an output-role filter");
    return discretize_single(pf, spec, s);
}

FilterStackMid discretize_mid(const std::vector<ParamFilter>& pfs, const GroupSpec& spec) {
    if (pfs.empty()) throw std::invalid_argument("intermediate layer needs t filters");
    return discretize_mid(pfs, spec, Sampling::native(pfs.front().spec));
}

FilterStackMid discretize_mid(const std::vector<ParamFilter>& pfs, const GroupSpec& spec,
                              const Sampling& s) {
    const int t = spec.order();
    if (static_cast<int>(pfs.size()) != t)
        throw std::invalid_argument("intermediate layer needs exactly t filters");
    for (int a = 0; a < t; ++a)
        if (pfs[a].role != FilterRole::intermediate)
            throw std::invalid_argument("discretize_mid needs intermediate-role filters");
    FilterStackMid out{t, std::vector<Plane>(static_cast<std::size_t>(t) * t)};
    for (int b = 0; b < t; ++b) {
        const Mat2 m = filter_coordinate_map(spec, b);
        for (int a = 0; a < t; ++a) out.at(b, a) = sample_filter(pfs[a], m, s);
    }
    return out;
}

FilterStack discretize_strict(const ParamFilter& pf, int t) {
    const Sampling s = Sampling::native(pf.spec);
    FilterStack out;
    out.reserve(t);
    for (int k = 0; k < t; ++k) out.push_back(sample_filter(pf, group_rotation(k, t).transpose(), s));
    return out;
}

FilterStackMid discretize_mid_strict(const std::vector<ParamFilter>& pfs, int t) {
    if (static_cast<int>(pfs.size()) != t)
        throw std::invalid_argument("intermediate layer needs exactly t filters");
    const Sampling s = Sampling::native(pfs.front().spec);
    FilterStackMid out{t, std::vector<Plane>(static_cast<std::size_t>(t) * t)};
    for (int b = 0; b < t; ++b) {
        const Mat2 m = group_rotation(b, t).transpose();
        for (int a = 0; a < t; ++a) out.at(b, a) = sample_filter(pfs[a], m, s);
    }
    return out;
}

std::vector<std::vector<std::vector<double>>> filter_jacobian_v(const ParamFilter& pf,
                                                                const GroupSpec& spec) {
    const Sampling s = Sampling::native(pf.spec);
    const int K = pf.spec.num_nodes();
    std::vector<std::vector<std::vector<double>>> jac(
        spec.order(), std::vector<std::vector<double>>(K, std::vector<double>(s.size * s.size)));
    for (int k = 0; k < spec.order(); ++k) {
        const Mat2 m = filter_coordinate_map(spec, k);
        for (int i = 0; i < s.size; ++i) {
            for (int j = 0; j < s.size; ++j) {
                const Vec2 y = m * s.point(i, j);
                for (int node = 0; node < K; ++node)
                    jac[k][node][i * s.size + j] = s.weight * basis_eval(pf.spec, node, y);
            }
        }
    }
    return jac;
}

std::vector<std::array<Plane, 3>> filter_jacobian_w(const ParamFilter& pf, const GroupSpec& spec) {
    const Sampling s = Sampling::native(pf.spec);
    const auto dinv = dw_inverse_jacobian(spec.params());
    std::vector<std::array<Plane, 3>> jac;
    jac.reserve(spec.order());
    for (int k = 0; k < spec.order(); ++k) {
        const Mat2 at = group_rotation(k, spec.order()).transpose();
        const Mat2 m = at * dw_inverse(spec.params());
        std::array<Plane, 3> slice{Plane(s.size), Plane(s.size), Plane(s.size)};
        for (int i = 0; i < s.size; ++i) {
            for (int j = 0; j < s.size; ++j) {
                const Vec2 delta = s.point(i, j);
                const Vec2 grad = filter_gradient(pf, m * delta);
                for (int c = 0; c < 3; ++c) slice[c](i, j) = s.weight * grad.dot((at * dinv[c]) * delta);
            }
        }
        jac.push_back(std::move(slice));
    }
    return jac;
}

void accumulate_filter_grad(const ParamFilter& pf, const Sampling& s, const Mat2& m,
                            const std::array<Mat2, 3>& dm, const Plane& upstream,
                            std::span<double> grad_v, std::array<double, 3>& grad_w) {
    const FilterSpec& spec = pf.spec;
    if (upstream.size() != s.size) throw std::invalid_argument("upstream gradient size mismatch");
    const double cn = 0.5 * (spec.p - 1);
    for (int i = 0; i < s.size; ++i) {
        for (int j = 0; j < s.size; ++j) {
            const double g = upstream(i, j) * s.weight;
            if (g == 0.0) continue;
            const Vec2 delta = s.point(i, j);
            const Vec2 y = m * delta;
            if (masked(spec, y)) continue;
            const auto [i0, i1] = node_range(spec, y.x0);
            const auto [j0, j1] = node_range(spec, y.x1);
            Vec2 grad;
            for (int a = i0; a <= i1; ++a) {
                const double xa = y.x0 / spec.h - (a - cn);
                const double ka = keys_kernel(xa);
                const double dka = keys_derivative(xa);
                for (int b = j0; b <= j1; ++b) {
                    const double xb = y.x1 / spec.h - (b - cn);
                    const double kb = keys_kernel(xb);
                    const std::size_t node = static_cast<std::size_t>(a) * spec.p + b;
                    grad_v[node] += g * ka * kb;
                    grad.x0 += pf.v[node] * dka * kb;
                    grad.x1 += pf.v[node] * ka * keys_derivative(xb);
                }
            }
            grad = (1.0 / spec.h) * grad;
            for (int c = 0; c < 3; ++c) grad_w[c] += g * grad.dot(dm[c] * delta);
        }
    }
}

FilterBounds filter_bounds(const ParamFilter& pf) {
    const double l1 = pf.l1_norm();
    const double h = pf.spec.h;
    const double hess = std::sqrt(2.0 * kKeysSecondMax * kKeysSecondMax + 2.0 * std::pow(kKeysDerivMax, 4));
    return {l1 * kKeysMax * kKeysMax, l1 * std::sqrt(2.0) * kKeysDerivMax * kKeysMax / h, l1 * hess / (h * h)};
}

namespace {

nlohmann::json plane_json(const Plane& p) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < p.size(); ++i) rows.push_back(std::vector<double>(p.row(i), p.row(i) + p.size()));
    return rows;
}

nlohmann::json header(const FilterSpec& spec, const GroupSpec& group, const char* role, int size) {
    const auto& w = group.params();
    return {{"role", role}, {"t", group.order()}, {"p", spec.p}, {"h", spec.h}, {"size", size},
            {"w", {w.alpha, w.sx, w.sy}}};
}

}  // namespace

nlohmann::json stack_to_json(const FilterStack& stack, const FilterSpec& spec, const GroupSpec& group,
                             const char* role) {
    nlohmann::json j = header(spec, group, role, stack.empty() ? 0 : stack.front().size());
    j["data"] = nlohmann::json::array();
    for (const Plane& p : stack) j["data"].push_back(plane_json(p));
    return j;
}

nlohmann::json stack_to_json(const FilterStackMid& stack, const FilterSpec& spec, const GroupSpec& group) {
    nlohmann::json j = header(spec, group, "intermediate", stack.slices.empty() ? 0 : stack.slices.front().size());
    j["data"] = nlohmann::json::array();
    for (int b = 0; b < stack.t; ++b) {
        nlohmann::json row = nlohmann::json::array();
        for (int a = 0; a < stack.t; ++a) row.push_back(plane_json(stack.at(b, a)));
        j["data"].push_back(std::move(row));
    }
    return j;
}

}  // namespace tlconv

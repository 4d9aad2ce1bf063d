#pragma once

#include "tlconv/grid.hpp"
#include "tlconv/group.hpp"

#include <json.hpp>

#include <array>
#include <span>
#include <vector>

namespace tlconv {

/// Keys cubic convolution kernel with a = -0.5. C1 everywhere, support (-2, 2).
double keys_kernel(double a);
double keys_derivative(double a);
double keys_second_derivative(double a);

/// Sup-norms of the kernel and its first two derivatives.
inline constexpr double kKeysMax = 1.0;
inline constexpr double kKeysDerivMax = 25.0 / 18.0;
inline constexpr double kKeysSecondMax = 5.0;

/// Basis lattice of a parameterized filter: p x p cardinal bicubic nodes at
/// spacing h, centered at the origin. Every basis function is masked to zero at
/// and beyond radius (p + 1) h / 2.
struct FilterSpec {
    int p = 5;
    double h = 1.0;

    FilterSpec() = default;
    FilterSpec(int p, double h);

    int num_nodes() const { return p * p; }
    double support_radius() const { return 0.5 * (p + 1) * h; }
    Vec2 node(int k) const { return {grid_coord(k / p, p, h), grid_coord(k % p, p, h)}; }

    /// True when node k's bicubic footprint, stretched by `stretch`, stays strictly
    /// inside the support disk, i.e. the mask never cuts it.
    bool node_fits(int k, double stretch = 1.0) const;
};

double basis_eval(const FilterSpec& spec, int k, Vec2 x);
Vec2 basis_gradient(const FilterSpec& spec, int k, Vec2 x);

enum class FilterRole { input, intermediate, output };

/// phi(x) = sum_k v_k phi_k(x). Intermediate filters carry the group index of
/// the feature channel they read.
struct ParamFilter {
    FilterSpec spec;
    std::vector<double> v;
    FilterRole role = FilterRole::input;
    int group_index = 0;

    ParamFilter() = default;
    ParamFilter(FilterSpec spec, std::vector<double> v, FilterRole role = FilterRole::input,
                int group_index = 0);

    double l1_norm() const;
};

/// phi(M x).
double filter_eval(const ParamFilter& pf, const Mat2& m, Vec2 x);
/// Gradient of phi at y (not composed with any map).
Vec2 filter_gradient(const ParamFilter& pf, Vec2 y);

/// Where the discrete filter is sampled. The native sampling reuses the basis
/// lattice (size p, mesh h, unit weight). A refined sampling with factor m uses
/// size m (p + 1) - 1, mesh h / m and quadrature weight 1 / m^2, so the sampled
/// footprint covers the same physical disk.
struct Sampling {
    int size = 5;
    double mesh = 1.0;
    double weight = 1.0;

    static Sampling native(const FilterSpec& spec);
    static Sampling refined(const FilterSpec& spec, int factor);

    Vec2 point(int i, int j) const { return {grid_coord(i, size, mesh), grid_coord(j, size, mesh)}; }
};

/// [k][i][j] for input and output layers.
using FilterStack = std::vector<Plane>;

/// [b][a][i][j] for intermediate layers.
struct FilterStackMid {
    int t = 0;
    std::vector<Plane> slices;  // index b * t + a

    Plane& at(int b, int a) { return slices[static_cast<std::size_t>(b) * t + a]; }
    const Plane& at(int b, int a) const { return slices[static_cast<std::size_t>(b) * t + a]; }
};

/// Coordinate map A^-1 D_w^-1 applied to the sampling grid for group index k.
Mat2 filter_coordinate_map(const GroupSpec& spec, int k);

/// Single slice: weight * phi(M delta_ij).
Plane sample_filter(const ParamFilter& pf, const Mat2& m, const Sampling& s);

FilterStack discretize_input(const ParamFilter& pf, const GroupSpec& spec);
FilterStack discretize_input(const ParamFilter& pf, const GroupSpec& spec, const Sampling& s);
FilterStack discretize_output(const ParamFilter& pf, const GroupSpec& spec);
FilterStack discretize_output(const ParamFilter& pf, const GroupSpec& spec, const Sampling& s);
/// pfs[a] is phi_A for A = R(2 pi a / t).
FilterStackMid discretize_mid(const std::vector<ParamFilter>& pfs, const GroupSpec& spec);
FilterStackMid discretize_mid(const std::vector<ParamFilter>& pfs, const GroupSpec& spec,
                              const Sampling& s);

/// Strict rotation discretization: the same sampling with A^-1 only. Never forms
/// D_w, so it serves as the reference path for the w = [0, 1, 1] degeneration.
FilterStack discretize_strict(const ParamFilter& pf, int t);
FilterStackMid discretize_mid_strict(const std::vector<ParamFilter>& pfs, int t);

/// d(stack[k][i][j]) / d(v_m), layout [k][m][i * p + j].
std::vector<std::vector<std::vector<double>>> filter_jacobian_v(const ParamFilter& pf,
                                                                const GroupSpec& spec);
/// d(stack[k][i][j]) / d(alpha, s_x, s_y), layout [k][c] as planes.
std::vector<std::array<Plane, 3>> filter_jacobian_w(const ParamFilter& pf, const GroupSpec& spec);

/// Contracts an upstream gradient over a stack slice with the generation map:
/// adds sum_ij g_ij d(slice_ij)/dv into grad_v and d/dw into grad_w.
void accumulate_filter_grad(const ParamFilter& pf, const Sampling& s, const Mat2& m,
                            const std::array<Mat2, 3>& dm, const Plane& upstream,
                            std::span<double> grad_v, std::array<double, 3>& grad_w);

/// Sup bounds of |phi|, ||grad phi||, ||hess phi|| from basis bounds times ||v||_1.
/// Valid when the support mask never cuts a basis footprint with nonzero weight.
struct FilterBounds {
    double f = 0.0;
    double g = 0.0;
    double h = 0.0;
};
FilterBounds filter_bounds(const ParamFilter& pf);

nlohmann::json stack_to_json(const FilterStack& stack, const FilterSpec& spec,
                             const GroupSpec& group, const char* role);
nlohmann::json stack_to_json(const FilterStackMid& stack, const FilterSpec& spec,
                             const GroupSpec& group);

}  // namespace tlconv

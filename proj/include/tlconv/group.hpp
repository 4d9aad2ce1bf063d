#pragma once

#include "tlconv/mat2.hpp"

#include <vector>

namespace tlconv {

/// Learnable transformation parameters w = [alpha, s_x, s_y].
struct TransformParams {
    double alpha = 0.0;
    double sx = 1.0;
    double sy = 1.0;

    static constexpr TransformParams identity() { return {0.0, 1.0, 1.0}; }
    std::array<double, 3> to_array() const { return {alpha, sx, sy}; }
};

/// Euclidean distance between two parameter triples.
double param_distance(const TransformParams& l, const TransformParams& r);

/// Wraps an angle into (-pi, pi].
double wrap_angle(double theta);

/// Order-t rotation group conjugated by D_w. Construction validates t >= 1 and
/// positive scales and wraps alpha.
class GroupSpec {
public:
    GroupSpec(int t, TransformParams w);

    int order() const { return t_; }
    const TransformParams& params() const { return w_; }

    /// Scales outside [0.5, 1.5] are allowed but unusual for real camera geometry.
    bool in_recommended_range() const;

private:
    int t_;
    TransformParams w_;
};

/// [[cos, sin], [-sin, cos]].
Mat2 rotation_matrix(double theta);

/// R(2*pi*k/t); quarter turns are returned with exact 0/+-1 entries.
Mat2 group_rotation(int k, int t);

Mat2 dw_matrix(const TransformParams& w);

/// Closed form diag(1/s_x, 1/s_y) * R(alpha)^T.
Mat2 dw_inverse(const TransformParams& w);

/// Partial derivatives of dw_inverse with respect to (alpha, s_x, s_y).
std::array<Mat2, 3> dw_inverse_jacobian(const TransformParams& w);

/// D_w R(2*pi*k/t) D_w^-1.
Mat2 conjugate_element(const GroupSpec& spec, int k);

std::vector<Mat2> group_elements(const GroupSpec& spec);

struct ClosureReport {
    bool ok = true;
    double max_deviation = 0.0;
    int worst_i = -1;
    int worst_j = -1;
};

/// Checks element(i) * element(j) == element((i + j) mod t) for every pair.
ClosureReport verify_closure(const GroupSpec& spec, double tol);

int group_index_compose(int a, int b, int t);
int group_index_inverse(int a, int t);

}  // namespace tlconv

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace hsc {

using VertexId = std::int32_t;
using AdjacencyList = std::vector<std::vector<VertexId>>;

/// Triangles whose signed area is smaller than this are rejected as
/// degenerate (near-singular edge matrix).
inline constexpr double kDegenerateAreaTol = 1e-14;

/// A point of the open unit disk (Klein or Poincare model).
struct DiskPoint {
    double u = 0.0;
    double v = 0.0;

    double norm_sq() const { return u * u + v * v; }
    Eigen::Vector2d vec() const { return {u, v}; }
};

/// Planar triangle used for the isometric face embedding.
/// Construction rejects triangles with |signed area| < kDegenerateAreaTol.
class PlanarTriangle {
public:
    PlanarTriangle(const Eigen::Vector2d& p1, const Eigen::Vector2d& p2,
                   const Eigen::Vector2d& p3);
    PlanarTriangle(DiskPoint p1, DiskPoint p2, DiskPoint p3)
        : PlanarTriangle(p1.vec(), p2.vec(), p3.vec()) {}

    const Eigen::Vector2d& p1() const { return p1_; }
    const Eigen::Vector2d& p2() const { return p2_; }
    const Eigen::Vector2d& p3() const { return p3_; }

    double signed_area() const { return signed_area_; }

    /// Edge matrix [p3 - p1, p2 - p1]; invertible by the construction check.
    Eigen::Matrix2d edge_matrix() const;

private:
    Eigen::Vector2d p1_, p2_, p3_;
    double signed_area_;
};

/// 2x2 Jacobian of a derivative map, with its determinant cached at
/// construction time.
class Jacobian2x2 {
public:
    explicit Jacobian2x2(const Eigen::Matrix2d& m)
        : m_(m), det_(m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0)) {}

    const Eigen::Matrix2d& matrix() const { return m_; }
    double det() const { return det_; }
    double operator()(int row, int col) const { return m_(row, col); }

private:
    Eigen::Matrix2d m_;
    double det_;
};

/// Hyperbolic distance between two Klein-disk points: half the log
/// cross-ratio of the chord through them. Throws NumericError if either
/// point is on or outside the unit circle.
double klein_distance(DiskPoint a, DiskPoint b);

/// Radial map from the Poincare disk to the Klein disk, k = 2p / (1 + |p|^2).
DiskPoint poincare_to_klein(DiskPoint p);

/// Inverse of poincare_to_klein, p = k / (1 + sqrt(1 - |k|^2)).
DiskPoint klein_to_poincare(DiskPoint k);

/// Linear map J taking the source triangle's edge vectors onto the target's:
/// J (v2 - v1) = w2 - w1 and J (v3 - v1) = w3 - w1.
Jacobian2x2 derivative_map(const PlanarTriangle& source, const PlanarTriangle& target);

/// Local area-change ratio sqrt(det J). Throws NumericError when det <= 0
/// (flipped or collapsed face).
double tbm_value(const Jacobian2x2& jacobian);

/// Explicit graph diffusion: each iteration replaces f(v) with
/// (1 - step) f(v) + step * mean of f over the 1-ring of v.
/// Vertices with no neighbors are left unchanged. step in (0, 1].
Eigen::VectorXd smooth_vertex_field(const AdjacencyList& adjacency,
                                    Eigen::Ref<const Eigen::VectorXd> field,
                                    int iterations, double step);

}  // namespace hsc

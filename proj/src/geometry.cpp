#include "hsc/geometry.hpp"

#include "hsc/errors.hpp"

#include <Eigen/LU>

#include <cmath>

namespace hsc {

namespace {

void require_inside_disk(DiskPoint p, const char* who) {
    if (p.norm_sq() >= 1.0) {
        throw NumericError(std::string(who) + ": point on or outside the unit circle");
    }
}

}  // namespace

PlanarTriangle::PlanarTriangle(const Eigen::Vector2d& p1, const Eigen::Vector2d& p2,
                               const Eigen::Vector2d& p3)
    : p1_(p1), p2_(p2), p3_(p3) {
    const Eigen::Vector2d e1 = p2 - p1;
    const Eigen::Vector2d e2 = p3 - p1;
    signed_area_ = 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
    if (std::abs(signed_area_) < kDegenerateAreaTol) {
        throw NumericError("PlanarTriangle: degenerate (singular edge matrix)");
    }
}

Eigen::Matrix2d PlanarTriangle::edge_matrix() const {
    Eigen::Matrix2d edges;
    edges.col(0) = p3_ - p1_;
    edges.col(1) = p2_ - p1_;
    return edges;
}

double klein_distance(DiskPoint a, DiskPoint b) {
    require_inside_disk(a, "klein_distance");
    require_inside_disk(b, "klein_distance");

    const Eigen::Vector2d pa = a.vec();
    const Eigen::Vector2d pb = b.vec();
    const Eigen::Vector2d diff = pb - pa;
    const double len = diff.norm();
    if (len == 0.0) {
        return 0.0;
    }

    // Parameterize the chord as pa + s * unit_dir and intersect with the unit
    // circle: s^2 + 2 (pa . u) s + |pa|^2 - 1 = 0. Both points lie strictly
    // inside, so one root is < 0 (endpoint behind a) and one is > len
    // (endpoint beyond b).
    const Eigen::Vector2d unit_dir = diff / len;
    const double proj = pa.dot(unit_dir);
    const double disc = proj * proj - (pa.squaredNorm() - 1.0);
    const double root = std::sqrt(disc);
    const double s_behind = -proj - root;
    const double s_beyond = -proj + root;

    // Signed positions along the chord turn into the four point-to-endpoint
    // distances of the cross-ratio, long pair over short pair.
    const double a_near = -s_behind;
    const double a_far = s_beyond;
    const double b_near = s_beyond - len;
    const double b_far = len - s_behind;

    return 0.5 * std::log((a_far * b_far) / (a_near * b_near));
}

DiskPoint poincare_to_klein(DiskPoint p) {
    require_inside_disk(p, "poincare_to_klein");
    const double scale = 2.0 / (1.0 + p.norm_sq());
    return {scale * p.u, scale * p.v};
}

DiskPoint klein_to_poincare(DiskPoint k) {
    require_inside_disk(k, "klein_to_poincare");
    const double scale = 1.0 / (1.0 + std::sqrt(1.0 - k.norm_sq()));
    return {scale * k.u, scale * k.v};
}

Jacobian2x2 derivative_map(const PlanarTriangle& source, const PlanarTriangle& target) {
    const Eigen::Matrix2d source_edges = source.edge_matrix();
    const Eigen::Matrix2d target_edges = target.edge_matrix();
    return Jacobian2x2(target_edges * source_edges.inverse());
}

double tbm_value(const Jacobian2x2& jacobian) {
    const double det = jacobian.det();
    if (det <= 0.0) {
        throw NumericError("tbm_value: non-positive Jacobian determinant (flipped or collapsed face)");
    }
    return std::sqrt(det);
}

Eigen::VectorXd smooth_vertex_field(const AdjacencyList& adjacency,
                                    Eigen::Ref<const Eigen::VectorXd> field,
                                    int iterations, double step) {
    if (field.size() != static_cast<Eigen::Index>(adjacency.size())) {
        throw Error("smooth_vertex_field: field length does not match vertex count");
    }
    if (iterations < 0) {
        throw Error("smooth_vertex_field: negative iteration count");
    }
    if (!(step > 0.0 && step <= 1.0)) {
        throw Error("smooth_vertex_field: step must lie in (0, 1]");
    }

    Eigen::VectorXd current = field;
    Eigen::VectorXd next(current.size());
    for (int it = 0; it < iterations; ++it) {
        for (Eigen::Index v = 0; v < current.size(); ++v) {
            const auto& neighbors = adjacency[static_cast<std::size_t>(v)];
            if (neighbors.empty()) {
                next[v] = current[v];
                continue;
            }
            double sum = 0.0;
            for (VertexId n : neighbors) {
                sum += current[n];
            }
            const double mean = sum / static_cast<double>(neighbors.size());
            next[v] = (1.0 - step) * current[v] + step * mean;
        }
        current.swap(next);
    }
    return current;
}

}  // namespace hsc

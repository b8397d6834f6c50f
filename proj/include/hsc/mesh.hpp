#pragma once

#include "hsc/geometry.hpp"

#include <Eigen/Core>

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace hsc {

using FaceTriple = std::array<VertexId, 3>;

/// One input vertex: 3D position, Klein-disk parameter, scalar TBM feature.
struct VertexRecord {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    DiskPoint param;
    double tbm = 0.0;
};

/// Connected triangle mesh with a Klein-disk parameterization and a
/// per-vertex TBM field. Immutable after construction; build() verifies all
/// invariants (indices in range, no degenerate faces, params strictly inside
/// the unit disk, single connected component) and computes the symmetric
/// sorted adjacency.
class ParamSurface {
public:
    static ParamSurface build(std::vector<VertexRecord> vertices, std::vector<FaceTriple> faces);

    VertexId vertex_count() const { return static_cast<VertexId>(vertices_.size()); }
    std::size_t face_count() const { return faces_.size(); }

    const Eigen::Vector3d& position(VertexId v) const { return vertices_[v].position; }
    DiskPoint param(VertexId v) const { return vertices_[v].param; }
    double tbm(VertexId v) const { return vertices_[v].tbm; }

    /// The whole TBM field as a dense vector.
    Eigen::VectorXd tbm_field() const;

    /// Copy of this surface carrying a replacement TBM field.
    ParamSurface with_tbm(Eigen::Ref<const Eigen::VectorXd> field) const;

    const std::vector<FaceTriple>& faces() const { return faces_; }
    const std::vector<VertexId>& neighbors(VertexId v) const { return adjacency_[v]; }
    const AdjacencyList& adjacency() const { return adjacency_; }

private:
    ParamSurface() = default;

    std::vector<VertexRecord> vertices_;
    std::vector<FaceTriple> faces_;
    AdjacencyList adjacency_;
};

/// Center, its 1-ring, then the new 2-ring vertices. Within each BFS level
/// vertices appear in ascending index order; no duplicates; center first.
std::vector<VertexId> bfs_two_ring(const AdjacencyList& adjacency, VertexId center);
std::vector<VertexId> bfs_two_ring(const ParamSurface& surface, VertexId center);

inline Eigen::VectorXd smooth_vertex_field(const ParamSurface& surface,
                                           Eigen::Ref<const Eigen::VectorXd> field,
                                           int iterations, double step) {
    return smooth_vertex_field(surface.adjacency(), field, iterations, step);
}

/// Per-vertex TBM of the map taking `subject` onto `target`: faces correspond
/// by index, each face contributes sqrt(det J) of its derivative map in the
/// parameter domain, and a vertex averages the values of its incident faces.
Eigen::VectorXd vertex_tbm_from_map(const ParamSurface& subject, const ParamSurface& target);

/// HSM v1 text format. Header `HSM 1 <nv> <nf>` (after optional leading `#`
/// comment lines), nv vertex lines `x y z pu pv tbm`, nf face lines `i j k`
/// with 0-based indices. UTF-8, LF line endings.
ParamSurface load_surface(const std::filesystem::path& path);
void save_surface(const ParamSurface& surface, const std::filesystem::path& path);

}  // namespace hsc

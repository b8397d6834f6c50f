#pragma once

#include "hsc/mesh.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace hsc {

/// Ring-shaped patch: a center, its two-BFS-ring member set, and a
/// fixed-length feature vector of TBM values.
struct RingPatch {
    VertexId center = 0;
    std::vector<VertexId> members;  // members[0] == center, no duplicates
    Eigen::VectorXd features;       // always exactly patch_dim entries
};

struct SamplingConfig {
    int target_patch_count = 200;   // p
    int patch_dim = 60;             // m
    double stop_radius = 0.1;       // halting radius of the farthest sweep
    bool require_full_coverage = true;

    void validate() const;
};

/// Per-run sampling trace for diagnostics: the farthest radii in selection
/// order (non-increasing by construction) and how the run ended.
struct SamplingTrace {
    std::vector<double> radii;  // radius of each center after the first
    int fps_count = 0;          // centers picked by the farthest-point rule
    int coverage_count = 0;     // centers added by the coverage sweep
    bool clamped = false;       // target_patch_count exceeded the vertex count
};

/// Fixed-dimension feature vector for the two-ring patch at `center`:
/// members in BFS order, TBM values kept for the patch_dim hyperbolically
/// closest members (ties by vertex index) and padded with the center's TBM
/// when the patch is smaller than patch_dim.
RingPatch patch_features(const ParamSurface& surface, VertexId center, int patch_dim);

/// Farthest point sampling with breadth-first search. The first center is
/// drawn uniformly from the seed; every later one maximizes the hyperbolic
/// distance to the already-selected set. Sampling continues until the patch
/// count has reached target_patch_count AND the radius measured against the
/// most recent center has dropped to stop_radius, saturating at one patch
/// per vertex; the coverage sweep then adds centers from the uncovered
/// vertices until every vertex belongs to at least one patch.
///
/// Note the stop radius is measured against the latest center only, while
/// selection maximizes distance to the whole selected set; on meshes wider
/// than stop_radius the sweep therefore saturates at one patch per vertex.
std::vector<RingPatch> fpsbs_sample(const ParamSurface& surface, const SamplingConfig& config,
                                    std::uint64_t seed, SamplingTrace* trace = nullptr);

/// Patch dump CSV: header, then one row per patch with
/// patch_id, center, member_count, and patch_dim feature columns.
void save_patches_csv(const std::vector<RingPatch>& patches, const std::filesystem::path& path);
std::vector<RingPatch> load_patches_csv(const std::filesystem::path& path);

}  // namespace hsc

#pragma once

#include "hsc/mesh.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hsc {

/// Synthetic cohort: a shared triangulated grid parameterized into a small
/// sub-square of the Klein disk, per-subject noisy TBM fields, and a
/// multiplicative class effect inside a hyperbolic disk region.
struct SynthConfig {
    int subjects_per_class = 60;
    int grid_rows = 16;
    int grid_cols = 16;
    double param_half_width = 0.03;  // grid maps onto [-w, w]^2 in the disk
    DiskPoint effect_center{0.012, 0.012};
    double effect_radius = 0.018;  // hyperbolic radius of the affected region
    double effect_size = 0.5;      // positive-class TBM multiplier is 1 + effect_size
    double noise_sigma = 0.05;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SynthDataset {
    std::vector<std::string> subject_ids;
    std::vector<ParamSurface> surfaces;
    std::vector<int> labels;  // 1 = positive class (regional effect applied)
};

/// Deterministic per seed. TBM is 1 + N(0, noise_sigma) everywhere and is
/// additionally scaled by (1 + effect_size) for positive subjects at vertices
/// within effect_radius of effect_center.
SynthDataset generate(const SynthConfig& config);

/// The shared base mesh (unit TBM field) of the given config.
ParamSurface base_grid_surface(const SynthConfig& config);

}  // namespace hsc

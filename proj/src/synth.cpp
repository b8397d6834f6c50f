#include "hsc/synth.hpp"

#include "hsc/errors.hpp"
#include "hsc/rng.hpp"

#include <cmath>
#include <cstdio>

namespace hsc {

void SynthConfig::validate() const {
    if (subjects_per_class < 1) {
        throw ConfigError("SynthConfig: subjects_per_class must be >= 1");
    }
    if (grid_rows < 2 || grid_cols < 2) {
        throw ConfigError("SynthConfig: grid dimensions must be at least 2x2");
    }
    if (!(param_half_width > 0.0) || param_half_width * std::sqrt(2.0) >= 1.0) {
        throw ConfigError("SynthConfig: parameter square must fit inside the unit disk");
    }
    if (effect_center.norm_sq() >= 1.0) {
        throw ConfigError("SynthConfig: effect_center must lie inside the unit disk");
    }
    if (!(effect_radius > 0.0)) {
        throw ConfigError("SynthConfig: effect_radius must be > 0");
    }
    if (effect_size < 0.0) {
        throw ConfigError("SynthConfig: effect_size must be >= 0");
    }
    if (noise_sigma < 0.0) {
        throw ConfigError("SynthConfig: noise_sigma must be >= 0");
    }
}

ParamSurface base_grid_surface(const SynthConfig& config) {
    config.validate();
    const int rows = config.grid_rows;
    const int cols = config.grid_cols;

    std::vector<VertexRecord> vertices;
    vertices.reserve(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const double a = static_cast<double>(r) / (rows - 1);
            const double b = static_cast<double>(c) / (cols - 1);
            VertexRecord record;
            record.param = DiskPoint{(2.0 * a - 1.0) * config.param_half_width,
                                     (2.0 * b - 1.0) * config.param_half_width};
            // Smooth embedded sheet; mesh units are arbitrary.
            record.position = Eigen::Vector3d(
                a, b, 0.1 * std::sin(3.141592653589793 * a) * std::sin(3.141592653589793 * b));
            record.tbm = 1.0;
            vertices.push_back(record);
        }
    }

    std::vector<FaceTriple> faces;
    faces.reserve(2u * static_cast<std::size_t>(rows - 1) * static_cast<std::size_t>(cols - 1));
    auto at = [cols](int r, int c) { return static_cast<VertexId>(r * cols + c); };
    for (int r = 0; r + 1 < rows; ++r) {
        for (int c = 0; c + 1 < cols; ++c) {
            faces.push_back({at(r, c), at(r + 1, c), at(r, c + 1)});
            faces.push_back({at(r + 1, c), at(r + 1, c + 1), at(r, c + 1)});
        }
    }
    return ParamSurface::build(std::move(vertices), std::move(faces));
}

SynthDataset generate(const SynthConfig& config) {
    const ParamSurface base = base_grid_surface(config);
    const VertexId nv = base.vertex_count();

    std::vector<char> in_region(static_cast<std::size_t>(nv), 0);
    for (VertexId v = 0; v < nv; ++v) {
        in_region[static_cast<std::size_t>(v)] =
            klein_distance(base.param(v), config.effect_center) < config.effect_radius;
    }

    SynthDataset dataset;
    const int total = 2 * config.subjects_per_class;
    dataset.subject_ids.reserve(total);
    dataset.surfaces.reserve(total);
    dataset.labels.reserve(total);

    for (int s = 0; s < total; ++s) {
        const int label = s < config.subjects_per_class ? 0 : 1;
        Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(s)));
        Eigen::VectorXd field(nv);
        for (VertexId v = 0; v < nv; ++v) {
            double value = 1.0 + config.noise_sigma * rng.next_gaussian();
            if (label == 1 && in_region[static_cast<std::size_t>(v)]) {
                value *= 1.0 + config.effect_size;
            }
            field[v] = value;
        }
        char id[32];
        std::snprintf(id, sizeof id, "subj_%03d_%s", s, label ? "pos" : "neg");
        dataset.subject_ids.emplace_back(id);
        dataset.surfaces.push_back(base.with_tbm(field));
        dataset.labels.push_back(label);
    }
    return dataset;
}

}  // namespace hsc

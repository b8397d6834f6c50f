#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "hsc/errors.hpp"
#include "hsc/synth.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <vector>

using namespace hsc;

namespace {

SynthConfig small_config() {
    SynthConfig config;
    config.subjects_per_class = 50;
    config.grid_rows = 10;
    config.grid_cols = 10;
    config.param_half_width = 0.03;
    config.effect_center = DiskPoint{0.012, 0.012};
    config.effect_radius = 0.018;
    config.effect_size = 0.5;
    config.noise_sigma = 0.05;
    config.seed = 2024;
    return config;
}

std::vector<char> region_mask(const ParamSurface& base, const SynthConfig& config) {
    std::vector<char> mask(static_cast<std::size_t>(base.vertex_count()), 0);
    for (VertexId v = 0; v < base.vertex_count(); ++v) {
        mask[static_cast<std::size_t>(v)] =
            klein_distance(base.param(v), config.effect_center) < config.effect_radius;
    }
    return mask;
}

}  // namespace

TEST_CASE("generated surfaces satisfy the mesh invariants") {
    const SynthConfig config = small_config();
    const SynthDataset dataset = generate(config);
    REQUIRE(dataset.surfaces.size() == 100);
    REQUIRE(dataset.labels.size() == 100);
    CHECK(std::count(dataset.labels.begin(), dataset.labels.end(), 1) == 50);

    for (const ParamSurface& surface : dataset.surfaces) {
        CHECK(surface.vertex_count() == 100);
        for (VertexId v = 0; v < surface.vertex_count(); ++v) {
            CHECK(surface.param(v).norm_sq() < 1.0);
        }
    }
    CHECK(dataset.subject_ids.front() == "subj_000_neg");
    CHECK(dataset.subject_ids.back() == "subj_099_pos");
}

TEST_CASE("generation is deterministic per seed") {
    const SynthConfig config = small_config();
    const SynthDataset a = generate(config);
    const SynthDataset b = generate(config);
    for (std::size_t s = 0; s < a.surfaces.size(); ++s) {
        CHECK(a.surfaces[s].tbm_field() == b.surfaces[s].tbm_field());
    }

    SynthConfig reseeded = config;
    reseeded.seed = 2025;
    const SynthDataset c = generate(reseeded);
    CHECK(a.surfaces[0].tbm_field() != c.surfaces[0].tbm_field());
}

TEST_CASE("effect region raises the positive-class TBM by the configured factor") {
    const SynthConfig config = small_config();
    const ParamSurface base = base_grid_surface(config);
    const auto mask = region_mask(base, config);
    const long region_size = std::count(mask.begin(), mask.end(), char(1));
    REQUIRE(region_size > 3);  // region must cover a few vertices
    REQUIRE(region_size < base.vertex_count());

    const SynthDataset dataset = generate(config);
    double positive_sum = 0.0, negative_sum = 0.0;
    long positive_count = 0, negative_count = 0;
    for (std::size_t s = 0; s < dataset.surfaces.size(); ++s) {
        for (VertexId v = 0; v < base.vertex_count(); ++v) {
            if (!mask[static_cast<std::size_t>(v)]) {
                continue;
            }
            if (dataset.labels[s] == 1) {
                positive_sum += dataset.surfaces[s].tbm(v);
                ++positive_count;
            } else {
                negative_sum += dataset.surfaces[s].tbm(v);
                ++negative_count;
            }
        }
    }
    const double ratio = (positive_sum / positive_count) / (negative_sum / negative_count);
    // Mean ratio 1.5 within 3 standard errors: sigma 0.05 over >= 50 * region
    // samples keeps the standard error well under 0.01.
    CHECK(ratio == doctest::Approx(1.5).epsilon(0.02));
}

TEST_CASE("outside the region the classes are statistically indistinguishable") {
    const SynthConfig config = small_config();
    const ParamSurface base = base_grid_surface(config);
    const auto mask = region_mask(base, config);

    const SynthDataset dataset = generate(config);
    std::vector<double> positive_values, negative_values;
    for (std::size_t s = 0; s < dataset.surfaces.size(); ++s) {
        for (VertexId v = 0; v < base.vertex_count(); ++v) {
            if (mask[static_cast<std::size_t>(v)]) {
                continue;
            }
            (dataset.labels[s] == 1 ? positive_values : negative_values)
                .push_back(dataset.surfaces[s].tbm(v));
        }
    }
    CHECK(oracles::welch_p_value(positive_values, negative_values) > 0.01);
}

TEST_CASE("zero effect makes both classes draws from one distribution") {
    SynthConfig config = small_config();
    config.effect_size = 0.0;
    const ParamSurface base = base_grid_surface(config);
    const auto mask = region_mask(base, config);

    const SynthDataset dataset = generate(config);
    std::vector<double> positive_values, negative_values;
    for (std::size_t s = 0; s < dataset.surfaces.size(); ++s) {
        for (VertexId v = 0; v < base.vertex_count(); ++v) {
            if (!mask[static_cast<std::size_t>(v)]) {
                continue;
            }
            (dataset.labels[s] == 1 ? positive_values : negative_values)
                .push_back(dataset.surfaces[s].tbm(v));
        }
    }
    CHECK(oracles::welch_p_value(positive_values, negative_values) > 0.01);
}

TEST_CASE("config validation") {
    SynthConfig config = small_config();
    config.grid_rows = 1;
    CHECK_THROWS_AS(generate(config), ConfigError);

    config = small_config();
    config.param_half_width = 0.9;  // corner would leave the disk
    CHECK_THROWS_AS(generate(config), ConfigError);

    config = small_config();
    config.noise_sigma = -0.1;
    CHECK_THROWS_AS(generate(config), ConfigError);

    config = small_config();
    config.subjects_per_class = 0;
    CHECK_THROWS_AS(generate(config), ConfigError);
}

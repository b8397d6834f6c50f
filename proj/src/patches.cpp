#include "hsc/patches.hpp"

#include "hsc/errors.hpp"
#include "hsc/rng.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace hsc {

void SamplingConfig::validate() const {
    if (target_patch_count < 1) {
        throw ConfigError("SamplingConfig: target_patch_count must be >= 1");
    }
    if (patch_dim < 1) {
        throw ConfigError("SamplingConfig: patch_dim must be >= 1");
    }
    if (!(stop_radius > 0.0)) {
        throw ConfigError("SamplingConfig: stop_radius must be > 0");
    }
}

RingPatch patch_features(const ParamSurface& surface, VertexId center, int patch_dim) {
    RingPatch patch;
    patch.center = center;
    patch.members = bfs_two_ring(surface, center);

    // Order members by hyperbolic distance from the center, ties by index.
    const DiskPoint center_param = surface.param(center);
    std::vector<std::pair<double, VertexId>> by_distance;
    by_distance.reserve(patch.members.size());
    for (VertexId v : patch.members) {
        by_distance.emplace_back(klein_distance(center_param, surface.param(v)), v);
    }
    std::stable_sort(by_distance.begin(), by_distance.end());

    patch.features.resize(patch_dim);
    const int kept = std::min<int>(patch_dim, static_cast<int>(by_distance.size()));
    for (int i = 0; i < kept; ++i) {
        patch.features[i] = surface.tbm(by_distance[static_cast<std::size_t>(i)].second);
    }
    for (int i = kept; i < patch_dim; ++i) {
        patch.features[i] = surface.tbm(center);
    }
    return patch;
}

std::vector<RingPatch> fpsbs_sample(const ParamSurface& surface, const SamplingConfig& config,
                                    std::uint64_t seed, SamplingTrace* trace) {
    config.validate();
    const VertexId nv = surface.vertex_count();
    if (nv < 1) {
        throw Error("fpsbs_sample: empty mesh");
    }

    int target = config.target_patch_count;
    bool clamped = false;
    if (target > nv) {
        std::fprintf(stderr,
                     "fpsbs_sample: target_patch_count %d exceeds vertex count %d; clamping\n",
                     target, nv);
        target = nv;
        clamped = true;
    }

    std::vector<DiskPoint> params(static_cast<std::size_t>(nv));
    for (VertexId v = 0; v < nv; ++v) {
        params[static_cast<std::size_t>(v)] = surface.param(v);
    }

    Rng rng(seed);
    const VertexId first = static_cast<VertexId>(rng.next_index(static_cast<std::uint64_t>(nv)));

    std::vector<RingPatch> patches;
    std::vector<char> is_center(static_cast<std::size_t>(nv), 0);
    std::vector<char> covered(static_cast<std::size_t>(nv), 0);
    std::vector<double> dist_to_set(static_cast<std::size_t>(nv),
                                    std::numeric_limits<double>::infinity());
    std::vector<double> radii;
    int fps_count = 0;

    auto add_center = [&](VertexId center) {
        is_center[static_cast<std::size_t>(center)] = 1;
        patches.push_back(patch_features(surface, center, config.patch_dim));
        for (VertexId member : patches.back().members) {
            covered[static_cast<std::size_t>(member)] = 1;
        }
        // One distance sweep per center serves both the stop test (max) and
        // the distance-to-set table (pointwise min).
        double r_latest = 0.0;
        for (VertexId v = 0; v < nv; ++v) {
            const double d = klein_distance(params[static_cast<std::size_t>(v)],
                                            params[static_cast<std::size_t>(center)]);
            r_latest = std::max(r_latest, d);
            dist_to_set[static_cast<std::size_t>(v)] =
                std::min(dist_to_set[static_cast<std::size_t>(v)], d);
        }
        return r_latest;
    };

    auto farthest_vertex = [&]() {
        VertexId best = -1;
        double best_dist = -1.0;
        for (VertexId v = 0; v < nv; ++v) {
            if (is_center[static_cast<std::size_t>(v)]) {
                continue;
            }
            if (dist_to_set[static_cast<std::size_t>(v)] > best_dist) {
                best_dist = dist_to_set[static_cast<std::size_t>(v)];
                best = v;
            }
        }
        return std::make_pair(best, best_dist);
    };

    double r_latest = add_center(first);
    ++fps_count;
    while (!(static_cast<int>(patches.size()) >= target && r_latest <= config.stop_radius) &&
           static_cast<int>(patches.size()) < nv) {
        const auto [next, radius] = farthest_vertex();
        if (!radii.empty() && radius > radii.back() + 1e-12) {
            throw std::logic_error("fpsbs_sample: farthest radius increased");
        }
        radii.push_back(radius);
        r_latest = add_center(next);
        ++fps_count;
    }

    int coverage_count = 0;
    if (config.require_full_coverage) {
        while (static_cast<int>(patches.size()) < nv) {
            VertexId best = -1;
            double best_dist = -1.0;
            for (VertexId v = 0; v < nv; ++v) {
                if (covered[static_cast<std::size_t>(v)] ||
                    is_center[static_cast<std::size_t>(v)]) {
                    continue;
                }
                if (dist_to_set[static_cast<std::size_t>(v)] > best_dist) {
                    best_dist = dist_to_set[static_cast<std::size_t>(v)];
                    best = v;
                }
            }
            if (best < 0) {
                break;  // everything covered
            }
            add_center(best);
            ++coverage_count;
        }
    }

    if (trace) {
        trace->radii = std::move(radii);
        trace->fps_count = fps_count;
        trace->coverage_count = coverage_count;
        trace->clamped = clamped;
    }
    return patches;
}

void save_patches_csv(const std::vector<RingPatch>& patches, const std::filesystem::path& path) {
    if (patches.empty()) {
        throw Error("save_patches_csv: no patches");
    }
    const Eigen::Index dim = patches.front().features.size();
    std::FILE* file = std::fopen(path.string().c_str(), "wb");
    if (!file) {
        throw IoError("save_patches_csv: cannot open " + path.string() + " for writing");
    }
    std::fprintf(file, "patch_id,center,member_count");
    for (Eigen::Index i = 0; i < dim; ++i) {
        std::fprintf(file, ",f%lld", static_cast<long long>(i));
    }
    std::fprintf(file, "\n");
    for (std::size_t p = 0; p < patches.size(); ++p) {
        std::fprintf(file, "%zu,%d,%zu", p, patches[p].center, patches[p].members.size());
        for (Eigen::Index i = 0; i < dim; ++i) {
            std::fprintf(file, ",%.17g", patches[p].features[i]);
        }
        std::fprintf(file, "\n");
    }
    if (std::fclose(file) != 0) {
        throw IoError("save_patches_csv: failed to flush " + path.string());
    }
}

namespace {

double parse_number(const std::string& cell, long line_no) {
    try {
        std::size_t consumed = 0;
        const double value = std::stod(cell, &consumed);
        if (consumed != cell.size()) {
            throw std::invalid_argument(cell);
        }
        return value;
    } catch (const std::exception&) {
        throw ParseError("load_patches_csv: bad numeric cell '" + cell + "'", line_no);
    }
}

}  // namespace

std::vector<RingPatch> load_patches_csv(const std::filesystem::path& path) {
    std::ifstream file(path);
    if (!file) {
        throw IoError("load_patches_csv: cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(file, line)) {
        throw ParseError("load_patches_csv: empty file", 1);
    }
    long columns = static_cast<long>(std::count(line.begin(), line.end(), ',')) + 1;
    const long dim = columns - 3;
    if (dim < 1) {
        throw ParseError("load_patches_csv: header has no feature columns", 1);
    }

    std::vector<RingPatch> patches;
    long line_no = 1;
    while (std::getline(file, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        std::istringstream stream(line);
        std::string cell;
        RingPatch patch;
        patch.features.resize(dim);
        // patch_id is positional; center and member_count follow.
        if (!std::getline(stream, cell, ',')) {
            throw ParseError("load_patches_csv: malformed row", line_no);
        }
        if (!std::getline(stream, cell, ',')) {
            throw ParseError("load_patches_csv: malformed row", line_no);
        }
        patch.center = static_cast<VertexId>(parse_number(cell, line_no));
        if (!std::getline(stream, cell, ',')) {
            throw ParseError("load_patches_csv: malformed row", line_no);
        }
        for (long i = 0; i < dim; ++i) {
            if (!std::getline(stream, cell, ',')) {
                throw ParseError("load_patches_csv: expected " + std::to_string(dim) +
                                     " feature columns",
                                 line_no);
            }
            patch.features[i] = parse_number(cell, line_no);
        }
        patches.push_back(std::move(patch));
    }
    if (patches.empty()) {
        throw ParseError("load_patches_csv: no patch rows", line_no);
    }
    return patches;
}

}  // namespace hsc

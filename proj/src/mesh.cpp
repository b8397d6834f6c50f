#include "hsc/mesh.hpp"

#include "hsc/errors.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

namespace hsc {

ParamSurface ParamSurface::build(std::vector<VertexRecord> vertices, std::vector<FaceTriple> faces) {
    if (vertices.empty()) {
        throw MeshError(MeshError::Kind::empty, "build_surface: no vertices");
    }
    const VertexId nv = static_cast<VertexId>(vertices.size());

    for (VertexId v = 0; v < nv; ++v) {
        if (vertices[v].param.norm_sq() >= 1.0) {
            throw MeshError(MeshError::Kind::param_outside_disk,
                            "build_surface: param of vertex " + std::to_string(v) +
                                " not strictly inside the unit disk");
        }
    }

    std::vector<std::set<VertexId>> neighbor_sets(vertices.size());
    for (std::size_t f = 0; f < faces.size(); ++f) {
        const FaceTriple& face = faces[f];
        for (VertexId idx : face) {
            if (idx < 0 || idx >= nv) {
                throw MeshError(MeshError::Kind::index_out_of_range,
                                "build_surface: face " + std::to_string(f) +
                                    " references vertex " + std::to_string(idx));
            }
        }
        if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2]) {
            throw MeshError(MeshError::Kind::degenerate_face,
                            "build_surface: face " + std::to_string(f) + " repeats a vertex");
        }
        neighbor_sets[face[0]].insert(face[1]);
        neighbor_sets[face[0]].insert(face[2]);
        neighbor_sets[face[1]].insert(face[0]);
        neighbor_sets[face[1]].insert(face[2]);
        neighbor_sets[face[2]].insert(face[0]);
        neighbor_sets[face[2]].insert(face[1]);
    }

    AdjacencyList adjacency(vertices.size());
    for (std::size_t v = 0; v < vertices.size(); ++v) {
        adjacency[v].assign(neighbor_sets[v].begin(), neighbor_sets[v].end());
    }

    // Connectivity check; farthest point sampling requires one component.
    std::vector<char> seen(vertices.size(), 0);
    std::deque<VertexId> queue{0};
    seen[0] = 1;
    VertexId reached = 1;
    while (!queue.empty()) {
        const VertexId v = queue.front();
        queue.pop_front();
        for (VertexId n : adjacency[v]) {
            if (!seen[n]) {
                seen[n] = 1;
                ++reached;
                queue.push_back(n);
            }
        }
    }
    if (reached != nv) {
        throw MeshError(MeshError::Kind::disconnected,
                        "build_surface: mesh has more than one connected component");
    }

    ParamSurface surface;
    surface.vertices_ = std::move(vertices);
    surface.faces_ = std::move(faces);
    surface.adjacency_ = std::move(adjacency);
    return surface;
}

Eigen::VectorXd ParamSurface::tbm_field() const {
    Eigen::VectorXd field(vertices_.size());
    for (std::size_t v = 0; v < vertices_.size(); ++v) {
        field[static_cast<Eigen::Index>(v)] = vertices_[v].tbm;
    }
    return field;
}

ParamSurface ParamSurface::with_tbm(Eigen::Ref<const Eigen::VectorXd> field) const {
    if (field.size() != static_cast<Eigen::Index>(vertices_.size())) {
        throw Error("with_tbm: field length does not match vertex count");
    }
    ParamSurface copy = *this;
    for (std::size_t v = 0; v < copy.vertices_.size(); ++v) {
        copy.vertices_[v].tbm = field[static_cast<Eigen::Index>(v)];
    }
    return copy;
}

std::vector<VertexId> bfs_two_ring(const AdjacencyList& adjacency, VertexId center) {
    std::vector<VertexId> out{center};
    std::vector<char> seen(adjacency.size(), 0);
    seen[center] = 1;

    // 1-ring: adjacency lists are sorted, so this level is already ordered.
    for (VertexId n : adjacency[center]) {
        seen[n] = 1;
        out.push_back(n);
    }
    const std::size_t ring1_end = out.size();

    std::vector<VertexId> ring2;
    for (std::size_t i = 1; i < ring1_end; ++i) {
        for (VertexId n : adjacency[out[i]]) {
            if (!seen[n]) {
                seen[n] = 1;
                ring2.push_back(n);
            }
        }
    }
    std::sort(ring2.begin(), ring2.end());
    out.insert(out.end(), ring2.begin(), ring2.end());
    return out;
}

std::vector<VertexId> bfs_two_ring(const ParamSurface& surface, VertexId center) {
    return bfs_two_ring(surface.adjacency(), center);
}

Eigen::VectorXd vertex_tbm_from_map(const ParamSurface& subject, const ParamSurface& target) {
    if (subject.vertex_count() != target.vertex_count() ||
        subject.face_count() != target.face_count()) {
        throw Error("vertex_tbm_from_map: surfaces are not in correspondence");
    }
    Eigen::VectorXd sums = Eigen::VectorXd::Zero(subject.vertex_count());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(subject.vertex_count());
    for (std::size_t f = 0; f < subject.face_count(); ++f) {
        const FaceTriple& sf = subject.faces()[f];
        const FaceTriple& tf = target.faces()[f];
        const PlanarTriangle source(subject.param(sf[0]), subject.param(sf[1]), subject.param(sf[2]));
        const PlanarTriangle mapped(target.param(tf[0]), target.param(tf[1]), target.param(tf[2]));
        const double value = tbm_value(derivative_map(source, mapped));
        for (VertexId v : sf) {
            sums[v] += value;
            counts[v] += 1.0;
        }
    }
    for (Eigen::Index v = 0; v < sums.size(); ++v) {
        if (counts[v] > 0.0) {
            sums[v] /= counts[v];
        }
    }
    return sums;
}

namespace {

bool parse_doubles(const std::string& line, double* out, int count) {
    std::istringstream stream(line);
    for (int i = 0; i < count; ++i) {
        if (!(stream >> out[i])) {
            return false;
        }
    }
    std::string rest;
    return !(stream >> rest);
}

}  // namespace

ParamSurface load_surface(const std::filesystem::path& path) {
    std::ifstream file(path);
    if (!file) {
        throw IoError("load_surface: cannot open " + path.string());
    }

    std::string line;
    long line_no = 0;

    // Skip comments, then expect the header.
    long nv = -1, nf = -1;
    while (std::getline(file, line)) {
        ++line_no;
        if (!line.empty() && line[0] == '#') {
            continue;
        }
        std::istringstream header(line);
        std::string magic;
        int version = 0;
        if (!(header >> magic >> version >> nv >> nf) || magic != "HSM") {
            throw ParseError("load_surface: malformed HSM header", line_no);
        }
        if (version != 1) {
            throw ParseError("load_surface: unsupported HSM version " + std::to_string(version),
                             line_no);
        }
        break;
    }
    if (nv < 0 || nf < 0) {
        throw ParseError("load_surface: missing HSM header", line_no);
    }

    std::vector<VertexRecord> vertices;
    vertices.reserve(static_cast<std::size_t>(nv));
    for (long i = 0; i < nv; ++i) {
        if (!std::getline(file, line)) {
            throw ParseError("load_surface: expected " + std::to_string(nv) +
                                 " vertex lines, file ended after " + std::to_string(i),
                             line_no);
        }
        ++line_no;
        double fields[6];
        if (!parse_doubles(line, fields, 6)) {
            throw ParseError("load_surface: malformed vertex line", line_no);
        }
        VertexRecord record;
        record.position = Eigen::Vector3d(fields[0], fields[1], fields[2]);
        record.param = DiskPoint{fields[3], fields[4]};
        record.tbm = fields[5];
        if (record.param.norm_sq() >= 1.0) {
            throw ParseError("load_surface: param point not strictly inside the unit disk",
                             line_no);
        }
        vertices.push_back(record);
    }

    std::vector<FaceTriple> faces;
    faces.reserve(static_cast<std::size_t>(nf));
    for (long i = 0; i < nf; ++i) {
        if (!std::getline(file, line)) {
            throw ParseError("load_surface: expected " + std::to_string(nf) +
                                 " face lines, file ended after " + std::to_string(i),
                             line_no);
        }
        ++line_no;
        std::istringstream stream(line);
        long a, b, c;
        std::string rest;
        if (!(stream >> a >> b >> c) || (stream >> rest)) {
            throw ParseError("load_surface: malformed face line", line_no);
        }
        faces.push_back({static_cast<VertexId>(a), static_cast<VertexId>(b),
                         static_cast<VertexId>(c)});
    }

    try {
        return ParamSurface::build(std::move(vertices), std::move(faces));
    } catch (const MeshError& e) {
        throw IoError("load_surface: " + path.string() + ": " + e.what());
    }
}

void save_surface(const ParamSurface& surface, const std::filesystem::path& path) {
    std::FILE* file = std::fopen(path.string().c_str(), "wb");
    if (!file) {
        throw IoError("save_surface: cannot open " + path.string() + " for writing");
    }
    std::fprintf(file, "HSM 1 %" PRId32 " %zu\n", surface.vertex_count(), surface.face_count());
    for (VertexId v = 0; v < surface.vertex_count(); ++v) {
        const Eigen::Vector3d& p = surface.position(v);
        const DiskPoint q = surface.param(v);
        std::fprintf(file, "%.17g %.17g %.17g %.17g %.17g %.17g\n", p.x(), p.y(), p.z(), q.u, q.v,
                     surface.tbm(v));
    }
    for (const FaceTriple& f : surface.faces()) {
        std::fprintf(file, "%" PRId32 " %" PRId32 " %" PRId32 "\n", f[0], f[1], f[2]);
    }
    if (std::fclose(file) != 0) {
        throw IoError("save_surface: failed to flush " + path.string());
    }
}

}  // namespace hsc

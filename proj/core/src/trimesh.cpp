#include "splatgen/geometry/trimesh.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace sg::geo {

void TriMesh::validate() const {
    int64_t v = vertex_count();
    if ((int64_t)region.size() != v)
        throw std::invalid_argument("region labels must cover every vertex");
    for (const auto& f : faces) {
        for (int i = 0; i < 3; ++i)
            if (f[i] < 0 || f[i] >= v) throw std::invalid_argument("face index out of range");
        if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2])
            throw std::invalid_argument("degenerate face (repeated vertex index)");
    }
}

namespace {

float face_area(const TriMesh& m, const std::array<int32_t, 3>& f) {
    Vec3 e1 = m.vertices[f[1]] - m.vertices[f[0]];
    Vec3 e2 = m.vertices[f[2]] - m.vertices[f[0]];
    return 0.5f * e1.cross(e2).norm();
}

bool needs_split(const TriMesh& m, const std::array<int32_t, 3>& f, float et, float at) {
    float area = face_area(m, f);
    if (area <= 0.f) return false;
    if (area > at) return true;
    for (int i = 0; i < 3; ++i) {
        float len = (m.vertices[f[i]] - m.vertices[f[(i + 1) % 3]]).norm();
        if (len > et) return true;
    }
    return false;
}

} // namespace

TriMesh densify_mesh(const TriMesh& mesh, float edge_thresh, float area_thresh,
                     std::vector<int32_t>* aux) {
    if (edge_thresh <= 0.f || area_thresh <= 0.f)
        throw std::invalid_argument("densify thresholds must be positive");
    mesh.validate();
    if (aux && aux->size() != mesh.vertices.size())
        throw std::invalid_argument("aux label count mismatch");

    TriMesh out = mesh;
    std::map<std::pair<int32_t, int32_t>, int32_t> midpoint; // edge -> new vertex

    auto midpoint_of = [&](int32_t a, int32_t b) -> int32_t {
        auto key = std::minmax(a, b);
        auto it = midpoint.find(key);
        if (it != midpoint.end()) return it->second;
        int32_t id = (int32_t)out.vertices.size();
        out.vertices.push_back(0.5f * (out.vertices[a] + out.vertices[b]));
        int32_t lo = std::min(a, b);
        out.region.push_back(out.region[lo]);
        if (aux) aux->push_back((*aux)[lo]);
        midpoint.emplace(key, id);
        return id;
    };

    bool changed = true;
    while (changed) {
        changed = false;
        std::vector<std::array<int32_t, 3>> next;
        next.reserve(out.faces.size());
        for (const auto& f : out.faces) {
            if (needs_split(out, f, edge_thresh, area_thresh)) {
                int32_t m01 = midpoint_of(f[0], f[1]);
                int32_t m12 = midpoint_of(f[1], f[2]);
                int32_t m20 = midpoint_of(f[2], f[0]);
                next.push_back({f[0], m01, m20});
                next.push_back({f[1], m12, m01});
                next.push_back({f[2], m20, m12});
                next.push_back({m01, m12, m20});
                changed = true;
            } else {
                next.push_back(f);
            }
        }
        out.faces = std::move(next);
    }
    return out;
}

NormalResult vertex_normals(const TriMesh& mesh) {
    mesh.validate();
    NormalResult res;
    res.normals.assign(mesh.vertices.size(), Vec3::Zero());
    for (const auto& f : mesh.faces) {
        Vec3 e1 = mesh.vertices[f[1]] - mesh.vertices[f[0]];
        Vec3 e2 = mesh.vertices[f[2]] - mesh.vertices[f[0]];
        Vec3 n = e1.cross(e2); // magnitude = 2 * area, area weighting for free
        for (int i = 0; i < 3; ++i) res.normals[f[i]] += n;
    }
    for (auto& n : res.normals) {
        float len = n.norm();
        if (len < 1e-12f) {
            n = Vec3(0.f, 0.f, 1.f);
            res.fallback_count++;
        } else {
            n /= len;
        }
    }
    return res;
}

void save_ply(const TriMesh& mesh, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    f << "ply\nformat ascii 1.0\n";
    f << "element vertex " << mesh.vertices.size() << "\n";
    f << "property float x\nproperty float y\nproperty float z\n";
    f << "property int region\n";
    f << "element face " << mesh.faces.size() << "\n";
    f << "property list uchar int vertex_indices\n";
    f << "end_header\n";
    for (size_t i = 0; i < mesh.vertices.size(); ++i) {
        const auto& v = mesh.vertices[i];
        f << v.x() << " " << v.y() << " " << v.z() << " " << (int)mesh.region[i] << "\n";
    }
    for (const auto& fc : mesh.faces)
        f << "3 " << fc[0] << " " << fc[1] << " " << fc[2] << "\n";
    if (!f) throw std::runtime_error("write failure on " + path);
}

TriMesh load_ply(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::string line;
    int64_t nv = -1, nf = -1;
    bool header_done = false;
    while (std::getline(f, line)) {
        std::istringstream ss(line);
        std::string tok;
        ss >> tok;
        if (tok == "element") {
            std::string what;
            int64_t count;
            ss >> what >> count;
            if (what == "vertex") nv = count;
            else if (what == "face") nf = count;
        } else if (tok == "end_header") {
            header_done = true;
            break;
        }
    }
    if (!header_done || nv < 0 || nf < 0) throw std::runtime_error("bad PLY header in " + path);
    TriMesh mesh;
    mesh.vertices.resize(nv);
    mesh.region.resize(nv);
    for (int64_t i = 0; i < nv; ++i) {
        float x, y, z;
        int r;
        f >> x >> y >> z >> r;
        mesh.vertices[i] = Vec3(x, y, z);
        mesh.region[i] = (Region)r;
    }
    mesh.faces.resize(nf);
    for (int64_t i = 0; i < nf; ++i) {
        int cnt;
        f >> cnt;
        if (cnt != 3) throw std::runtime_error("non-triangle face in " + path);
        f >> mesh.faces[i][0] >> mesh.faces[i][1] >> mesh.faces[i][2];
    }
    if (!f) throw std::runtime_error("truncated PLY " + path);
    mesh.validate();
    return mesh;
}

} // namespace sg::geo

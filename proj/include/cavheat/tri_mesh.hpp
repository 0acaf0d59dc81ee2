#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vec3.hpp"

namespace cavheat {

/// Closed triangulated surface with per-panel centroid, area and outward
/// normal.  finalize() derives the per-panel data and must be called after
/// any change to vertices/triangles.
struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;

    // derived per panel
    std::vector<Vec3> centroids;
    std::vector<double> areas;
    std::vector<Vec3> normals;

    int panel_count() const { return static_cast<int>(triangles.size()); }

    void finalize() {
        const std::size_t n = triangles.size();
        centroids.resize(n);
        areas.resize(n);
        normals.resize(n);
        for (std::size_t f = 0; f < n; ++f) {
            const Vec3& a = vertices[triangles[f][0]];
            const Vec3& b = vertices[triangles[f][1]];
            const Vec3& c = vertices[triangles[f][2]];
            const Vec3 cr = (b - a).cross(c - a);
            const double nrm = cr.norm();
            if (!(nrm > 0.0)) throw std::runtime_error("degenerate panel");
            centroids[f] = (a + b + c) / 3.0;
            areas[f] = 0.5 * nrm;
            normals[f] = cr / nrm;
        }
    }

    double total_area() const {
        double s = 0.0;
        for (double a : areas) s += a;
        return s;
    }

    /// Signed volume by the divergence theorem; positive for outward winding.
    double signed_volume() const {
        double v = 0.0;
        for (const auto& t : triangles) {
            const Vec3& a = vertices[t[0]];
            const Vec3& b = vertices[t[1]];
            const Vec3& c = vertices[t[2]];
            v += a.dot(b.cross(c)) / 6.0;
        }
        return v;
    }

    double diameter() const {
        double d2 = 0.0;
        for (std::size_t i = 0; i < vertices.size(); ++i)
            for (std::size_t j = i + 1; j < vertices.size(); ++j)
                d2 = std::max(d2, (vertices[i] - vertices[j]).norm2());
        return std::sqrt(d2);
    }

    /// Max distance of the surface from the origin.
    double circumradius() const {
        double r2 = 0.0;
        for (const auto& v : vertices) r2 = std::max(r2, v.norm2());
        return std::sqrt(r2);
    }

    int edge_count() const {
        std::map<std::pair<int, int>, int> edges;
        for (const auto& t : triangles)
            for (int e = 0; e < 3; ++e) {
                int u = t[e], v = t[(e + 1) % 3];
                edges[{std::min(u, v), std::max(u, v)}]++;
            }
        return static_cast<int>(edges.size());
    }

    /// Every edge shared by exactly two triangles.
    bool is_closed() const {
        std::map<std::pair<int, int>, int> edges;
        for (const auto& t : triangles)
            for (int e = 0; e < 3; ++e) {
                int u = t[e], v = t[(e + 1) % 3];
                edges[{std::min(u, v), std::max(u, v)}]++;
            }
        for (const auto& [k, cnt] : edges)
            if (cnt != 2) return false;
        return true;
    }
};

namespace detail {

// Propagate a consistent winding over the (closed) surface, then flip
// globally if the signed volume comes out negative.
inline void orient_outward(TriMesh& mesh) {
    const int nf = mesh.panel_count();
    if (nf == 0) return;
    std::map<std::pair<int, int>, std::vector<int>> edge_faces;
    for (int f = 0; f < nf; ++f)
        for (int e = 0; e < 3; ++e) {
            int u = mesh.triangles[f][e], v = mesh.triangles[f][(e + 1) % 3];
            edge_faces[{std::min(u, v), std::max(u, v)}].push_back(f);
        }
    std::vector<int8_t> visited(nf, 0);
    for (int seed = 0; seed < nf; ++seed) {
        if (visited[seed]) continue;
        visited[seed] = 1;
        std::queue<int> q;
        q.push(seed);
        while (!q.empty()) {
            const int f = q.front();
            q.pop();
            for (int e = 0; e < 3; ++e) {
                const int u = mesh.triangles[f][e];
                const int v = mesh.triangles[f][(e + 1) % 3];
                for (int g : edge_faces[{std::min(u, v), std::max(u, v)}]) {
                    if (g == f || visited[g]) continue;
                    // neighbor must traverse the shared edge in the opposite
                    // direction; flip it otherwise
                    bool same_direction = false;
                    for (int e2 = 0; e2 < 3; ++e2) {
                        if (mesh.triangles[g][e2] == u &&
                            mesh.triangles[g][(e2 + 1) % 3] == v)
                            same_direction = true;
                    }
                    if (same_direction)
                        std::swap(mesh.triangles[g][1], mesh.triangles[g][2]);
                    visited[g] = 1;
                    q.push(g);
                }
            }
        }
    }
    if (mesh.signed_volume() < 0.0)
        for (auto& t : mesh.triangles) std::swap(t[1], t[2]);
}

inline TriMesh icosahedron() {
    const double p = (1.0 + std::sqrt(5.0)) / 2.0;
    TriMesh m;
    m.vertices = {{-1, p, 0}, {1, p, 0},   {-1, -p, 0}, {1, -p, 0},
                  {0, -1, p}, {0, 1, p},   {0, -1, -p}, {0, 1, -p},
                  {p, 0, -1}, {p, 0, 1},   {-p, 0, -1}, {-p, 0, 1}};
    for (auto& v : m.vertices) v = v.normalized();
    m.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                   {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                   {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                   {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    return m;
}

inline TriMesh subdivide(const TriMesh& in, bool project_to_sphere) {
    TriMesh out;
    out.vertices = in.vertices;
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int i, int j) {
        const auto key = std::make_pair(std::min(i, j), std::max(i, j));
        auto it = midpoint.find(key);
        if (it != midpoint.end()) return it->second;
        Vec3 m = (out.vertices[i] + out.vertices[j]) * 0.5;
        if (project_to_sphere) m = m.normalized();
        out.vertices.push_back(m);
        const int idx = static_cast<int>(out.vertices.size()) - 1;
        midpoint.emplace(key, idx);
        return idx;
    };
    for (const auto& t : in.triangles) {
        const int a = mid(t[0], t[1]);
        const int b = mid(t[1], t[2]);
        const int c = mid(t[2], t[0]);
        out.triangles.push_back({t[0], a, c});
        out.triangles.push_back({a, t[1], b});
        out.triangles.push_back({c, b, t[2]});
        out.triangles.push_back({a, b, c});
    }
    return out;
}

}  // namespace detail

/// Subdivided icosahedron projected to the unit sphere: 20 * 4^refinement
/// panels, outward-oriented.
inline TriMesh make_icosphere(int refinement) {
    if (refinement < 0 || refinement > 7)
        throw std::invalid_argument("refinement out of range [0, 7]");
    TriMesh m = detail::icosahedron();
    for (int r = 0; r < refinement; ++r) m = detail::subdivide(m, true);
    detail::orient_outward(m);
    m.finalize();
    return m;
}

/// Reference cavity shape: unit sphere, ellipsoid with given semi-axes, or
/// an imported closed surface.  All variants contain the origin.
struct ReferenceShape {
    enum class Kind { unit_sphere, ellipsoid, imported_mesh };

    Kind kind = Kind::unit_sphere;
    Vec3 semi_axes{1.0, 1.0, 1.0};
    std::shared_ptr<const TriMesh> imported;

    static ReferenceShape unit_sphere() { return {}; }
    static ReferenceShape ellipsoid(const Vec3& semi) {
        ReferenceShape s;
        s.kind = Kind::ellipsoid;
        s.semi_axes = semi;
        return s;
    }
    static ReferenceShape imported_mesh(TriMesh mesh) {
        ReferenceShape s;
        s.kind = Kind::imported_mesh;
        s.imported = std::make_shared<TriMesh>(std::move(mesh));
        return s;
    }

    double diameter() const {
        switch (kind) {
            case Kind::unit_sphere: return 2.0;
            case Kind::ellipsoid:
                return 2.0 * std::max({semi_axes.x, semi_axes.y, semi_axes.z});
            case Kind::imported_mesh: return imported->diameter();
        }
        return 0.0;
    }

    /// Max distance of the surface from the origin (conservative radius for
    /// gap computations).
    double circumradius() const {
        switch (kind) {
            case Kind::unit_sphere: return 1.0;
            case Kind::ellipsoid:
                return std::max({semi_axes.x, semi_axes.y, semi_axes.z});
            case Kind::imported_mesh: return imported->circumradius();
        }
        return 0.0;
    }
};

/// Triangulate a reference shape.  Spheres/ellipsoids get the subdivided
/// icosahedron; imported meshes get flat midpoint subdivision.
inline TriMesh triangulate(const ReferenceShape& shape, int refinement) {
    if (refinement < 0 || refinement > 7)
        throw std::invalid_argument("refinement out of range [0, 7]");
    TriMesh m;
    switch (shape.kind) {
        case ReferenceShape::Kind::unit_sphere:
            m = make_icosphere(refinement);
            return m;
        case ReferenceShape::Kind::ellipsoid:
            m = make_icosphere(refinement);
            for (auto& v : m.vertices) {
                v.x *= shape.semi_axes.x;
                v.y *= shape.semi_axes.y;
                v.z *= shape.semi_axes.z;
            }
            detail::orient_outward(m);
            m.finalize();
            return m;
        case ReferenceShape::Kind::imported_mesh:
            m = *shape.imported;
            if (!m.is_closed()) throw std::runtime_error("open surface");
            for (int r = 0; r < refinement; ++r) m = detail::subdivide(m, false);
            detail::orient_outward(m);
            m.finalize();
            return m;
    }
    throw std::logic_error("unreachable");
}

/// Copy of a mesh scaled by eps and translated to center (D = eps*B + z).
inline TriMesh scale_translate(const TriMesh& base, double eps, const Vec3& center) {
    TriMesh m = base;
    for (auto& v : m.vertices) v = v * eps + center;
    m.finalize();
    return m;
}

/// ASCII OFF import.  Polygonal faces are fan-split into triangles; the
/// surface must be closed and is re-oriented outward by signed volume.
inline TriMesh load_off(std::istream& in) {
    std::string token;
    if (!(in >> token) || token != "OFF") throw std::runtime_error("not an OFF file");
    std::size_t nv = 0, nf = 0, ne = 0;
    if (!(in >> nv >> nf >> ne)) throw std::runtime_error("bad OFF header");
    TriMesh m;
    m.vertices.resize(nv);
    for (std::size_t i = 0; i < nv; ++i)
        if (!(in >> m.vertices[i].x >> m.vertices[i].y >> m.vertices[i].z))
            throw std::runtime_error("bad OFF vertex");
    for (std::size_t f = 0; f < nf; ++f) {
        int k;
        if (!(in >> k) || k < 3) throw std::runtime_error("bad OFF face");
        std::vector<int> idx(k);
        for (int j = 0; j < k; ++j)
            if (!(in >> idx[j])) throw std::runtime_error("bad OFF face");
        for (int j = 1; j + 1 < k; ++j)
            m.triangles.push_back({idx[0], idx[j], idx[j + 1]});
    }
    if (!m.is_closed()) throw std::runtime_error("open surface");
    detail::orient_outward(m);
    m.finalize();
    return m;
}

inline TriMesh load_off_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open mesh file: " + path);
    return load_off(in);
}

inline void save_off(std::ostream& out, const TriMesh& m) {
    out << "OFF\n" << m.vertices.size() << " " << m.triangles.size() << " 0\n";
    out.precision(17);
    for (const auto& v : m.vertices) out << v.x << " " << v.y << " " << v.z << "\n";
    for (const auto& t : m.triangles)
        out << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
}

}  // namespace cavheat

#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace vmspod {

enum class BoundaryTag : std::uint8_t {
    Wall = 0,
    Inflow = 1,
    Outflow = 2,
    ExactDirichlet = 3,
};

struct Rect {
    double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;
    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
};

struct BoundaryEdge {
    int a, b;  // vertex indices
    BoundaryTag tag;
};

/// Structured triangulation of a rectangle: each cell split along the
/// bottom-left to top-right diagonal.
struct Mesh {
    std::vector<std::array<double, 2>> nodes;
    std::vector<std::array<int, 3>> triangles;  // counter-clockwise
    std::vector<BoundaryEdge> boundary_edges;
    int nx = 0, ny = 0;
    Rect bounds;

    double signed_area(int t) const {
        const auto& tri = triangles[t];
        const auto& p0 = nodes[tri[0]];
        const auto& p1 = nodes[tri[1]];
        const auto& p2 = nodes[tri[2]];
        return 0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]));
    }
};

/// Builds the fixed-diagonal right-triangle mesh with nx*ny cells.
/// All boundary edges are tagged ExactDirichlet unless retagged by the caller.
inline Mesh build_rect_mesh(int nx, int ny, const Rect& bounds = Rect{}) {
    if (nx < 2 || ny < 2) throw std::invalid_argument("build_rect_mesh: nx, ny must be >= 2");
    if (bounds.width() <= 0.0 || bounds.height() <= 0.0)
        throw std::invalid_argument("build_rect_mesh: degenerate rectangle");

    Mesh mesh;
    mesh.nx = nx;
    mesh.ny = ny;
    mesh.bounds = bounds;
    const double hx = bounds.width() / nx;
    const double hy = bounds.height() / ny;

    mesh.nodes.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            mesh.nodes.push_back({bounds.x0 + i * hx, bounds.y0 + j * hy});

    auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };

    mesh.triangles.reserve(static_cast<std::size_t>(2) * nx * ny);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int v00 = vid(i, j), v10 = vid(i + 1, j);
            const int v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
            mesh.triangles.push_back({v00, v10, v11});
            mesh.triangles.push_back({v00, v11, v01});
        }
    }

    for (int i = 0; i < nx; ++i) {
        mesh.boundary_edges.push_back({vid(i, 0), vid(i + 1, 0), BoundaryTag::ExactDirichlet});
        mesh.boundary_edges.push_back({vid(i, ny), vid(i + 1, ny), BoundaryTag::ExactDirichlet});
    }
    for (int j = 0; j < ny; ++j) {
        mesh.boundary_edges.push_back({vid(0, j), vid(0, j + 1), BoundaryTag::ExactDirichlet});
        mesh.boundary_edges.push_back({vid(nx, j), vid(nx, j + 1), BoundaryTag::ExactDirichlet});
    }
    return mesh;
}

}  // namespace vmspod

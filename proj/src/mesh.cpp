#include "tdvar/mesh.hpp"

#include "json.hpp"

namespace tdvar {

std::string to_string(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::Inflow:
      return "inflow";
    case BoundaryTag::Dirichlet:
      return "dirichlet";
    case BoundaryTag::Neumann:
      return "neumann";
  }
  return "unknown";
}

double Mesh::triangle_area(int t) const {
  const auto& tri = triangles[t];
  const Point e1 = vertices[tri[1]] - vertices[tri[0]];
  const Point e2 = vertices[tri[2]] - vertices[tri[0]];
  return 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
}

bool Mesh::on_dirichlet(int vertex) const { return vertex / (nx + 1) == ny; }

Mesh build_mesh(int nx, int ny) {
  if (nx < 4 || ny < 4 || nx % 4 != 0 || ny % 4 != 0) {
    throw std::invalid_argument("build_mesh: nx and ny must be >= 4 and divisible by 4 (got " +
                                std::to_string(nx) + ", " + std::to_string(ny) + ")");
  }
  Mesh mesh;
  mesh.nx = nx;
  mesh.ny = ny;
  mesh.vertices.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      mesh.vertices.emplace_back(static_cast<double>(i) / nx, static_cast<double>(j) / ny);
    }
  }

  mesh.triangles.reserve(static_cast<std::size_t>(2 * nx * ny));
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int a = mesh.vertex_index(i, j);
      const int b = mesh.vertex_index(i + 1, j);
      const int c = mesh.vertex_index(i + 1, j + 1);
      const int d = mesh.vertex_index(i, j + 1);
      if ((i + j) % 2 == 0) {
        mesh.triangles.push_back({a, b, c});
        mesh.triangles.push_back({a, c, d});
      } else {
        mesh.triangles.push_back({a, b, d});
        mesh.triangles.push_back({b, c, d});
      }
    }
  }

  mesh.subdomain.reserve(mesh.triangles.size());
  for (const auto& tri : mesh.triangles) {
    const Point c = (mesh.vertices[tri[0]] + mesh.vertices[tri[1]] + mesh.vertices[tri[2]]) / 3.0;
    const bool inner = c.x() > 0.25 && c.x() < 0.75 && c.y() > 0.25 && c.y() < 0.75;
    mesh.subdomain.push_back(inner ? 1 : (c.y() > 0.5 ? 2 : 0));
  }

  for (int i = 0; i < nx; ++i) {
    mesh.boundary_edges.push_back({mesh.vertex_index(i, 0), mesh.vertex_index(i + 1, 0), BoundaryTag::Inflow});
  }
  for (int j = 0; j < ny; ++j) {
    mesh.boundary_edges.push_back({mesh.vertex_index(nx, j), mesh.vertex_index(nx, j + 1), BoundaryTag::Neumann});
  }
  for (int i = nx; i > 0; --i) {
    mesh.boundary_edges.push_back({mesh.vertex_index(i, ny), mesh.vertex_index(i - 1, ny), BoundaryTag::Dirichlet});
  }
  for (int j = ny; j > 0; --j) {
    mesh.boundary_edges.push_back({mesh.vertex_index(0, j), mesh.vertex_index(0, j - 1), BoundaryTag::Neumann});
  }
  return mesh;
}

std::string mesh_to_json(const Mesh& mesh) {
  nlohmann::json j;
  j["nx"] = mesh.nx;
  j["ny"] = mesh.ny;
  auto& verts = j["vertices"] = nlohmann::json::array();
  for (const auto& v : mesh.vertices) verts.push_back({v.x(), v.y()});
  auto& tris = j["triangles"] = nlohmann::json::array();
  for (const auto& t : mesh.triangles) tris.push_back({t[0], t[1], t[2]});
  j["subdomain_ids"] = mesh.subdomain;
  auto& tags = j["boundary_tags"] = nlohmann::json::array();
  for (const auto& e : mesh.boundary_edges) {
    tags.push_back({{"edge", {e.v0, e.v1}}, {"tag", to_string(e.tag)}});
  }
  return j.dump(1);
}

}  // namespace tdvar

#pragma once

#include "tdvar/types.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace tdvar {

enum class BoundaryTag : std::uint8_t { Inflow, Dirichlet, Neumann };

std::string to_string(BoundaryTag tag);

struct BoundaryEdge {
  int v0;
  int v1;
  BoundaryTag tag;
};

/// Structured triangulation of the unit square.
///
/// Cell (i, j) is split along the diagonal that alternates with the parity of
/// i + j, which makes the mesh symmetric under x -> 1 - x and nested under
/// uniform 2x refinement. Subdomains: 1 = (1/4,3/4)^2, 2 = rest of the upper
/// half, 0 = rest of the lower half.
struct Mesh {
  int nx = 0;
  int ny = 0;
  std::vector<Point> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<int> subdomain;
  std::vector<BoundaryEdge> boundary_edges;

  int vertex_index(int i, int j) const { return j * (nx + 1) + i; }
  double triangle_area(int t) const;
  bool on_dirichlet(int vertex) const;
};

Mesh build_mesh(int nx, int ny);

/// Mesh as JSON: {vertices, triangles, subdomain_ids, boundary_tags}.
std::string mesh_to_json(const Mesh& mesh);

}  // namespace tdvar

#pragma once

#include <Eigen/Core>

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace maxsmooth {

using Point2 = Eigen::Vector2d;

/// Triangulation over the study region, in projected kilometres.
struct Mesh {
  std::vector<Point2> nodes;
  std::vector<std::array<int, 3>> triangles;  // counter-clockwise node indices
  std::vector<bool> boundary;                  // true for nodes of the outer ring
  double diameter = 0.0;                       // diameter of the site cloud

  [[nodiscard]] std::size_t n_nodes() const { return nodes.size(); }
  [[nodiscard]] double area() const;
};

struct MeshOptions {
  double buffer_fraction = 0.2;     // outer ring offset, relative to the diameter
  double interior_divisor = 15.0;   // interior spacing = diameter / interior_divisor
  double buffer_divisor = 6.0;      // buffer spacing = diameter / buffer_divisor
  bool refine_interior = true;      // add lattice points between the sites
};

/// Delaunay triangulation of the sites, an interior lattice at the interior
/// spacing, and two rings offset from the convex hull at half and full buffer
/// width. Throws InputError for fewer than 3 sites, duplicates, or collinear input.
Mesh build_mesh(std::span<const Point2> sites, const MeshOptions& opts = {});

/// Plain Delaunay triangulation of a point set (Bowyer-Watson).
std::vector<std::array<int, 3>> delaunay(std::span<const Point2> points);

struct Location {
  int triangle = -1;
  std::array<int, 3> nodes{};
  std::array<double, 3> weights{};  // barycentric, nonnegative, summing to 1
};

/// Triangle containing `p`, or nullopt outside the mesh.
std::optional<Location> locate(const Mesh& mesh, const Point2& p);

/// Text listing: "node <i> <x> <y> <boundary>" and "tri <i> <a> <b> <c>" records.
void write_mesh(std::ostream& os, const Mesh& mesh);
Mesh read_mesh(std::istream& is);

}  // namespace maxsmooth

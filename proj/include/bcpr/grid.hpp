#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bcpr {

using Index = std::int32_t;
using Vec3 = Eigen::Vector3d;

inline constexpr Index kNoCell = -1;

/// Local face order inside a hexahedron: -x, +x, -y, +y, -z, +z.
/// Matches the reference-cube faces xi=0, xi=1, eta=0, eta=1, zeta=0, zeta=1.
inline constexpr int kFacesPerCell = 6;
inline constexpr int kNodesPerCell = 8;

/// Local face across which the walk continues in the same direction.
constexpr int opposite_face(int local) { return local ^ 1; }

class GeometryError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Hexahedral mesh with structured logical (i,j,k) numbering.
///
/// Cell nodes use tensor ordering: local node a = ix + 2*iy + 4*iz.
/// Depth axis z points downward. Faces carry a global orientation along
/// the positive logical axis; cell_face_sign is +1 when that orientation
/// is outward for the cell.
struct HexMesh {
  Index nx = 0, ny = 0, nz = 0;

  std::vector<Vec3> nodes;
  std::vector<std::array<Index, kNodesPerCell>> cells;
  std::vector<std::array<Index, 4>> faces;
  std::vector<std::array<Index, kFacesPerCell>> cell_faces;
  std::vector<std::array<int, kFacesPerCell>> cell_face_sign;
  std::vector<std::array<Index, 2>> face_cells;  // [1] == kNoCell on the boundary
  std::vector<bool> boundary;

  std::vector<Vec3> cell_centroid;
  std::vector<double> cell_volume;
  std::vector<Vec3> face_centroid;
  std::vector<double> face_area;

  Index num_cells() const { return static_cast<Index>(cells.size()); }
  Index num_faces() const { return static_cast<Index>(faces.size()); }
  Index num_nodes() const { return static_cast<Index>(nodes.size()); }

  Index cell_index(Index i, Index j, Index k) const { return i + nx * (j + ny * k); }
  std::array<Index, 3> cell_ijk(Index cell) const {
    return {cell % nx, (cell / nx) % ny, cell / (nx * ny)};
  }

  /// Depth of the cell centroid.
  double cell_depth(Index cell) const { return cell_centroid[cell].z(); }

  /// Position of `face` in the local face list of `cell`, or -1.
  int local_face(Index cell, Index face) const;

  /// Cell on the other side of local face `local` of `cell`, or kNoCell.
  Index neighbor(Index cell, int local) const;

  /// Sum over the cell faces of outward vector areas (zero for a closed cell).
  Vec3 outward_area_sum(Index cell) const;

  /// Vector area of a (possibly non-planar) bilinear face along its global orientation.
  Vec3 face_vector_area(Index face) const;

  /// Recomputes all derived geometry and validates it.
  void update_geometry();
};

/// Number of faces of an nx-by-ny-by-nz Cartesian block.
constexpr Index cartesian_face_count(Index nx, Index ny, Index nz) {
  return nx * ny * (nz + 1) + nx * (ny + 1) * nz + (nx + 1) * ny * nz;
}

HexMesh build_cartesian(Index nx, Index ny, Index nz, double dx, double dy, double dz,
                        const Vec3& origin = Vec3::Zero());

/// Lifts node depths by a cosine bell centred at `apex` (x,y): the uplift is
/// `amplitude` at the apex and vanishes beyond `radius`. The same shift is
/// applied to every layer, so topology and layer thickness are preserved.
HexMesh deform_dome(const HexMesh& mesh, double amplitude, double radius,
                    const Eigen::Vector2d& apex);

/// Shifts node depths by f(x) + g(y) with f, g piecewise linear over the grid
/// lines. Each cell stays a parallelepiped while the mesh is non-orthogonal.
HexMesh deform_piecewise_affine(const HexMesh& mesh, const std::vector<double>& fx,
                                const std::vector<double>& gy);

struct CellGeometry {
  Vec3 centroid;
  double volume;
  double depth;
};

/// Volume and centroid from a six-tetrahedra split along the 0-7 diagonal.
CellGeometry cell_geometry(const HexMesh& mesh, Index cell);

/// Same computation on raw corner coordinates (tensor node order).
CellGeometry hex_geometry(const std::array<Vec3, kNodesPerCell>& x);

std::array<Vec3, kNodesPerCell> cell_nodes(const HexMesh& mesh, Index cell);

double tet_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);

/// Cell extents measured between opposite face centroids (dx, dy, dz).
Vec3 cell_extent(const HexMesh& mesh, Index cell);

}  // namespace bcpr

#include "bcpr/grid.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace bcpr {

namespace {

// Local node indices of each local face, ordered so that the right-hand
// rule gives the positive logical axis.
constexpr std::array<std::array<int, 4>, kFacesPerCell> kFaceNodes = {{
    {0, 2, 6, 4},  // -x : (y,z) cycle
    {1, 3, 7, 5},  // +x
    {0, 4, 5, 1},  // -y : (z,x) cycle
    {2, 6, 7, 3},  // +y
    {0, 1, 3, 2},  // -z : (x,y) cycle
    {4, 5, 7, 6},  // +z
}};

constexpr std::array<std::array<int, 4>, 6> kSixTets = {{
    {0, 1, 3, 7}, {0, 3, 2, 7}, {0, 2, 6, 7}, {0, 6, 4, 7}, {0, 4, 5, 7}, {0, 5, 1, 7},
}};

void bilinear_face_geometry(const std::array<Vec3, 4>& x, double& area, Vec3& centroid) {
  // x is a cyclic quad; parametrize as x(u,v) with corners x0,x1,x2,x3 at
  // (0,0),(1,0),(1,1),(0,1).
  const double g = 0.5 / std::sqrt(3.0);
  const std::array<double, 2> pts = {0.5 - g, 0.5 + g};
  area = 0.0;
  centroid.setZero();
  for (double u : pts) {
    for (double v : pts) {
      const Vec3 pos = (1 - u) * (1 - v) * x[0] + u * (1 - v) * x[1] + u * v * x[2] +
                       (1 - u) * v * x[3];
      const Vec3 xu = (1 - v) * (x[1] - x[0]) + v * (x[2] - x[3]);
      const Vec3 xv = (1 - u) * (x[3] - x[0]) + u * (x[2] - x[1]);
      const double w = 0.25 * xu.cross(xv).norm();
      area += w;
      centroid += w * pos;
    }
  }
  centroid /= area;
}

}  // namespace

double tet_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return (b - a).dot((c - a).cross(d - a)) / 6.0;
}

std::array<Vec3, kNodesPerCell> cell_nodes(const HexMesh& mesh, Index cell) {
  std::array<Vec3, kNodesPerCell> x;
  for (int a = 0; a < kNodesPerCell; ++a) x[a] = mesh.nodes[mesh.cells[cell][a]];
  return x;
}

CellGeometry hex_geometry(const std::array<Vec3, kNodesPerCell>& x) {
  CellGeometry g{Vec3::Zero(), 0.0, 0.0};
  for (const auto& t : kSixTets) {
    const double v = tet_volume(x[t[0]], x[t[1]], x[t[2]], x[t[3]]);
    g.volume += v;
    g.centroid += v * 0.25 * (x[t[0]] + x[t[1]] + x[t[2]] + x[t[3]]);
  }
  if (!(g.volume > 0.0)) return g;
  g.centroid /= g.volume;
  g.depth = g.centroid.z();
  return g;
}

CellGeometry cell_geometry(const HexMesh& mesh, Index cell) {
  if (cell < 0 || cell >= mesh.num_cells()) throw std::invalid_argument("cell index out of range");
  CellGeometry g = hex_geometry(cell_nodes(mesh, cell));
  if (!(g.volume > 0.0)) {
    std::ostringstream msg;
    msg << "cell " << cell << " has non-positive volume " << g.volume;
    throw GeometryError(msg.str());
  }
  return g;
}

int HexMesh::local_face(Index cell, Index face) const {
  for (int l = 0; l < kFacesPerCell; ++l)
    if (cell_faces[cell][l] == face) return l;
  return -1;
}

Index HexMesh::neighbor(Index cell, int local) const {
  const auto& fc = face_cells[cell_faces[cell][local]];
  if (fc[1] == kNoCell) return kNoCell;
  return fc[0] == cell ? fc[1] : fc[0];
}

Vec3 HexMesh::face_vector_area(Index face) const {
  const auto& f = faces[face];
  return 0.5 * (nodes[f[2]] - nodes[f[0]]).cross(nodes[f[3]] - nodes[f[1]]);
}

Vec3 HexMesh::outward_area_sum(Index cell) const {
  Vec3 s = Vec3::Zero();
  for (int l = 0; l < kFacesPerCell; ++l)
    s += cell_face_sign[cell][l] * face_vector_area(cell_faces[cell][l]);
  return s;
}

void HexMesh::update_geometry() {
  const Index nc = num_cells();
  cell_centroid.resize(nc);
  cell_volume.resize(nc);
  for (Index c = 0; c < nc; ++c) {
    const CellGeometry g = cell_geometry(*this, c);
    cell_centroid[c] = g.centroid;
    cell_volume[c] = g.volume;
  }
  const Index nf = num_faces();
  face_centroid.resize(nf);
  face_area.resize(nf);
  for (Index f = 0; f < nf; ++f) {
    std::array<Vec3, 4> x;
    for (int a = 0; a < 4; ++a) x[a] = nodes[faces[f][a]];
    bilinear_face_geometry(x, face_area[f], face_centroid[f]);
    if (!(face_area[f] > 0.0)) {
      std::ostringstream msg;
      msg << "face " << f << " has zero area";
      throw GeometryError(msg.str());
    }
  }
}

HexMesh build_cartesian(Index nx, Index ny, Index nz, double dx, double dy, double dz,
                        const Vec3& origin) {
  if (nx < 1 || ny < 1 || nz < 1) throw std::invalid_argument("cell counts must be >= 1");
  if (!(dx > 0.0 && dy > 0.0 && dz > 0.0))
    throw std::invalid_argument("cell sizes must be positive");

  HexMesh m;
  m.nx = nx;
  m.ny = ny;
  m.nz = nz;
  const Index px = nx + 1, py = ny + 1, pz = nz + 1;
  auto node_id = [&](Index i, Index j, Index k) { return i + px * (j + py * k); };
  m.nodes.reserve(static_cast<std::size_t>(px) * py * pz);
  for (Index k = 0; k < pz; ++k)
    for (Index j = 0; j < py; ++j)
      for (Index i = 0; i < px; ++i) m.nodes.emplace_back(origin + Vec3(i * dx, j * dy, k * dz));

  const Index nxf = px * ny * nz;
  const Index nyf = nx * py * nz;
  const Index nzf = nx * ny * pz;
  auto xface = [&](Index i, Index j, Index k) { return i + px * (j + ny * k); };
  auto yface = [&](Index i, Index j, Index k) { return nxf + i + nx * (j + py * k); };
  auto zface = [&](Index i, Index j, Index k) { return nxf + nyf + i + nx * (j + ny * k); };

  const Index nc = nx * ny * nz;
  m.cells.resize(nc);
  m.cell_faces.resize(nc);
  m.cell_face_sign.resize(nc);
  for (Index k = 0; k < nz; ++k) {
    for (Index j = 0; j < ny; ++j) {
      for (Index i = 0; i < nx; ++i) {
        const Index c = m.cell_index(i, j, k);
        for (int a = 0; a < kNodesPerCell; ++a)
          m.cells[c][a] = node_id(i + (a & 1), j + ((a >> 1) & 1), k + ((a >> 2) & 1));
        m.cell_faces[c] = {xface(i, j, k), xface(i + 1, j, k), yface(i, j, k),
                           yface(i, j + 1, k), zface(i, j, k), zface(i, j, k + 1)};
        m.cell_face_sign[c] = {-1, 1, -1, 1, -1, 1};
      }
    }
  }

  const Index nf = nxf + nyf + nzf;
  m.faces.resize(nf);
  m.face_cells.assign(nf, {kNoCell, kNoCell});
  m.boundary.assign(nf, false);
  // Slot 0 holds the cell on the negative side of the face orientation
  // when two cells share the face; a boundary face keeps its only cell in 0.
  std::vector<std::array<Index, 2>> sides(nf, {kNoCell, kNoCell});
  for (Index c = 0; c < nc; ++c) {
    for (int l = 0; l < kFacesPerCell; ++l) {
      const Index f = m.cell_faces[c][l];
      for (int a = 0; a < 4; ++a) m.faces[f][a] = m.cells[c][kFaceNodes[l][a]];
      sides[f][m.cell_face_sign[c][l] > 0 ? 0 : 1] = c;
    }
  }
  for (Index f = 0; f < nf; ++f) {
    if (sides[f][0] != kNoCell && sides[f][1] != kNoCell)
      m.face_cells[f] = sides[f];
    else
      m.face_cells[f] = {sides[f][0] != kNoCell ? sides[f][0] : sides[f][1], kNoCell};
  }
  for (Index f = 0; f < nf; ++f) m.boundary[f] = (m.face_cells[f][1] == kNoCell);

  m.update_geometry();
  return m;
}

HexMesh deform_dome(const HexMesh& mesh, double amplitude, double radius,
                    const Eigen::Vector2d& apex) {
  if (amplitude < 0.0) throw std::invalid_argument("dome amplitude must be >= 0");
  if (!(radius > 0.0)) throw std::invalid_argument("dome radius must be positive");
  HexMesh out = mesh;
  if (amplitude == 0.0) return out;
  for (auto& x : out.nodes) {
    const double r = std::hypot(x.x() - apex.x(), x.y() - apex.y());
    if (r < radius) x.z() -= amplitude * 0.5 * (1.0 + std::cos(std::numbers::pi * r / radius));
  }
  out.update_geometry();
  return out;
}

HexMesh deform_piecewise_affine(const HexMesh& mesh, const std::vector<double>& fx,
                                const std::vector<double>& gy) {
  if (fx.size() != static_cast<std::size_t>(mesh.nx + 1) ||
      gy.size() != static_cast<std::size_t>(mesh.ny + 1))
    throw std::invalid_argument("shift tables must have one entry per grid line");
  HexMesh out = mesh;
  const Index px = mesh.nx + 1, py = mesh.ny + 1;
  for (Index n = 0; n < out.num_nodes(); ++n) {
    const Index i = n % px;
    const Index j = (n / px) % py;
    out.nodes[n].z() += fx[i] + gy[j];
  }
  out.update_geometry();
  return out;
}

Vec3 cell_extent(const HexMesh& mesh, Index cell) {
  const auto& cf = mesh.cell_faces[cell];
  Vec3 e;
  for (int d = 0; d < 3; ++d)
    e[d] = (mesh.face_centroid[cf[2 * d + 1]] - mesh.face_centroid[cf[2 * d]]).norm();
  return e;
}

}  // namespace bcpr

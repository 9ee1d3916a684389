#include "solmplan/scene.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "solmplan/rng.hpp"

namespace solmplan {

using json = nlohmann::json;

double TriangleMesh::total_area() const {
  double area = 0.0;
  for (const auto& t : triangles) {
    const Eigen::Vector3d e1 = vertices[t[1]] - vertices[t[0]];
    const Eigen::Vector3d e2 = vertices[t[2]] - vertices[t[0]];
    area += 0.5 * e1.cross(e2).norm();
  }
  return area;
}

void TriangleMesh::xy_bounds(Eigen::Vector2d& lo, Eigen::Vector2d& hi) const {
  lo = Eigen::Vector2d::Constant(1e300);
  hi = Eigen::Vector2d::Constant(-1e300);
  for (const auto& v : vertices) {
    lo = lo.cwiseMin(v.head<2>());
    hi = hi.cwiseMax(v.head<2>());
  }
}

bool OccupancyGrid2D::world_to_cell(const Eigen::Vector2d& p, int& i, int& j) const {
  i = static_cast<int>(std::floor((p.x() - origin.x()) / resolution));
  j = static_cast<int>(std::floor((p.y() - origin.y()) / resolution));
  return i >= 0 && i < width && j >= 0 && j < height;
}

namespace {

void emit_box(const Eigen::Vector2d& center, double yaw, double sx, double sy, double z0,
              double z1, TriangleMesh& mesh) {
  const double c = std::cos(yaw), s = std::sin(yaw);
  const Eigen::Vector2d ex(c, s), ey(-s, c);
  const int base = static_cast<int>(mesh.vertices.size());
  for (int k = 0; k < 8; ++k) {
    const double dx = (k & 1) ? 0.5 * sx : -0.5 * sx;
    const double dy = (k & 2) ? 0.5 * sy : -0.5 * sy;
    const double z = (k & 4) ? z1 : z0;
    const Eigen::Vector2d p = center + dx * ex + dy * ey;
    mesh.vertices.emplace_back(p.x(), p.y(), z);
  }
  // 5 faces; the bottom rests on the ground and is never observable, and
  // sampling it would contaminate plane fits at the base corner
  static const int faces[5][4] = {
      {4, 5, 7, 6},  // top
      {0, 1, 5, 4},  // -y side
      {2, 6, 7, 3},  // +y side
      {0, 4, 6, 2},  // -x side
      {1, 3, 7, 5},  // +x side
  };
  for (const auto& f : faces) {
    mesh.triangles.push_back({base + f[0], base + f[1], base + f[2]});
    mesh.triangles.push_back({base + f[0], base + f[2], base + f[3]});
  }
  // interior cap inside wide boxes so their whole footprint carries in-band
  // mesh (the obstacle mask is triangle-driven). Inset beyond the k-NN
  // radius; unreachable by rays, so scans never see it.
  const double inset = 0.1;
  if (std::min(sx, sy) >= 4.0 * inset && z1 - z0 >= 0.2) {
    const double cap_z = z0 + std::min(0.5 * (z1 - z0), 0.5);
    const double hx = 0.5 * sx - inset, hy = 0.5 * sy - inset;
    const int cb = static_cast<int>(mesh.vertices.size());
    for (int k = 0; k < 4; ++k) {
      const double dx = (k & 1) ? hx : -hx;
      const double dy = (k & 2) ? hy : -hy;
      const Eigen::Vector2d p = center + dx * ex + dy * ey;
      mesh.vertices.emplace_back(p.x(), p.y(), cap_z);
    }
    mesh.triangles.push_back({cb + 0, cb + 1, cb + 3});
    mesh.triangles.push_back({cb + 0, cb + 3, cb + 2});
  }
}

// Value noise on a lattice of spacing corr_length, bilinear between nodes.
// Lattice lives in patch-local coordinates so the field is independent of
// where the patch sits in the world.
double value_noise(double u, double v, double corr, double amplitude, std::uint64_t seed) {
  const double gu = u / corr, gv = v / corr;
  const int iu = static_cast<int>(std::floor(gu)), iv = static_cast<int>(std::floor(gv));
  const double fu = gu - iu, fv = gv - iv;
  auto node = [&](int a, int b) {
    const std::uint64_t key =
        (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
        static_cast<std::uint32_t>(b);
    const std::uint64_t h = mix64(seed, key);
    return (static_cast<double>(h >> 11) * 0x1.0p-53) * 2.0 - 1.0;
  };
  const double n00 = node(iu, iv), n10 = node(iu + 1, iv);
  const double n01 = node(iu, iv + 1), n11 = node(iu + 1, iv + 1);
  const double nx0 = n00 + fu * (n10 - n00);
  const double nx1 = n01 + fu * (n11 - n01);
  return amplitude * (nx0 + fv * (nx1 - nx0));
}

void emit_heightfield(const Primitive& p, TriangleMesh& mesh) {
  const int g = p.grid;
  const double x0 = p.x - 0.5 * p.sx, y0 = p.y - 0.5 * p.sy;
  const double dx = p.sx / (g - 1), dy = p.sy / (g - 1);
  const int base = static_cast<int>(mesh.vertices.size());
  for (int j = 0; j < g; ++j) {
    for (int i = 0; i < g; ++i) {
      const double u = i * dx, v = j * dy;
      const double z = value_noise(u, v, p.corr_length, p.amplitude, p.seed);
      mesh.vertices.emplace_back(x0 + u, y0 + v, z);
    }
  }
  for (int j = 0; j + 1 < g; ++j) {
    for (int i = 0; i + 1 < g; ++i) {
      const int a = base + j * g + i;
      const int b = a + 1;
      const int c = a + g;
      const int d = c + 1;
      mesh.triangles.push_back({a, b, d});
      mesh.triangles.push_back({a, d, c});
    }
  }
}

void validate_primitive(const Primitive& p) {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0)) throw std::invalid_argument(std::string("primitive dimension must be > 0: ") + what);
  };
  switch (p.kind) {
    case PrimitiveKind::kBox:
    case PrimitiveKind::kWall:
      positive(p.sx, "sx");
      positive(p.sy, "sy");
      positive(p.sz, "sz");
      break;
    case PrimitiveKind::kGroundPlane:
      positive(p.sx, "sx");
      positive(p.sy, "sy");
      break;
    case PrimitiveKind::kHeightfield:
      positive(p.sx, "sx");
      positive(p.sy, "sy");
      positive(p.corr_length, "corr_length");
      if (p.amplitude < 0.0) throw std::invalid_argument("heightfield amplitude must be >= 0");
      if (p.grid < 2) throw std::invalid_argument("heightfield grid must be >= 2");
      break;
  }
}

}  // namespace

TriangleMesh compile_scene(const SceneDescription& desc) {
  if (desc.primitives.empty()) throw std::invalid_argument("scene has no primitives");
  TriangleMesh mesh;
  for (const auto& p : desc.primitives) {
    validate_primitive(p);
    switch (p.kind) {
      case PrimitiveKind::kBox:
        emit_box({p.x, p.y}, p.yaw, p.sx, p.sy, 0.0, p.sz, mesh);
        break;
      case PrimitiveKind::kWall:
        // sx = length along yaw, sy = thickness, sz = height
        emit_box({p.x, p.y}, p.yaw, p.sx, p.sy, 0.0, p.sz, mesh);
        break;
      case PrimitiveKind::kGroundPlane: {
        const double c = std::cos(p.yaw), s = std::sin(p.yaw);
        const Eigen::Vector2d ex(c, s), ey(-s, c);
        const Eigen::Vector2d ctr(p.x, p.y);
        const int base = static_cast<int>(mesh.vertices.size());
        for (int k = 0; k < 4; ++k) {
          const double dx = (k & 1) ? 0.5 * p.sx : -0.5 * p.sx;
          const double dy = (k & 2) ? 0.5 * p.sy : -0.5 * p.sy;
          const Eigen::Vector2d q = ctr + dx * ex + dy * ey;
          mesh.vertices.emplace_back(q.x(), q.y(), 0.0);
        }
        mesh.triangles.push_back({base + 0, base + 1, base + 3});
        mesh.triangles.push_back({base + 0, base + 3, base + 2});
        break;
      }
      case PrimitiveKind::kHeightfield:
        emit_heightfield(p, mesh);
        break;
    }
  }
  return mesh;
}

MapCloud sample_map_cloud(const TriangleMesh& mesh, double density, std::uint64_t seed) {
  if (!(density > 0.0)) throw std::invalid_argument("density must be > 0");
  const double area = mesh.total_area();
  if (!(area > 0.0)) throw std::invalid_argument("mesh has zero area");

  std::vector<double> cum(mesh.triangles.size());
  double acc = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Eigen::Vector3d e1 = mesh.vertices[tri[1]] - mesh.vertices[tri[0]];
    const Eigen::Vector3d e2 = mesh.vertices[tri[2]] - mesh.vertices[tri[0]];
    acc += 0.5 * e1.cross(e2).norm();
    cum[t] = acc;
  }

  const auto count = static_cast<std::size_t>(std::llround(density * area));
  std::vector<Eigen::Vector3d> pts;
  pts.reserve(count);
  Rng rng(mix64(seed, 0x6d61702dULL));
  for (std::size_t i = 0; i < count; ++i) {
    const double r = rng.uniform() * acc;
    const auto it = std::lower_bound(cum.begin(), cum.end(), r);
    const std::size_t t = std::min<std::size_t>(it - cum.begin(), cum.size() - 1);
    const auto& tri = mesh.triangles[t];
    double u = rng.uniform(), v = rng.uniform();
    if (u + v > 1.0) {
      u = 1.0 - u;
      v = 1.0 - v;
    }
    const Eigen::Vector3d& a = mesh.vertices[tri[0]];
    pts.push_back(a + u * (mesh.vertices[tri[1]] - a) + v * (mesh.vertices[tri[2]] - a));
  }
  MapCloud cloud;
  cloud.index.build(std::move(pts));
  return cloud;
}

namespace {

bool axis_separates(const Eigen::Vector3d& axis, const Eigen::Vector3d& v0,
                    const Eigen::Vector3d& v1, const Eigen::Vector3d& v2,
                    const Eigen::Vector3d& half) {
  const double p0 = axis.dot(v0), p1 = axis.dot(v1), p2 = axis.dot(v2);
  const double r = half.x() * std::abs(axis.x()) + half.y() * std::abs(axis.y()) +
                   half.z() * std::abs(axis.z());
  const double lo = std::min({p0, p1, p2}), hi = std::max({p0, p1, p2});
  return lo > r || hi < -r;
}

}  // namespace

bool triangle_aabb_overlap(const Eigen::Vector3d& tv0, const Eigen::Vector3d& tv1,
                           const Eigen::Vector3d& tv2, const Eigen::Vector3d& box_center,
                           const Eigen::Vector3d& half) {
  const Eigen::Vector3d v0 = tv0 - box_center;
  const Eigen::Vector3d v1 = tv1 - box_center;
  const Eigen::Vector3d v2 = tv2 - box_center;

  // box face normals
  for (int a = 0; a < 3; ++a) {
    const double lo = std::min({v0[a], v1[a], v2[a]});
    const double hi = std::max({v0[a], v1[a], v2[a]});
    if (lo > half[a] || hi < -half[a]) return false;
  }
  // triangle normal
  const Eigen::Vector3d e0 = v1 - v0, e1 = v2 - v1, e2 = v0 - v2;
  const Eigen::Vector3d n = e0.cross(e1);
  if (n.squaredNorm() > 0.0 && axis_separates(n, v0, v1, v2, half)) return false;
  // 9 edge cross products
  const Eigen::Vector3d axes[3] = {Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitY(),
                                   Eigen::Vector3d::UnitZ()};
  const Eigen::Vector3d edges[3] = {e0, e1, e2};
  for (const auto& ax : axes) {
    for (const auto& e : edges) {
      const Eigen::Vector3d cross = ax.cross(e);
      if (cross.squaredNorm() > 1e-24 && axis_separates(cross, v0, v1, v2, half)) return false;
    }
  }
  return true;
}

OccupancyGrid2D rasterize_occupancy(const TriangleMesh& mesh, double resolution, double z_lo,
                                    double z_hi) {
  if (!(resolution > 0.0)) throw std::invalid_argument("resolution must be > 0");
  if (!(z_lo < z_hi)) throw std::invalid_argument("z band must satisfy z_lo < z_hi");

  OccupancyGrid2D grid;
  Eigen::Vector2d lo, hi;
  mesh.xy_bounds(lo, hi);
  grid.origin = lo;
  grid.resolution = resolution;
  grid.width = std::max(1, static_cast<int>(std::ceil((hi.x() - lo.x()) / resolution - 1e-9)));
  grid.height = std::max(1, static_cast<int>(std::ceil((hi.y() - lo.y()) / resolution - 1e-9)));
  grid.occupied.assign(static_cast<std::size_t>(grid.width) * grid.height, 0);

  const double zc = 0.5 * (z_lo + z_hi), zh = 0.5 * (z_hi - z_lo);
  for (const auto& t : mesh.triangles) {
    const Eigen::Vector3d& a = mesh.vertices[t[0]];
    const Eigen::Vector3d& b = mesh.vertices[t[1]];
    const Eigen::Vector3d& c = mesh.vertices[t[2]];
    const double tz_lo = std::min({a.z(), b.z(), c.z()});
    const double tz_hi = std::max({a.z(), b.z(), c.z()});
    if (tz_lo > z_hi || tz_hi < z_lo) continue;

    const double tx_lo = std::min({a.x(), b.x(), c.x()}), tx_hi = std::max({a.x(), b.x(), c.x()});
    const double ty_lo = std::min({a.y(), b.y(), c.y()}), ty_hi = std::max({a.y(), b.y(), c.y()});
    const int i0 = std::max(0, static_cast<int>(std::floor((tx_lo - grid.origin.x()) / resolution)));
    const int i1 = std::min(grid.width - 1,
                            static_cast<int>(std::floor((tx_hi - grid.origin.x()) / resolution)));
    const int j0 = std::max(0, static_cast<int>(std::floor((ty_lo - grid.origin.y()) / resolution)));
    const int j1 = std::min(grid.height - 1,
                            static_cast<int>(std::floor((ty_hi - grid.origin.y()) / resolution)));
    for (int j = j0; j <= j1; ++j) {
      for (int i = i0; i <= i1; ++i) {
        if (grid.occupied[static_cast<std::size_t>(j) * grid.width + i]) continue;
        const Eigen::Vector2d ctr = grid.cell_center(i, j);
        const Eigen::Vector3d box_center(ctr.x(), ctr.y(), zc);
        const Eigen::Vector3d half(0.5 * resolution, 0.5 * resolution, zh);
        if (triangle_aabb_overlap(a, b, c, box_center, half))
          grid.occupied[static_cast<std::size_t>(j) * grid.width + i] = 1;
      }
    }
  }
  return grid;
}

SceneModel build_scene_model(const SceneDescription& desc, const SceneBuildParams& params) {
  SceneModel model;
  model.description = desc;
  model.mesh = compile_scene(desc);
  model.map = sample_map_cloud(model.mesh, params.map_density, params.map_seed);
  model.occupancy =
      rasterize_occupancy(model.mesh, params.occ_resolution, params.z_band_lo, params.z_band_hi);
  return model;
}

namespace {

Primitive parse_primitive(const json& j) {
  Primitive p;
  const std::string kind = j.at("kind").get<std::string>();
  std::vector<std::string> allowed = {"kind", "x", "y", "yaw"};
  if (kind == "box") {
    p.kind = PrimitiveKind::kBox;
    allowed.insert(allowed.end(), {"sx", "sy", "sz"});
  } else if (kind == "wall") {
    p.kind = PrimitiveKind::kWall;
    allowed.insert(allowed.end(), {"length", "thickness", "height"});
  } else if (kind == "ground_plane") {
    p.kind = PrimitiveKind::kGroundPlane;
    allowed.insert(allowed.end(), {"sx", "sy"});
  } else if (kind == "heightfield") {
    p.kind = PrimitiveKind::kHeightfield;
    allowed.insert(allowed.end(), {"sx", "sy", "grid", "amplitude", "corr_length", "seed"});
  } else {
    throw std::invalid_argument("unknown primitive kind: " + kind);
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      throw std::invalid_argument("unknown key in primitive '" + kind + "': " + it.key());
  }
  p.x = j.value("x", 0.0);
  p.y = j.value("y", 0.0);
  p.yaw = j.value("yaw", 0.0);
  if (kind == "wall") {
    p.sx = j.at("length").get<double>();
    p.sy = j.value("thickness", 0.1);
    p.sz = j.value("height", 1.0);
  } else {
    p.sx = j.value("sx", 1.0);
    p.sy = j.value("sy", 1.0);
    p.sz = j.value("sz", 1.0);
  }
  p.grid = j.value("grid", 65);
  p.amplitude = j.value("amplitude", 0.08);
  p.corr_length = j.value("corr_length", 0.5);
  p.seed = j.value("seed", 0ULL);
  validate_primitive(p);
  return p;
}

}  // namespace

SceneDescription parse_scene_description(const std::string& json_text) {
  json j = json::parse(json_text);
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() != "name" && it.key() != "primitives")
      throw std::invalid_argument("unknown key in scene description: " + it.key());
  }
  SceneDescription desc;
  desc.name = j.value("name", "scene");
  if (!j.contains("primitives") || !j["primitives"].is_array() || j["primitives"].empty())
    throw std::invalid_argument("scene description needs a non-empty 'primitives' array");
  for (const auto& pj : j["primitives"]) desc.primitives.push_back(parse_primitive(pj));
  return desc;
}

SceneDescription load_scene_description(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scene file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scene_description(ss.str());
}

}  // namespace solmplan

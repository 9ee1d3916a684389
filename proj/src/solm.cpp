#include "solmplan/solm.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <thread>

#include "solmplan/rng.hpp"

namespace solmplan {

namespace {

constexpr char kMagic[4] = {'S', 'O', 'L', 'M'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kRank = 3;  // reserved for higher-dimensional state spaces

template <typename T>
void put(std::ofstream& out, T v) {
  // written on little-endian targets only; asserted below
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(std::ifstream& in, const std::string& path, std::size_t& offset) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in)
    throw std::runtime_error("truncated SOLM file at byte " + std::to_string(offset) + ": " + path);
  offset += sizeof(T);
  return v;
}

static_assert(std::endian::native == std::endian::little, "SOLM format is little-endian");

}  // namespace

bool SolmGrid::pose_to_cell(const PlanarPose& p, int& i, int& j, int& k) const {
  i = static_cast<int>(std::floor((p.x - spec.origin.x()) / spec.rx));
  j = static_cast<int>(std::floor((p.y - spec.origin.y()) / spec.ry));
  k = static_cast<int>(std::floor((wrap_angle(p.theta) + kPi) / spec.rtheta()));
  if (k >= spec.c) k = spec.c - 1;  // theta = pi boundary
  if (k < 0) k = 0;
  return i >= 0 && i < spec.a && j >= 0 && j < spec.b;
}

void SolmGrid::refresh_surrogate() {
  double max_finite = 0.0;
  bool any = false;
  for (float v : values) {
    if (!std::isnan(v)) {
      max_finite = std::max(max_finite, static_cast<double>(v));
      any = true;
    }
  }
  surrogate_ = any ? 10.0 * std::max(max_finite, 0.1) : 1.0;
}

std::uint64_t solm_config_digest(const SolmBuildParams& p) {
  // FNV-1a over the numeric knobs that shape the values
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xff;
      h *= 1099511628211ULL;
    }
  };
  mix(p.grid.origin.x());
  mix(p.grid.origin.y());
  mix(p.grid.rx);
  mix(p.grid.ry);
  mix(p.grid.a);
  mix(p.grid.b);
  mix(p.grid.c);
  mix(p.lidar.hfov_deg);
  mix(p.lidar.vfov_deg);
  mix(p.lidar.azimuth_count);
  mix(p.lidar.elevation_count);
  mix(p.lidar.max_range);
  mix(p.lidar.min_range);
  mix(p.lidar.sigma_r);
  mix(p.lidar.mount_height);
  mix(p.metric.w1);
  mix(p.metric.w2);
  mix(static_cast<double>(p.metric.strategy));
  mix(p.metric.sigma_floor);
  mix(p.observation.k);
  mix(p.observation.d_thresh);
  mix(static_cast<double>(p.observation.association));
  mix(p.r_safe);
  mix(static_cast<double>(p.seed));
  return h;
}

SolmGrid build_solm(const SceneModel& scene, const SolmBuildParams& params) {
  params.metric.validate();
  params.lidar.validate();
  const SolmGridSpec& spec = params.grid;
  if (spec.a < 1 || spec.b < 1 || spec.c < 1) throw std::invalid_argument("empty SOLM grid");

  SolmGrid grid;
  grid.spec = spec;
  grid.values.assign(static_cast<std::size_t>(spec.a) * spec.b * spec.c,
                     std::numeric_limits<float>::quiet_NaN());
  grid.obstacle.assign(static_cast<std::size_t>(spec.a) * spec.b, 0);
  grid.config_digest = solm_config_digest(params);

  const SdfField sdf = build_sdf(scene.occupancy);
  std::size_t free_xy = 0;
  for (int j = 0; j < spec.b; ++j) {
    for (int i = 0; i < spec.a; ++i) {
      const PlanarPose center = grid.cell_center(i, j, 0);
      const Eigen::Vector2d xy(center.x, center.y);
      int oi, oj;
      bool blocked = !scene.occupancy.world_to_cell(xy, oi, oj);
      if (!blocked) blocked = scene.occupancy.at(oi, oj);
      if (!blocked) blocked = sample_sdf(sdf, xy).d < params.r_safe;
      grid.obstacle[static_cast<std::size_t>(j) * spec.a + i] = blocked ? 1 : 0;
      if (!blocked) ++free_xy;
    }
  }
  if (free_xy == 0) throw std::runtime_error("SOLM grid has zero free cells");

  const ScanSimulator sim(scene.mesh);
  const std::size_t total = grid.values.size();
  std::atomic<std::size_t> cursor{0};
#ifndef NDEBUG
  std::atomic<std::size_t> visited{0};
#endif

  auto worker = [&]() {
    for (;;) {
      const std::size_t idx = cursor.fetch_add(1);
      if (idx >= total) break;
      const int i = static_cast<int>(idx % spec.a);
      const int j = static_cast<int>((idx / spec.a) % spec.b);
      const int k = static_cast<int>(idx / (static_cast<std::size_t>(spec.a) * spec.b));
      if (grid.is_obstacle(i, j)) continue;
#ifndef NDEBUG
      visited.fetch_add(1);
#endif
      const PlanarPose pose = grid.cell_center(i, j, k);
      const std::uint64_t cell_seed = mix64(params.seed, idx);
      const Scan scan = simulate_scan(sim, pose, params.lidar, cell_seed);
      if (scan.size() < 4) continue;  // sentinel stays
      const ObservationSet obs = build_observations(scan, scene.map, pose, params.observation,
                                                    params.lidar.mount_height, &scene.mesh);
      const MetricResult res = evaluate(obs, params.metric);
      if (!res.degenerate && std::isfinite(res.q))
        grid.values[idx] = static_cast<float>(res.q);
    }
  };

  const int workers = std::max(1, params.workers);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
#ifndef NDEBUG
  if (visited.load() != free_xy * static_cast<std::size_t>(spec.c))
    throw std::logic_error("SOLM build did not visit every free cell exactly once");
#endif
  grid.refresh_surrogate();
  return grid;
}

void save_solm(const SolmGrid& grid, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, kRank);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(grid.spec.a));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(grid.spec.b));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(grid.spec.c));
  put<double>(out, grid.spec.origin.x());
  put<double>(out, grid.spec.origin.y());
  put<double>(out, -kPi);  // theta origin
  put<double>(out, grid.spec.rx);
  put<double>(out, grid.spec.ry);
  put<double>(out, grid.spec.rtheta());
  put<std::uint64_t>(out, grid.config_digest);
  out.write(reinterpret_cast<const char*>(grid.values.data()),
            static_cast<std::streamsize>(grid.values.size() * sizeof(float)));
  // obstacle bitmask over the xy footprint
  const std::size_t nbits = grid.obstacle.size();
  std::vector<std::uint8_t> bits((nbits + 7) / 8, 0);
  for (std::size_t i = 0; i < nbits; ++i)
    if (grid.obstacle[i]) bits[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  out.write(reinterpret_cast<const char*>(bits.data()), static_cast<std::streamsize>(bits.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

SolmGrid load_solm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open SOLM file: " + path);
  std::size_t offset = 0;

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("bad SOLM magic at byte 0: " + path);
  offset = 4;
  const auto version = take<std::uint32_t>(in, path, offset);
  if (version != kVersion)
    throw std::runtime_error("unsupported SOLM version " + std::to_string(version) +
                             " at byte 4: " + path);
  const auto rank = take<std::uint32_t>(in, path, offset);
  if (rank != kRank)
    throw std::runtime_error("unsupported SOLM rank " + std::to_string(rank) + " at byte 8: " +
                             path);

  SolmGrid grid;
  grid.spec.a = static_cast<int>(take<std::uint32_t>(in, path, offset));
  grid.spec.b = static_cast<int>(take<std::uint32_t>(in, path, offset));
  grid.spec.c = static_cast<int>(take<std::uint32_t>(in, path, offset));
  grid.spec.origin.x() = take<double>(in, path, offset);
  grid.spec.origin.y() = take<double>(in, path, offset);
  const double theta0 = take<double>(in, path, offset);
  if (std::abs(theta0 + kPi) > 1e-9)
    throw std::runtime_error("unexpected theta origin at byte 24: " + path);
  grid.spec.rx = take<double>(in, path, offset);
  grid.spec.ry = take<double>(in, path, offset);
  const double rtheta = take<double>(in, path, offset);
  if (grid.spec.a < 1 || grid.spec.b < 1 || grid.spec.c < 1)
    throw std::runtime_error("invalid SOLM dims: " + path);
  if (std::abs(rtheta * grid.spec.c - 2.0 * kPi) > 1e-9)
    throw std::runtime_error("theta channels do not cover 2*pi: " + path);
  grid.config_digest = take<std::uint64_t>(in, path, offset);

  const std::size_t total =
      static_cast<std::size_t>(grid.spec.a) * grid.spec.b * grid.spec.c;
  grid.values.resize(total);
  in.read(reinterpret_cast<char*>(grid.values.data()),
          static_cast<std::streamsize>(total * sizeof(float)));
  if (!in)
    throw std::runtime_error("truncated SOLM values at byte " + std::to_string(offset) + ": " +
                             path);
  offset += total * sizeof(float);

  const std::size_t nbits = static_cast<std::size_t>(grid.spec.a) * grid.spec.b;
  std::vector<std::uint8_t> bits((nbits + 7) / 8);
  in.read(reinterpret_cast<char*>(bits.data()), static_cast<std::streamsize>(bits.size()));
  if (!in)
    throw std::runtime_error("truncated SOLM obstacle mask at byte " + std::to_string(offset) +
                             ": " + path);
  grid.obstacle.resize(nbits);
  for (std::size_t i = 0; i < nbits; ++i)
    grid.obstacle[i] = (bits[i / 8] >> (i % 8)) & 1u;
  grid.refresh_surrogate();
  return grid;
}

void export_solm_image(const SolmGrid& grid, int channel, const std::string& path) {
  if (channel < 0 || channel >= grid.spec.c) throw std::invalid_argument("channel out of range");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);

  double q_min = 1e300, q_max = -1e300;
  for (int j = 0; j < grid.spec.b; ++j) {
    for (int i = 0; i < grid.spec.a; ++i) {
      if (grid.is_obstacle(i, j)) continue;
      const float v = grid.value(i, j, channel);
      if (std::isnan(v)) continue;
      q_min = std::min(q_min, static_cast<double>(v));
      q_max = std::max(q_max, static_cast<double>(v));
    }
  }
  const bool flat = !(q_max > q_min);

  out << "P5\n" << grid.spec.a << " " << grid.spec.b << "\n255\n";
  for (int j = grid.spec.b - 1; j >= 0; --j) {  // north-up image
    for (int i = 0; i < grid.spec.a; ++i) {
      unsigned char px;
      if (grid.is_obstacle(i, j)) {
        px = 0;
      } else {
        const float v = grid.value(i, j, channel);
        if (std::isnan(v)) {
          px = 1;  // degenerate sentinel clamps to the darkest free shade
        } else if (flat) {
          px = 255;
        } else {
          px = static_cast<unsigned char>(
              1 + std::lround(254.0 * (q_max - v) / (q_max - q_min)));
        }
      }
      out.put(static_cast<char>(px));
    }
  }
}

SolmSample interpolate(const SolmGrid& grid, const PlanarPose& pose) {
  const SolmGridSpec& s = grid.spec;
  SolmSample out;

  double u = (pose.x - s.origin.x()) / s.rx - 0.5;
  double v = (pose.y - s.origin.y()) / s.ry - 0.5;
  const double w = (wrap_angle(pose.theta) + kPi) / s.rtheta() - 0.5;  // wraps below

  const bool clamp_u = u <= 0.0 || u >= s.a - 1;
  const bool clamp_v = v <= 0.0 || v >= s.b - 1;
  u = std::clamp(u, 0.0, static_cast<double>(s.a - 1));
  v = std::clamp(v, 0.0, static_cast<double>(s.b - 1));

  const int i0 = std::min(static_cast<int>(u), std::max(s.a - 2, 0));
  const int j0 = std::min(static_cast<int>(v), std::max(s.b - 2, 0));
  const int i1 = std::min(i0 + 1, s.a - 1);
  const int j1 = std::min(j0 + 1, s.b - 1);
  const double fu = u - i0, fv = v - j0;

  int k0 = static_cast<int>(std::floor(w));
  const double fw = w - k0;
  k0 = ((k0 % s.c) + s.c) % s.c;
  const int k1 = (k0 + 1) % s.c;

  double corner[2][2][2];
  const int ii[2] = {i0, i1}, jj[2] = {j0, j1}, kk[2] = {k0, k1};
  for (int du = 0; du < 2; ++du)
    for (int dv = 0; dv < 2; ++dv)
      for (int dw = 0; dw < 2; ++dw)
        corner[du][dv][dw] = grid.cell_cost(ii[du], jj[dv], kk[dw]);

  auto lerp = [](double a, double b, double t) { return a + t * (b - a); };
  // collapse theta, then y, then x; gradients fall out of the same tree
  double c00 = lerp(corner[0][0][0], corner[0][0][1], fw);
  double c01 = lerp(corner[0][1][0], corner[0][1][1], fw);
  double c10 = lerp(corner[1][0][0], corner[1][0][1], fw);
  double c11 = lerp(corner[1][1][0], corner[1][1][1], fw);
  double g00 = corner[0][0][1] - corner[0][0][0];
  double g01 = corner[0][1][1] - corner[0][1][0];
  double g10 = corner[1][0][1] - corner[1][0][0];
  double g11 = corner[1][1][1] - corner[1][1][0];

  const double c0 = lerp(c00, c01, fv), c1 = lerp(c10, c11, fv);
  out.q = lerp(c0, c1, fu);
  out.grad.x() = clamp_u ? 0.0 : (c1 - c0) / s.rx;
  out.grad.y() = clamp_v ? 0.0 : (lerp(c01 - c00, c11 - c10, fu)) / s.ry;
  out.grad.z() = lerp(lerp(g00, g01, fv), lerp(g10, g11, fv), fu) / s.rtheta();
  return out;
}

SolmGridSpec grid_spec_for_scene(const SceneModel& scene, double rx, double ry, int c) {
  if (!(rx > 0.0 && ry > 0.0) || c < 1) throw std::invalid_argument("bad SOLM grid spec");
  Eigen::Vector2d lo, hi;
  scene.mesh.xy_bounds(lo, hi);
  SolmGridSpec spec;
  spec.origin = lo;
  spec.rx = rx;
  spec.ry = ry;
  spec.a = std::max(1, static_cast<int>(std::ceil((hi.x() - lo.x()) / rx - 1e-9)));
  spec.b = std::max(1, static_cast<int>(std::ceil((hi.y() - lo.y()) / ry - 1e-9)));
  spec.c = c;
  return spec;
}

}  // namespace solmplan

#include "solmplan/sdf.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace solmplan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Felzenszwalb & Huttenlocher 1-d squared distance transform.
void dt_1d(const std::vector<double>& f, int n, std::vector<double>& d, std::vector<int>& v,
           std::vector<double>& z) {
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    if (f[q] == kInf) continue;
    if (f[v[0]] == kInf) {  // first finite parabola
      v[0] = q;
      continue;
    }
    double s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
    while (k > 0 && s <= z[k]) {
      --k;
      s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    if (f[v[0]] == kInf) {
      d[q] = kInf;
      continue;
    }
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

// squared EDT of a binary source mask (cells with source=true get 0)
std::vector<double> edt_squared(const std::vector<std::uint8_t>& source, int w, int h) {
  std::vector<double> g(static_cast<std::size_t>(w) * h);
  const int n = std::max(w, h);
  std::vector<double> f(n), d(n), z(n + 1);
  std::vector<int> v(n);

  // columns
  for (int i = 0; i < w; ++i) {
    for (int j = 0; j < h; ++j)
      f[j] = source[static_cast<std::size_t>(j) * w + i] ? 0.0 : kInf;
    dt_1d(f, h, d, v, z);
    for (int j = 0; j < h; ++j) g[static_cast<std::size_t>(j) * w + i] = d[j];
  }
  // rows
  std::vector<double> out(static_cast<std::size_t>(w) * h);
  for (int j = 0; j < h; ++j) {
    for (int i = 0; i < w; ++i) f[i] = g[static_cast<std::size_t>(j) * w + i];
    dt_1d(f, w, d, v, z);
    for (int i = 0; i < w; ++i) out[static_cast<std::size_t>(j) * w + i] = d[i];
  }
  return out;
}

}  // namespace

SdfField build_sdf(const OccupancyGrid2D& occ, double cap) {
  SdfField field;
  field.origin = occ.origin;
  field.resolution = occ.resolution;
  field.width = occ.width;
  field.height = occ.height;
  field.cap = cap > 0.0 ? cap
                        : occ.resolution * std::hypot(static_cast<double>(occ.width),
                                                      static_cast<double>(occ.height));
  const std::size_t total = static_cast<std::size_t>(occ.width) * occ.height;
  field.values.assign(total, field.cap);

  std::vector<std::uint8_t> free_mask(total);
  for (std::size_t i = 0; i < total; ++i) free_mask[i] = occ.occupied[i] ? 0 : 1;

  const std::vector<double> d_occ = edt_squared(occ.occupied, occ.width, occ.height);
  const std::vector<double> d_free = edt_squared(free_mask, occ.width, occ.height);

  for (std::size_t i = 0; i < total; ++i) {
    if (occ.occupied[i])
      field.values[i] = -std::min(field.cap, occ.resolution * std::sqrt(d_free[i]));
    else
      field.values[i] = std::min(field.cap, occ.resolution * std::sqrt(d_occ[i]));
  }
  return field;
}

SdfSample sample_sdf(const SdfField& field, const Eigen::Vector2d& xy) {
  SdfSample out;
  if (field.width == 0 || field.height == 0) return out;
  // cell-center coordinate space
  double u = (xy.x() - field.origin.x()) / field.resolution - 0.5;
  double v = (xy.y() - field.origin.y()) / field.resolution - 0.5;
  const bool clamp_u = u <= 0.0 || u >= field.width - 1;
  const bool clamp_v = v <= 0.0 || v >= field.height - 1;
  u = std::clamp(u, 0.0, static_cast<double>(field.width - 1));
  v = std::clamp(v, 0.0, static_cast<double>(field.height - 1));
  const int i0 = std::min(static_cast<int>(u), field.width - 2 >= 0 ? field.width - 2 : 0);
  const int j0 = std::min(static_cast<int>(v), field.height - 2 >= 0 ? field.height - 2 : 0);
  const int i1 = std::min(i0 + 1, field.width - 1);
  const int j1 = std::min(j0 + 1, field.height - 1);
  const double fu = u - i0, fv = v - j0;

  const double v00 = field.at(i0, j0), v10 = field.at(i1, j0);
  const double v01 = field.at(i0, j1), v11 = field.at(i1, j1);
  out.d = (1 - fu) * (1 - fv) * v00 + fu * (1 - fv) * v10 + (1 - fu) * fv * v01 + fu * fv * v11;
  out.grad.x() = clamp_u ? 0.0 : ((1 - fv) * (v10 - v00) + fv * (v11 - v01)) / field.resolution;
  out.grad.y() = clamp_v ? 0.0 : ((1 - fu) * (v01 - v00) + fu * (v11 - v10)) / field.resolution;
  return out;
}

void export_sdf_image(const SdfField& field, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "P5\n" << field.width << " " << field.height << "\n255\n";
  double lo = 1e300, hi = -1e300;
  for (double d : field.values) {
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  const double span = hi > lo ? hi - lo : 1.0;
  for (int j = field.height - 1; j >= 0; --j) {
    for (int i = 0; i < field.width; ++i) {
      const auto px = static_cast<unsigned char>(
          std::lround(255.0 * (field.at(i, j) - lo) / span));
      out.put(static_cast<char>(px));
    }
  }
}

}  // namespace solmplan

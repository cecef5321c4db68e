#include "mgpbd/analysis.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace mgpbd {

namespace {

struct BinAccumulator {
  std::vector<double> sum;
  std::vector<long> count;
  double dc = 0.0;
};

BinAccumulator bin_field(std::span<const double> field, Index rows, Index cols, double scale) {
  const std::size_t n = static_cast<std::size_t>(rows) * cols;
  auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
  fftw_plan plan = fftw_plan_dft_2d(rows, cols, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  for (std::size_t i = 0; i < n; ++i) {
    buf[i][0] = field[i];
    buf[i][1] = 0.0;
  }
  fftw_execute(plan);

  BinAccumulator acc;
  const double fmax = std::sqrt(0.5);
  const auto nbins = static_cast<std::size_t>(std::floor(fmax * scale + 0.5)) + 1;
  acc.sum.assign(nbins, 0.0);
  acc.count.assign(nbins, 0);
  for (Index r = 0; r < rows; ++r) {
    const double fy = static_cast<double>(r <= rows / 2 ? r : r - rows) / rows;
    for (Index c = 0; c < cols; ++c) {
      const double fx = static_cast<double>(c <= cols / 2 ? c : c - cols) / cols;
      const auto& z = buf[static_cast<std::size_t>(r) * cols + c];
      const double p = (z[0] * z[0] + z[1] * z[1]) / static_cast<double>(n);
      if (r == 0 && c == 0) {
        acc.dc = p;
        continue;
      }
      auto b = static_cast<std::size_t>(std::floor(std::hypot(fx, fy) * scale + 0.5));
      b = std::clamp<std::size_t>(b, 1, nbins - 1);
      acc.sum[b] += p;
      ++acc.count[b];
    }
  }
  fftw_destroy_plan(plan);
  fftw_free(buf);
  return acc;
}

}  // namespace

Spectrum radial_power_spectrum(std::span<const double> field, Index rows, Index cols, double scale) {
  if (rows < 1 || cols < 1 || field.size() != static_cast<std::size_t>(rows) * cols)
    throw std::invalid_argument("radial_power_spectrum: field size does not match rows x cols");
  if (!(scale > 0.0)) throw std::invalid_argument("radial_power_spectrum: scale must be positive");
  const BinAccumulator acc = bin_field(field, rows, cols, scale);
  Spectrum s;
  s.dc = acc.dc;
  for (std::size_t b = 1; b < acc.sum.size(); ++b) {
    if (acc.count[b] == 0) continue;
    s.power.push_back(acc.sum[b] / static_cast<double>(acc.count[b]));
    s.frequency.push_back(static_cast<double>(b) / scale);
  }
  return s;
}

Spectrum residual_spectrum(std::span<const double> residual, const std::optional<ClothGrid>& grid) {
  if (!grid) throw SpectrumUnavailable("residual spectrum needs a regular cloth grid");
  const Index n = grid->n;
  if (residual.size() != static_cast<std::size_t>(grid->edge_count()))
    throw std::invalid_argument("residual_spectrum: residual length does not match the grid");
  const auto h = residual.subspan(grid->horizontal_begin(), static_cast<std::size_t>(n) * (n + 1));
  const auto v = residual.subspan(grid->vertical_begin(), static_cast<std::size_t>(n) * (n + 1));
  const double scale = n;
  const BinAccumulator a = bin_field(h, n + 1, n, scale);
  const BinAccumulator b = bin_field(v, n, n + 1, scale);
  Spectrum s;
  s.dc = 0.5 * (a.dc + b.dc);
  for (std::size_t k = 1; k < a.sum.size(); ++k) {
    const long ca = a.count[k], cb = b.count[k];
    if (ca == 0 && cb == 0) continue;
    double p = 0.0;
    if (ca && cb) p = 0.5 * (a.sum[k] / ca + b.sum[k] / cb);
    else p = ca ? a.sum[k] / ca : b.sum[k] / cb;
    s.power.push_back(p);
    s.frequency.push_back(static_cast<double>(k) / scale);
  }
  return s;
}

void write_obj(std::ostream& os, std::span<const Vec3> positions, std::span<const std::array<Index, 3>> faces) {
  char line[128];
  for (const Vec3& p : positions) {
    std::snprintf(line, sizeof line, "v %.9g %.9g %.9g\n", p.x(), p.y(), p.z());
    os << line;
  }
  for (const auto& f : faces) os << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

std::size_t read_obj_vertex_count(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line))
    if (line.size() > 1 && line[0] == 'v' && (line[1] == ' ' || line[1] == '\t')) ++n;
  return n;
}

std::filesystem::path export_frame(const std::filesystem::path& dir, long frame, std::span<const Vec3> positions,
                                   std::span<const std::array<Index, 3>> faces) {
  char name[32];
  std::snprintf(name, sizeof name, "frame_%06ld.obj", frame);
  const auto path = dir / name;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  write_obj(out, positions, faces);
  out.flush();
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
  return path;
}

}  // namespace mgpbd

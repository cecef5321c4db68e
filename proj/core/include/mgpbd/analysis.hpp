#pragma once

#include "mgpbd/scenes.hpp"

#include <array>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

namespace mgpbd {

/// The scene has no regular grid layout to map residuals onto.
class SpectrumUnavailable : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

struct Spectrum {
  double dc = 0.0;
  /// power[i] is the mean periodogram value in radial bin i + 1; bin b holds
  /// frequencies with round(|f| * scale) == b, |f| in cycles per sample.
  /// Bins without any frequency are omitted.
  std::vector<double> power;
  /// Bin centre in cycles per sample, aligned with `power`.
  std::vector<double> frequency;
};

/// Radially averaged power spectrum of a row-major rows x cols field.
/// Periodogram |X_k|^2 / (rows * cols); `scale` sets the bin width to 1/scale.
Spectrum radial_power_spectrum(std::span<const double> field, Index rows, Index cols, double scale);

/// Spectrum of a per-constraint residual on a cloth grid. Horizontal edges
/// form an (N+1) x N field and vertical edges an N x (N+1) field; their
/// spectra are averaged bin by bin with scale N. Diagonal edges are ignored.
/// Throws SpectrumUnavailable when `grid` is empty.
Spectrum residual_spectrum(std::span<const double> residual, const std::optional<ClothGrid>& grid);

/// Wavefront OBJ: `v x y z` lines followed by 1-based `f a b c` lines.
void write_obj(std::ostream& os, std::span<const Vec3> positions, std::span<const std::array<Index, 3>> faces);
/// Number of `v` records in an OBJ file.
std::size_t read_obj_vertex_count(const std::filesystem::path& path);
/// Writes `<dir>/frame_<NNNNNN>.obj` and returns its path. Throws std::runtime_error on I/O failure.
std::filesystem::path export_frame(const std::filesystem::path& dir, long frame, std::span<const Vec3> positions,
                                   std::span<const std::array<Index, 3>> faces);

}  // namespace mgpbd

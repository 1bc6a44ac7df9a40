#pragma once

// Serial reference implementations of the parallel kernels. Structured for
// clarity rather than speed; the test suites check the production kernels
// against these, and the benchmark tool times the two side by side.

#include "splatgeom/extraction.hpp"
#include "splatgeom/image.hpp"
#include "splatgeom/semantics.hpp"
#include "splatgeom/shape_training.hpp"
#include "splatgeom/spectrum.hpp"

namespace splatgeom::ref {

// Straight-line serial Canny: same blur/Sobel/NMS recipe as the production
// kernel, hysteresis via repeated whole-image sweeps instead of a BFS.
EdgeMap canny_edges(const ImageF& gray, double sigma, double low, double high);

// Serial loop over splats, plain accumulation.
GcLossResult gc_loss(const std::vector<GaussianSplat>& splats,
                     const std::vector<int>& labels,
                     const std::map<int, ShapeTarget>& targets,
                     const PenaltyConfig& penalty,
                     const std::vector<uint8_t>* live_mask = nullptr);

// O(|a|*|b|) nearest neighbors, no spatial index.
ChamferStats chamfer_bruteforce(const PointCloud& a, const PointCloud& b,
                                bool squared = false);

// Quadruple-loop 2D DFT straight from the definition.
Spectrum2D dft2_naive(const ImageF& image);

// Per-window SSIM with direct weighted sums, no separable filtering.
double ssim(const ImageRGB& a, const ImageRGB& b);

// Dense-inverse density evaluation (adjugate inverse, no Cholesky).
double density_dense(const std::vector<GaussianSplat>& splats, const Vec3& x);

// Serial twin of sample_points; must produce bit-identical output.
PointCloud sample_points_serial(const std::vector<GaussianSplat>& splats, int64_t n,
                                uint64_t seed,
                                const std::vector<uint8_t>* live_mask = nullptr);

}  // namespace splatgeom::ref

#pragma once

#include <complex>
#include <span>
#include <vector>

#include "splatgeom/core.hpp"
#include "splatgeom/image.hpp"
#include "splatgeom/semantics.hpp"

namespace splatgeom {

// Unnormalized 2D DFT coefficients, DC at (0,0), row-major over (v,u).
struct Spectrum2D {
    int width = 0, height = 0;
    std::vector<std::complex<double>> coef;

    std::complex<double>& at(int u, int v) {
        return coef[size_t(v) * size_t(width) + size_t(u)];
    }
    std::complex<double> at(int u, int v) const {
        return coef[size_t(v) * size_t(width) + size_t(u)];
    }
};

// Signed normalized frequency of bin k out of n, in cycles/pixel (-0.5, 0.5].
inline double bin_frequency(int k, int n) {
    return (k <= n / 2 ? double(k) : double(k - n)) / double(n);
}

// Radial frequency of bin (u,v); Nyquist along an axis is 0.5.
inline double bin_radius(int u, int v, int width, int height) {
    double fu = bin_frequency(u, width);
    double fv = bin_frequency(v, height);
    return std::sqrt(fu * fu + fv * fv);
}

// Radix-2 FFT when both dimensions are powers of two, direct summation
// otherwise. Both paths agree within 1e-8.
Spectrum2D dft2(const ImageF& image);

// Direct-summation path, exposed for cross-checks and benchmarks.
Spectrum2D dft2_direct(const ImageF& image);

// Inverse transform (real part); recovers the input within 1e-9 relative RMS.
ImageF idft2(const Spectrum2D& spec);

// Discrete version of the radial-weighted magnitude statistic: each
// conjugate pair of non-DC bins contributes radius * |coefficient| once,
// which folds the full plane into the first quadrant for real inputs.
double naive_magnitude_stat(const Spectrum2D& spec);

// Energy of bins with radius >= T, normalized by W*H (Parseval: equals the
// spatial energy of the ideally high-passed image). Requires 0 <= T < 0.5.
double highpass_energy(const Spectrum2D& spec, double T);

// Pearson correlation; throws DegenerateCorpus when either series has zero
// variance.
double pearson(std::span<const double> xs, std::span<const double> ys);

struct SpectrumImageStats {
    int64_t edge_count = 0;
    double highpass_energy = 0;
    double naive_stat = 0;
    double parseval_rel_err = 0;
};

// Pearson correlation between per-image Canny edge counts and high-pass
// energies over a corpus of at least 10 images.
double edge_energy_correlation(const std::vector<ImageF>& corpus, double T,
                               const CannyParams& canny,
                               std::vector<SpectrumImageStats>* per_image = nullptr);

}  // namespace splatgeom

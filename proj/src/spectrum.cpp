#include "splatgeom/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace splatgeom {

namespace {

using cplx = std::complex<double>;

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Iterative radix-2 Cooley-Tukey, in place. sign = -1 forward, +1 inverse.
void fft1(cplx* a, int n, int sign) {
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        double ang = sign * 2.0 * std::numbers::pi / len;
        cplx wlen(std::cos(ang), std::sin(ang));
        for (int i = 0; i < n; i += len) {
            cplx w(1.0);
            for (int k = 0; k < len / 2; ++k) {
                cplx u = a[i + k];
                cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

// Direct 1D DFT of a strided sequence. sign = -1 forward, +1 inverse.
void dft1_direct(const cplx* in, cplx* out, int n, int stride, int sign) {
    for (int k = 0; k < n; ++k) {
        cplx s(0.0);
        for (int x = 0; x < n; ++x) {
            double ang = sign * 2.0 * std::numbers::pi * double(k) * double(x) / double(n);
            s += in[size_t(x) * size_t(stride)] * cplx(std::cos(ang), std::sin(ang));
        }
        out[size_t(k) * size_t(stride)] = s;
    }
}

void transform2(std::vector<cplx>& data, int w, int h, int sign) {
    const bool fast = is_pow2(w) && is_pow2(h);
    if (fast) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (int y = 0; y < h; ++y) fft1(data.data() + size_t(y) * size_t(w), w, sign);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (int x = 0; x < w; ++x) {
            std::vector<cplx> col(static_cast<size_t>(h));
            for (int y = 0; y < h; ++y) col[size_t(y)] = data[size_t(y) * size_t(w) + size_t(x)];
            fft1(col.data(), h, sign);
            for (int y = 0; y < h; ++y) data[size_t(y) * size_t(w) + size_t(x)] = col[size_t(y)];
        }
    } else {
        std::vector<cplx> tmp(data.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (int y = 0; y < h; ++y)
            dft1_direct(data.data() + size_t(y) * size_t(w),
                        tmp.data() + size_t(y) * size_t(w), w, 1, sign);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (int x = 0; x < w; ++x)
            dft1_direct(tmp.data() + size_t(x), data.data() + size_t(x), h, w, sign);
    }
}

Spectrum2D forward(const ImageF& image, bool force_direct) {
    Spectrum2D spec;
    spec.width = image.width;
    spec.height = image.height;
    spec.coef.assign(image.size(), cplx(0.0));
    for (size_t i = 0; i < image.size(); ++i) spec.coef[i] = cplx(image.data[i], 0.0);
    if (force_direct) {
        std::vector<cplx> tmp(spec.coef.size());
        int w = spec.width, h = spec.height;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (int y = 0; y < h; ++y)
            dft1_direct(spec.coef.data() + size_t(y) * size_t(w),
                        tmp.data() + size_t(y) * size_t(w), w, 1, -1);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (int x = 0; x < w; ++x)
            dft1_direct(tmp.data() + size_t(x), spec.coef.data() + size_t(x), h, w, -1);
    } else {
        transform2(spec.coef, spec.width, spec.height, -1);
    }
    return spec;
}

}  // namespace

Spectrum2D dft2(const ImageF& image) {
    if (image.width < 1 || image.height < 1)
        raise(Errc::InvalidArgument, "dft2 needs a non-empty image");
    return forward(image, false);
}

Spectrum2D dft2_direct(const ImageF& image) {
    if (image.width < 1 || image.height < 1)
        raise(Errc::InvalidArgument, "dft2 needs a non-empty image");
    return forward(image, true);
}

ImageF idft2(const Spectrum2D& spec) {
    std::vector<cplx> data = spec.coef;
    transform2(data, spec.width, spec.height, +1);
    ImageF out(spec.width, spec.height);
    double norm = 1.0 / (double(spec.width) * double(spec.height));
    for (size_t i = 0; i < data.size(); ++i) out.data[i] = data[i].real() * norm;
    return out;
}

double naive_magnitude_stat(const Spectrum2D& spec) {
    const int w = spec.width, h = spec.height;
    std::vector<double> contrib(size_t(w) * size_t(h), 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int v = 0; v < h; ++v)
        for (int u = 0; u < w; ++u) {
            if (u == 0 && v == 0) continue;
            // Self-conjugate bins count once; conjugate pairs share weight.
            int cu = (w - u) % w, cv = (h - v) % h;
            double weight = (cu == u && cv == v) ? 1.0 : 0.5;
            contrib[size_t(v) * size_t(w) + size_t(u)] =
                weight * bin_radius(u, v, w, h) * std::abs(spec.at(u, v));
        }
    return det_sum(contrib);
}

double highpass_energy(const Spectrum2D& spec, double T) {
    if (!(T >= 0.0) || !(T < 0.5))
        raise(Errc::BadThreshold, "high-pass threshold must satisfy 0 <= T < 0.5");
    const int w = spec.width, h = spec.height;
    std::vector<double> contrib(size_t(w) * size_t(h), 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int v = 0; v < h; ++v)
        for (int u = 0; u < w; ++u) {
            if (bin_radius(u, v, w, h) < T) continue;
            contrib[size_t(v) * size_t(w) + size_t(u)] = std::norm(spec.at(u, v));
        }
    return det_sum(contrib) / (double(w) * double(h));
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size())
        raise(Errc::DimensionMismatch, "pearson inputs differ in length");
    if (xs.size() < 2) raise(Errc::DegenerateCorpus, "need at least two samples");
    const double n = double(xs.size());
    double mx = det_mean(xs), my = det_mean(ys);
    double sxx = 0, syy = 0, sxy = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        double dx = xs[i] - mx, dy = ys[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx <= 0 || syy <= 0)
        raise(Errc::DegenerateCorpus, "zero variance in a correlation series");
    double r = sxy / std::sqrt(sxx * syy);
    (void)n;
    return std::clamp(r, -1.0, 1.0);
}

double edge_energy_correlation(const std::vector<ImageF>& corpus, double T,
                               const CannyParams& canny,
                               std::vector<SpectrumImageStats>* per_image) {
    if (corpus.size() < 10)
        raise(Errc::InvalidArgument, "corpus must hold at least 10 images");
    std::vector<SpectrumImageStats> stats(corpus.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (long i = 0; i < long(corpus.size()); ++i) {
        const ImageF& img = corpus[size_t(i)];
        SpectrumImageStats& s = stats[size_t(i)];
        s.edge_count = canny_edges(img, canny).count;
        Spectrum2D spec = dft2(img);
        s.highpass_energy = highpass_energy(spec, T);
        s.naive_stat = naive_magnitude_stat(spec);
        double spatial = 0;
        for (double v : img.data) spatial += v * v;
        double spectral = highpass_energy(spec, 0.0);
        s.parseval_rel_err =
            spatial > 0 ? std::abs(spatial - spectral) / spatial : std::abs(spectral);
    }
    std::vector<double> edges(stats.size()), energy(stats.size());
    for (size_t i = 0; i < stats.size(); ++i) {
        edges[i] = double(stats[i].edge_count);
        energy[i] = stats[i].highpass_energy;
    }
    if (per_image) *per_image = std::move(stats);
    return pearson(edges, energy);
}

}  // namespace splatgeom

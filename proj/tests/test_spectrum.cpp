#include <doctest.h>

#include <cmath>
#include <numbers>

#include "splatgeom/reference.hpp"
#include "splatgeom/spectrum.hpp"
#include "test_util.hpp"

using namespace splatgeom;
using namespace testutil;

namespace {

double max_coef_err(const Spectrum2D& a, const Spectrum2D& b) {
    double m = 0;
    for (size_t i = 0; i < a.coef.size(); ++i)
        m = std::max(m, std::abs(a.coef[i] - b.coef[i]));
    return m;
}

ImageF cosine_image(int n, int k) {
    ImageF img(n, n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            img.at(x, y) = std::cos(2.0 * std::numbers::pi * double(k) * double(x) / n);
    return img;
}

// Synthesizes an image whose magnitude spectrum falls off as 1/rho^2,
// random phases, Hermitian-symmetric so the image is real.
ImageF pink_image(int n, uint64_t seed) {
    Spectrum2D spec;
    spec.width = spec.height = n;
    spec.coef.assign(size_t(n) * size_t(n), {0, 0});
    for (int v = 0; v < n; ++v)
        for (int u = 0; u < n; ++u) {
            if (u == 0 && v == 0) continue;
            int cu = (n - u) % n, cv = (n - v) % n;
            double rho = bin_radius(u, v, n, n);
            double mag = 1.0 / (rho * rho);
            if (cu == u && cv == v) {
                spec.at(u, v) = {mag, 0};
            } else if (std::pair{v, u} < std::pair{cv, cu}) {
                double phase =
                    rng::uniform(seed, uint64_t(v) * uint64_t(n) + uint64_t(u), 0, 0,
                                 2.0 * std::numbers::pi);
                spec.at(u, v) = std::polar(mag, phase);
                spec.at(cu, cv) = std::conj(spec.at(u, v));
            }
        }
    return idft2(spec);
}

}  // namespace

TEST_CASE("dft2 of a constant image is a pure DC spike") {
    ImageF img(12, 8, 0.37);
    Spectrum2D spec = dft2(img);
    CHECK(spec.at(0, 0).real() == doctest::Approx(0.37 * 12 * 8).epsilon(1e-12));
    CHECK(spec.at(0, 0).imag() == doctest::Approx(0.0));
    for (int v = 0; v < 8; ++v)
        for (int u = 0; u < 12; ++u)
            if (u || v) CHECK(std::abs(spec.at(u, v)) < 1e-9);
}

TEST_CASE("dft2 of a unit impulse is flat") {
    ImageF img(16, 16, 0.0);
    img.at(0, 0) = 1.0;
    Spectrum2D spec = dft2(img);
    for (const auto& c : spec.coef) {
        CHECK(c.real() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(c.imag()) < 1e-12);
    }
}

TEST_CASE("dft2 matches the naive quadruple-loop oracle") {
    ImageF img = random_image(16, 16, 3);
    Spectrum2D fast = dft2(img);
    Spectrum2D naive = ref::dft2_naive(img);
    CHECK(max_coef_err(fast, naive) < 1e-8);

    ImageF odd = random_image(12, 10, 4);  // direct-summation path
    CHECK(max_coef_err(dft2(odd), ref::dft2_naive(odd)) < 1e-8);
}

TEST_CASE("fft and direct paths agree") {
    ImageF img = random_image(32, 32, 5);
    CHECK(max_coef_err(dft2(img), dft2_direct(img)) < 1e-8);
}

TEST_CASE("inverse transform recovers the input") {
    for (auto [w, h] : {std::pair{32, 32}, std::pair{24, 18}}) {
        ImageF img = random_image(w, h, 11);
        ImageF back = idft2(dft2(img));
        double num = 0, den = 0;
        for (size_t i = 0; i < img.size(); ++i) {
            num += (back.data[i] - img.data[i]) * (back.data[i] - img.data[i]);
            den += img.data[i] * img.data[i];
        }
        CHECK(std::sqrt(num / den) < 1e-9);
    }
}

TEST_CASE("dft2 is linear") {
    ImageF x = random_image(16, 16, 21), y = random_image(16, 16, 22);
    ImageF combo(16, 16);
    const double a = 2.5, b = -0.75;
    for (size_t i = 0; i < combo.size(); ++i)
        combo.data[i] = a * x.data[i] + b * y.data[i];
    Spectrum2D sx = dft2(x), sy = dft2(y), sc = dft2(combo);
    for (size_t i = 0; i < sc.coef.size(); ++i)
        CHECK(std::abs(sc.coef[i] - (a * sx.coef[i] + b * sy.coef[i])) < 1e-9);
}

TEST_CASE("naive magnitude statistic") {
    SUBCASE("constant image scores zero") {
        ImageF img(16, 16, 0.9);
        CHECK(naive_magnitude_stat(dft2(img)) < 1e-9);
    }
    SUBCASE("high-frequency cosine outscores a low-frequency one") {
        double lo = naive_magnitude_stat(dft2(cosine_image(32, 1)));
        double hi = naive_magnitude_stat(dft2(cosine_image(32, 12)));
        CHECK(hi > lo);
    }
    SUBCASE("matches a direct bin loop") {
        ImageF img = random_image(24, 16, 31);
        Spectrum2D spec = dft2(img);
        double expect = 0;
        for (int v = 0; v < 16; ++v)
            for (int u = 0; u < 24; ++u) {
                if (u == 0 && v == 0) continue;
                int cu = (24 - u) % 24, cv = (16 - v) % 16;
                double w = (cu == u && cv == v) ? 1.0 : 0.5;
                expect += w * bin_radius(u, v, 24, 16) * std::abs(spec.at(u, v));
            }
        CHECK(naive_magnitude_stat(spec) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("highpass energy at T=0 is total energy (Parseval)") {
    ImageF img = random_image(32, 32, 41);
    double spatial = 0;
    for (double v : img.data) spatial += v * v;
    CHECK(highpass_energy(dft2(img), 0.0) ==
          doctest::Approx(spatial).epsilon(1e-12));
}

TEST_CASE("highpass energy of a constant image vanishes for T > 0") {
    ImageF img(16, 16, 0.4);
    CHECK(highpass_energy(dft2(img), 0.01) < 1e-18);
}

TEST_CASE("highpass energy equals the filter-then-sum oracle on a step edge") {
    const int n = 64;
    ImageF img(n, n, 0.0);
    for (int y = 0; y < n; ++y)
        for (int x = n / 2; x < n; ++x) img.at(x, y) = 1.0;
    Spectrum2D spec = dft2(img);
    const double T = 0.1;
    double direct = highpass_energy(spec, T);

    // Oracle: zero the low band, invert, sum squares in the spatial domain.
    Spectrum2D filtered = spec;
    for (int v = 0; v < n; ++v)
        for (int u = 0; u < n; ++u)
            if (bin_radius(u, v, n, n) < T) filtered.at(u, v) = {0, 0};
    ImageF high = idft2(filtered);
    double spatial = 0;
    for (double x : high.data) spatial += x * x;
    CHECK(direct == doctest::Approx(spatial).epsilon(1e-6));
}

TEST_CASE("highpass energy rejects out-of-range thresholds") {
    ImageF img(8, 8, 0.0);
    Spectrum2D spec = dft2(img);
    CHECK_THROWS_AS(highpass_energy(spec, 0.5), Error);
    CHECK_THROWS_AS(highpass_energy(spec, -0.1), Error);
}

TEST_CASE("highpass energy is non-increasing in T") {
    ImageF img = random_image(32, 32, 51);
    Spectrum2D spec = dft2(img);
    double prev = std::numeric_limits<double>::infinity();
    for (double t = 0.0; t < 0.5; t += 0.035) {
        double e = highpass_energy(spec, t);
        CHECK(e <= prev + 1e-15);
        prev = e;
    }
}

TEST_CASE("low frequencies dominate the naive statistic on 1/f^2 images") {
    for (uint64_t seed : {61ull, 62ull}) {
        ImageF img = pink_image(64, seed);
        Spectrum2D spec = dft2(img);
        double low_stat = 0, total_stat = 0;
        int64_t low_bins = 0, total_bins = 0;
        for (int v = 0; v < 64; ++v)
            for (int u = 0; u < 64; ++u) {
                if (u == 0 && v == 0) continue;
                int cu = (64 - u) % 64, cv = (64 - v) % 64;
                double w = (cu == u && cv == v) ? 1.0 : 0.5;
                double rho = bin_radius(u, v, 64, 64);
                double c = w * rho * std::abs(spec.at(u, v));
                total_stat += c;
                ++total_bins;
                if (rho < 0.1) {
                    low_stat += c;
                    ++low_bins;
                }
            }
        double stat_share = low_stat / total_stat;
        double bin_share = double(low_bins) / double(total_bins);
        CHECK(stat_share > bin_share);
    }
}

TEST_CASE("edge count correlates with highpass energy on noise corpora") {
    // One noise pattern at increasing amplitudes; thresholds sit at the edge
    // onset so the count grows smoothly through the corpus.
    std::vector<ImageF> corpus;
    const int n = 96;
    for (int i = 0; i < 20; ++i) {
        double amplitude = 0.4 + 0.6 * double(i) / 19.0;
        ImageF img(n, n);
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x)
                img.at(x, y) =
                    0.5 + amplitude * (rng::uniform01(70, uint64_t(y) * uint64_t(n) +
                                                              uint64_t(x),
                                                      0) -
                                       0.5);
        corpus.push_back(std::move(img));
    }
    double r = edge_energy_correlation(corpus, 0.1, CannyParams{1.0, 0.03, 0.08});
    CHECK(r > 0.9);
}

TEST_CASE("identical images make a degenerate corpus") {
    std::vector<ImageF> corpus(10, random_image(32, 32, 81));
    try {
        edge_energy_correlation(corpus, 0.1, CannyParams{});
        FAIL("expected DegenerateCorpus");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::DegenerateCorpus);
    }
}

TEST_CASE("square-perimeter corpus supports the edge proxy claim") {
    std::vector<ImageF> corpus;
    const int n = 128;
    for (int i = 0; i < 20; ++i) {
        int side = 4 + i * 5;  // perimeters 16 .. 396
        ImageF img(n, n, 0.0);
        int lo = (n - side) / 2;
        for (int y = lo; y < lo + side; ++y)
            for (int x = lo; x < lo + side; ++x) img.at(x, y) = 1.0;
        corpus.push_back(std::move(img));
    }
    double r = edge_energy_correlation(corpus, 0.1, CannyParams{});
    CHECK(r > 0.9);
}

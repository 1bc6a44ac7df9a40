#pragma once

// Shared helpers for the test suites: random fixtures and small independent
// oracles (Jacobi eigensolver, homogeneous projection).

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>

#include "splatgeom/core.hpp"
#include "splatgeom/image.hpp"
#include "splatgeom/splat_model.hpp"

namespace testutil {

using namespace splatgeom;

inline SplatRaw random_splat(uint64_t seed, uint64_t index) {
    SplatRaw s;
    for (int a = 0; a < 3; ++a) {
        s.position[a] = float(rng::uniform(seed, index, 0 + uint64_t(a), -10, 10));
        s.normal[a] = 0.0f;
        s.sh_dc[a] = float(rng::uniform(seed, index, 3 + uint64_t(a), -1, 1));
        s.log_scales[a] = float(rng::uniform(seed, index, 6 + uint64_t(a), -2, 1));
    }
    double q[3];
    rng::normal3(seed, index, 9, q);
    double w = rng::normal1(seed, index, 13);
    double n = std::sqrt(w * w + q[0] * q[0] + q[1] * q[1] + q[2] * q[2]);
    s.rotation = {float(w / n), float(q[0] / n), float(q[1] / n), float(q[2] / n)};
    s.opacity_logit = float(rng::uniform(seed, index, 15, -4, 4));
    for (int a = 0; a < 45; ++a)
        s.sh_rest[size_t(a)] = float(rng::uniform(seed, index, 16 + uint64_t(a), -1, 1));
    return s;
}

inline SplatCloud random_cloud(uint64_t seed, size_t n, bool has_rest) {
    SplatCloud cloud;
    cloud.has_sh_rest = has_rest;
    for (size_t i = 0; i < n; ++i) {
        SplatRaw s = random_splat(seed, i);
        if (!has_rest) s.sh_rest.fill(0.0f);
        cloud.splats.push_back(s);
    }
    return cloud;
}

// Eigenvalues of a symmetric 3x3 matrix by the cyclic Jacobi method,
// descending order. Independent of the library's Cholesky path.
inline std::array<double, 3> jacobi_eigenvalues(Mat3 a) {
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = std::abs(a(0, 1)) + std::abs(a(0, 2)) + std::abs(a(1, 2));
        if (off < 1e-14 * (std::abs(a(0, 0)) + std::abs(a(1, 1)) + std::abs(a(2, 2)) + 1e-300))
            break;
        for (int p = 0; p < 3; ++p)
            for (int q = p + 1; q < 3; ++q) {
                if (std::abs(a(p, q)) < 1e-300) continue;
                double theta = (a(q, q) - a(p, p)) / (2 * a(p, q));
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1));
                double c = 1 / std::sqrt(t * t + 1);
                double s = t * c;
                Mat3 r = Mat3::identity();
                r(p, p) = c;
                r(q, q) = c;
                r(p, q) = s;
                r(q, p) = -s;
                a = r.transpose() * a * r;
            }
    }
    std::array<double, 3> ev{a(0, 0), a(1, 1), a(2, 2)};
    std::sort(ev.begin(), ev.end(), std::greater<>());
    return ev;
}

// Projection through an explicit 4x4 homogeneous pipeline.
inline std::optional<PixelProjection> project_homogeneous(const CameraModel& cam,
                                                          const Vec3& p) {
    double m[4][4] = {};
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m[r][c] = cam.rotation(r, c);
    m[0][3] = cam.translation.x;
    m[1][3] = cam.translation.y;
    m[2][3] = cam.translation.z;
    m[3][3] = 1;
    double hom[4] = {p.x, p.y, p.z, 1};
    double out[4] = {};
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) out[r] += m[r][c] * hom[c];
    if (out[2] <= 0) return std::nullopt;
    double k[3][3] = {{cam.fx, 0, cam.cx}, {0, cam.fy, cam.cy}, {0, 0, 1}};
    double pix[3] = {};
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) pix[r] += k[r][c] * out[c];
    return PixelProjection{pix[0] / pix[2], pix[1] / pix[2], out[2]};
}

// Unique scratch directory under the build tree.
inline std::string scratch_dir(const std::string& name) {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / ("splatgeom_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

inline ImageF random_image(int w, int h, uint64_t seed) {
    ImageF img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            img.at(x, y) =
                rng::uniform01(seed, uint64_t(y) * uint64_t(w) + uint64_t(x), 0);
    return img;
}

}  // namespace testutil

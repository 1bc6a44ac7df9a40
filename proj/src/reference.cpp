#include "splatgeom/reference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace splatgeom::ref {

namespace {

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

std::vector<double> gaussian_kernel(double sigma) {
    int radius = int(std::ceil(3.0 * sigma));
    std::vector<double> k(size_t(2 * radius + 1));
    double sum = 0;
    for (int i = -radius; i <= radius; ++i) {
        double v = std::exp(-0.5 * double(i) * double(i) / (sigma * sigma));
        k[size_t(i + radius)] = v;
        sum += v;
    }
    for (double& v : k) v /= sum;
    return k;
}

}  // namespace

EdgeMap canny_edges(const ImageF& gray, double sigma, double low, double high) {
    if (!(sigma > 0)) raise(Errc::BadThresholds, "sigma must be positive");
    if (!(low > 0) || !(low < high)) raise(Errc::BadThresholds, "need 0 < low < high");

    const int w = gray.width, h = gray.height;
    EdgeMap out;
    out.width = w;
    out.height = h;
    out.edges.assign(size_t(w) * size_t(h), 0);
    if (w == 0 || h == 0) return out;

    const auto kern = gaussian_kernel(sigma);
    const int radius = int(kern.size() / 2);

    ImageF tmp(w, h), blur(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0;
            for (int k = -radius; k <= radius; ++k)
                s += gray.at(clampi(x + k, 0, w - 1), y) * kern[size_t(k + radius)];
            tmp.at(x, y) = s;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0;
            for (int k = -radius; k <= radius; ++k)
                s += tmp.at(x, clampi(y + k, 0, h - 1)) * kern[size_t(k + radius)];
            blur.at(x, y) = s;
        }

    std::vector<double> mag(size_t(w) * size_t(h));
    std::vector<uint8_t> dir(size_t(w) * size_t(h));
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            auto px = [&](int xx, int yy) {
                return blur.at(clampi(xx, 0, w - 1), clampi(yy, 0, h - 1));
            };
            double gx = (px(x + 1, y - 1) + 2 * px(x + 1, y) + px(x + 1, y + 1)) -
                        (px(x - 1, y - 1) + 2 * px(x - 1, y) + px(x - 1, y + 1));
            double gy = (px(x - 1, y + 1) + 2 * px(x, y + 1) + px(x + 1, y + 1)) -
                        (px(x - 1, y - 1) + 2 * px(x, y - 1) + px(x + 1, y - 1));
            size_t i = size_t(y) * size_t(w) + size_t(x);
            mag[i] = std::sqrt(gx * gx + gy * gy) / 8.0;
            double ang = std::atan2(gy, gx);
            if (ang < 0) ang += std::numbers::pi;
            dir[i] = uint8_t(
                int(std::floor((ang + std::numbers::pi / 8) / (std::numbers::pi / 4))) % 4);
        }

    static const int dx4[4] = {1, 1, 0, -1};
    static const int dy4[4] = {0, 1, 1, 1};
    std::vector<uint8_t> cls(size_t(w) * size_t(h), 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            size_t i = size_t(y) * size_t(w) + size_t(x);
            double m = mag[i];
            if (m < low) continue;
            int d = dir[i];
            double fwd = mag[size_t(clampi(y + dy4[d], 0, h - 1)) * size_t(w) +
                             size_t(clampi(x + dx4[d], 0, w - 1))];
            double bwd = mag[size_t(clampi(y - dy4[d], 0, h - 1)) * size_t(w) +
                             size_t(clampi(x - dx4[d], 0, w - 1))];
            if (m > bwd && m >= fwd) cls[i] = (m >= high) ? 2 : 1;
        }

    // Fixpoint sweeps: promote weak pixels adjacent to accepted ones.
    for (size_t i = 0; i < cls.size(); ++i) out.edges[i] = cls[i] == 2;
    bool changed = true;
    while (changed) {
        changed = false;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                size_t i = size_t(y) * size_t(w) + size_t(x);
                if (cls[i] != 1 || out.edges[i]) continue;
                bool touch = false;
                for (int oy = -1; oy <= 1 && !touch; ++oy)
                    for (int ox = -1; ox <= 1 && !touch; ++ox) {
                        if (ox == 0 && oy == 0) continue;
                        int nx = x + ox, ny = y + oy;
                        if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                        touch = out.edges[size_t(ny) * size_t(w) + size_t(nx)] != 0;
                    }
                if (touch) {
                    out.edges[i] = 1;
                    changed = true;
                }
            }
    }

    int64_t count = 0;
    for (uint8_t v : out.edges) count += v;
    out.count = count;
    return out;
}

GcLossResult gc_loss(const std::vector<GaussianSplat>& splats,
                     const std::vector<int>& labels,
                     const std::map<int, ShapeTarget>& targets,
                     const PenaltyConfig& penalty,
                     const std::vector<uint8_t>* live_mask) {
    GcLossResult out;
    out.grad_log_scales.assign(splats.size(), Vec3{});
    int64_t labeled = 0;
    for (size_t i = 0; i < splats.size(); ++i) {
        if (live_mask && !(*live_mask)[i]) continue;
        if (labels[i] != 0) ++labeled;
    }
    if (labeled == 0) return out;

    double total = 0;
    for (size_t i = 0; i < splats.size(); ++i) {
        if (live_mask && !(*live_mask)[i]) continue;
        int label = labels[i];
        if (label == 0) continue;
        auto it = targets.find(label);
        if (it == targets.end())
            raise(Errc::MissingTarget, "no shape target for label " + std::to_string(label));
        const ShapeTarget& t = it->second;
        const Vec3& s = splats[i].scales;

        int idx[3] = {0, 1, 2};
        std::stable_sort(idx, idx + 3, [&](int a, int b) { return s[a] > s[b]; });
        double a1 = s[idx[0]] / s[idx[2]];
        double a2 = s[idx[1]] / s[idx[2]];
        double e1 = t.a1 - a1, e2 = t.a2 - a2;
        total += penalty_value(penalty, e1) + penalty_value(penalty, e2);
        double r1 = penalty_deriv(penalty, e1), r2 = penalty_deriv(penalty, e2);
        Vec3 g;
        g[idx[0]] += -r1 * a1;
        g[idx[1]] += -r2 * a2;
        g[idx[2]] += r1 * a1 + r2 * a2;
        out.grad_log_scales[i] = g * (1.0 / double(labeled));
    }
    out.loss = total / double(labeled);
    return out;
}

ChamferStats chamfer_bruteforce(const PointCloud& a, const PointCloud& b, bool squared) {
    if (a.points.empty() || b.points.empty())
        raise(Errc::EmptyCloud, "chamfer needs two non-empty clouds");
    std::vector<double> dist;
    dist.reserve(a.points.size() + b.points.size());
    auto nearest = [](const Vec3& q, const std::vector<Vec3>& pts) {
        double best = std::numeric_limits<double>::infinity();
        for (const Vec3& p : pts) best = std::min(best, (p - q).norm2());
        return best;
    };
    for (const Vec3& p : a.points)
        dist.push_back(squared ? nearest(p, b.points) : std::sqrt(nearest(p, b.points)));
    for (const Vec3& p : b.points)
        dist.push_back(squared ? nearest(p, a.points) : std::sqrt(nearest(p, a.points)));

    ChamferStats stats;
    stats.count = dist.size();
    double sum = 0;
    for (double d : dist) sum += d;
    stats.mean = sum / double(dist.size());
    double var = 0;
    for (double d : dist) var += (d - stats.mean) * (d - stats.mean);
    stats.var = var / double(dist.size());
    return stats;
}

Spectrum2D dft2_naive(const ImageF& image) {
    const int w = image.width, h = image.height;
    Spectrum2D spec;
    spec.width = w;
    spec.height = h;
    spec.coef.assign(size_t(w) * size_t(h), {0, 0});
    for (int v = 0; v < h; ++v)
        for (int u = 0; u < w; ++u) {
            std::complex<double> s{0, 0};
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    double ang = -2.0 * std::numbers::pi *
                                 (double(u) * double(x) / double(w) +
                                  double(v) * double(y) / double(h));
                    s += image.at(x, y) * std::complex<double>{std::cos(ang), std::sin(ang)};
                }
            spec.at(u, v) = s;
        }
    return spec;
}

double ssim(const ImageRGB& a, const ImageRGB& b) {
    if (a.width != b.width || a.height != b.height)
        raise(Errc::DimensionMismatch, "image dimensions differ");
    constexpr int win = 11;
    constexpr double sigma = 1.5;
    constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    if (a.width < win || a.height < win)
        raise(Errc::DimensionMismatch, "SSIM needs images at least 11x11");

    double weight[win][win];
    double wsum = 0;
    for (int i = 0; i < win; ++i)
        for (int j = 0; j < win; ++j) {
            double dy = i - win / 2, dx = j - win / 2;
            weight[i][j] = std::exp(-0.5 * (dx * dx + dy * dy) / (sigma * sigma));
            wsum += weight[i][j];
        }
    for (int i = 0; i < win; ++i)
        for (int j = 0; j < win; ++j) weight[i][j] /= wsum;

    double total = 0;
    for (int c = 0; c < 3; ++c) {
        double acc = 0;
        int64_t windows = 0;
        for (int y = 0; y + win <= a.height; ++y)
            for (int x = 0; x + win <= a.width; ++x) {
                double ma = 0, mb = 0, maa = 0, mbb = 0, mab = 0;
                for (int i = 0; i < win; ++i)
                    for (int j = 0; j < win; ++j) {
                        double va = a.at(x + j, y + i, c);
                        double vb = b.at(x + j, y + i, c);
                        double wgt = weight[i][j];
                        ma += wgt * va;
                        mb += wgt * vb;
                        maa += wgt * va * va;
                        mbb += wgt * vb * vb;
                        mab += wgt * va * vb;
                    }
                double var_a = maa - ma * ma, var_b = mbb - mb * mb, cov = mab - ma * mb;
                acc += ((2 * ma * mb + c1) * (2 * cov + c2)) /
                       ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
                ++windows;
            }
        total += acc / double(windows);
    }
    return total / 3.0;
}

double density_dense(const std::vector<GaussianSplat>& splats, const Vec3& x) {
    if (splats.empty()) raise(Errc::EmptyCloud, "density of an empty cloud");
    double total = 0;
    for (const GaussianSplat& g : splats) {
        Mat3 inv = inverse3(g.covariance);
        Vec3 d = x - g.mean;
        double q = d.dot(inv * d);
        total += g.opacity * std::exp(-0.5 * q);
    }
    return total;
}

PointCloud sample_points_serial(const std::vector<GaussianSplat>& splats, int64_t n,
                                uint64_t seed, const std::vector<uint8_t>* live_mask) {
    std::vector<double> probs = opacity_multinomial(splats, live_mask);
    AliasTable table(probs);
    std::vector<Mat3> lower(splats.size());
    for (size_t i = 0; i < splats.size(); ++i) {
        if (live_mask && !(*live_mask)[i]) continue;
        if (!cholesky3(splats[i].covariance, lower[i]))
            raise(Errc::SingularCovariance,
                  "covariance of splat " + std::to_string(i) + " is not SPD");
    }
    PointCloud out;
    out.points.resize(size_t(n));
    out.source_index.resize(size_t(n));
    for (int64_t k = 0; k < n; ++k) {
        double u1 = rng::uniform01(seed, uint64_t(k), 0);
        double u2 = rng::uniform01(seed, uint64_t(k), 1);
        uint32_t s = table.sample(u1, u2);
        double z[3];
        rng::normal3(seed, uint64_t(k), 2, z);
        const Mat3& l = lower[s];
        Vec3 d{l(0, 0) * z[0], l(1, 0) * z[0] + l(1, 1) * z[1],
               l(2, 0) * z[0] + l(2, 1) * z[1] + l(2, 2) * z[2]};
        out.points[size_t(k)] = splats[s].mean + d;
        out.source_index[size_t(k)] = int32_t(s);
    }
    return out;
}

}  // namespace splatgeom::ref

#include "splatgeom/semantics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace splatgeom {

SemanticMask load_mask(const std::string& path, int label_count) {
    LabelImage img = load_label_png(path);
    SemanticMask mask;
    mask.width = img.width;
    mask.height = img.height;
    mask.labels = std::move(img.data);
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x) {
            uint16_t v = mask.at(x, y);
            if (int(v) >= label_count)
                raise(Errc::LabelOutOfRange,
                      path + ": label " + std::to_string(v) + " at (" + std::to_string(x) +
                          "," + std::to_string(y) + ") exceeds label_count " +
                          std::to_string(label_count));
        }
    return mask;
}

namespace {

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

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

}  // namespace

EdgeMap canny_edges(const ImageF& gray, double sigma, double low, double high) {
    if (!(sigma > 0)) raise(Errc::BadThresholds, "sigma must be positive");
    if (!(low > 0) || !(low < high))
        raise(Errc::BadThresholds, "need 0 < low < high");

    const int w = gray.width, h = gray.height;
    EdgeMap out;
    out.width = w;
    out.height = h;
    out.edges.assign(size_t(w) * size_t(h), 0);
    if (w == 0 || h == 0) return out;

    const std::vector<double> kern = gaussian_kernel(sigma);
    const int radius = int(kern.size() / 2);

    // Separable Gaussian blur, replicate borders.
    ImageF tmp(w, h), blur(w, h);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0;
            for (int k = -radius; k <= radius; ++k)
                s += gray.at(clampi(x + k, 0, w - 1), y) * kern[size_t(k + radius)];
            tmp.at(x, y) = s;
        }
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0;
            for (int k = -radius; k <= radius; ++k)
                s += tmp.at(x, clampi(y + k, 0, h - 1)) * kern[size_t(k + radius)];
            blur.at(x, y) = s;
        }

    // Sobel, magnitude scaled by 1/8.
    std::vector<double> mag(size_t(w) * size_t(h), 0.0);
    std::vector<uint8_t> dir(size_t(w) * size_t(h), 0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
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
            // Quantize gradient direction to 4 bins: 0=E, 1=NE, 2=N, 3=NW.
            double ang = std::atan2(gy, gx);
            if (ang < 0) ang += std::numbers::pi;
            int bin = int(std::floor((ang + std::numbers::pi / 8) / (std::numbers::pi / 4))) % 4;
            dir[i] = uint8_t(bin);
        }

    // Non-maximum suppression along the quantized direction. On a two-pixel
    // plateau the pixel whose backward neighbor is strictly smaller survives.
    static const int dx4[4] = {1, 1, 0, -1};
    static const int dy4[4] = {0, 1, 1, 1};
    std::vector<uint8_t> cls(size_t(w) * size_t(h), 0);  // 0 none, 1 weak, 2 strong
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            size_t i = size_t(y) * size_t(w) + size_t(x);
            double m = mag[i];
            if (m < low) continue;
            int d = dir[i];
            int fx = clampi(x + dx4[d], 0, w - 1), fy = clampi(y + dy4[d], 0, h - 1);
            int bx = clampi(x - dx4[d], 0, w - 1), by = clampi(y - dy4[d], 0, h - 1);
            double fwd = mag[size_t(fy) * size_t(w) + size_t(fx)];
            double bwd = mag[size_t(by) * size_t(w) + size_t(bx)];
            if (m > bwd && m >= fwd) cls[i] = (m >= high) ? 2 : 1;
        }

    // Hysteresis: BFS from strong pixels through weak ones, 8-connected.
    std::vector<size_t> stack;
    stack.reserve(1024);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            size_t i = size_t(y) * size_t(w) + size_t(x);
            if (cls[i] != 2 || out.edges[i]) continue;
            out.edges[i] = 1;
            stack.push_back(i);
            while (!stack.empty()) {
                size_t j = stack.back();
                stack.pop_back();
                int jx = int(j % size_t(w)), jy = int(j / size_t(w));
                for (int oy = -1; oy <= 1; ++oy)
                    for (int ox = -1; ox <= 1; ++ox) {
                        if (ox == 0 && oy == 0) continue;
                        int nx = jx + ox, ny = jy + oy;
                        if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                        size_t n = size_t(ny) * size_t(w) + size_t(nx);
                        if (cls[n] != 0 && !out.edges[n]) {
                            out.edges[n] = 1;
                            stack.push_back(n);
                        }
                    }
            }
        }

    int64_t count = 0;
    for (uint8_t v : out.edges) count += v;
    out.count = count;
    return out;
}

std::map<int, int64_t> group_edge_counts(const EdgeMap& edges, const SemanticMask& mask) {
    if (edges.width != mask.width || edges.height != mask.height)
        raise(Errc::DimensionMismatch, "edge map and mask dimensions differ");
    std::map<int, int64_t> counts;
    for (int y = 0; y < edges.height; ++y)
        for (int x = 0; x < edges.width; ++x)
            if (edges.at(x, y)) counts[mask.at(x, y)]++;
    return counts;
}

std::map<int, int64_t> label_pixel_counts(const SemanticMask& mask) {
    std::map<int, int64_t> counts;
    for (uint16_t v : mask.labels) counts[v]++;
    return counts;
}

std::vector<GroupComplexity> aggregate_perplexity(
    const std::vector<ImageGroupStats>& per_image, const std::vector<int>& labels) {
    if (per_image.empty())
        raise(Errc::InvalidArgument, "perplexity aggregation needs at least one image");
    std::vector<GroupComplexity> groups;
    groups.reserve(labels.size());
    for (int label : labels) {
        GroupComplexity g;
        g.label = label;
        for (const auto& img : per_image) {
            int64_t e = 0;
            if (auto it = img.edge_counts.find(label); it != img.edge_counts.end())
                e = it->second;
            g.per_image_edges[img.image_id] = e;
            g.total_edges += e;
            if (auto it = img.pixel_counts.find(label); it != img.pixel_counts.end())
                g.pixel_count += it->second;
        }
        g.empty = g.pixel_count == 0;
        g.unit_perplexity =
            g.empty ? 0.0 : double(g.total_edges) / double(g.pixel_count);
        groups.push_back(std::move(g));
    }
    return groups;
}

ShapeTarget target_shape(double unit_perplexity, double k1, double k2, double a_max) {
    if (!(k1 > k2) || !(k2 > 0))
        raise(Errc::BadConstants, "need k1 > k2 > 0");
    if (!(a_max > 1)) raise(Errc::BadConstants, "a_max must exceed 1");
    ShapeTarget t;
    if (unit_perplexity <= 0) {
        t.a1 = t.a2 = a_max;  // edge-free group, disk-like
        return t;
    }
    double t_small = 1.0 / (k1 * unit_perplexity);
    double t_large = 1.0 / (k2 * unit_perplexity);
    t.a1 = std::clamp(t_large, 1.0, a_max);
    t.a2 = std::clamp(t_small, 1.0, a_max);
    return t;
}

int64_t expected_splat_count(int64_t total_edges, double kappa) {
    if (!(kappa > 0)) raise(Errc::BadConstants, "kappa must be positive");
    if (total_edges <= 0) return 0;
    return std::max<int64_t>(1, llround(kappa * double(total_edges)));
}

void finalize_group_targets(std::vector<GroupComplexity>& groups, double k1, double k2,
                            double a_max, double kappa) {
    for (auto& g : groups) {
        ShapeTarget t = target_shape(g.unit_perplexity, k1, k2, a_max);
        g.target_a1 = t.a1;
        g.target_a2 = t.a2;
        g.expected_count = expected_splat_count(g.total_edges, kappa);
    }
}

LabelAssignment assign_labels(const SplatCloud& cloud,
                              const std::vector<CameraModel>& cameras,
                              const std::vector<SemanticMask>& masks,
                              AssignPolicy policy, int view_index,
                              bool keep_histograms) {
    if (cameras.size() != masks.size())
        raise(Errc::PairingMismatch,
              std::to_string(cameras.size()) + " cameras vs " +
                  std::to_string(masks.size()) + " masks");
    for (size_t v = 0; v < cameras.size(); ++v)
        if (cameras[v].width != masks[v].width || cameras[v].height != masks[v].height)
            raise(Errc::DimensionMismatch,
                  "camera/mask dimensions differ in view " + std::to_string(v));
    if (policy == AssignPolicy::PerView &&
        (view_index < 0 || size_t(view_index) >= cameras.size()))
        raise(Errc::InvalidArgument, "view_index out of range");

    const size_t n = cloud.count();
    LabelAssignment out;
    out.per_splat_label.assign(n, 0);
    if (keep_histograms) out.vote_histograms.resize(n);

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (long i = 0; i < long(n); ++i) {
        const auto& p = cloud.splats[size_t(i)].position;
        Vec3 mean{p[0], p[1], p[2]};
        std::map<int, int> votes;
        auto observe = [&](size_t v) -> std::optional<int> {
            auto proj = project_mean(cameras[v], mean);
            if (!proj) return std::nullopt;
            int ix = pixel_index_x(proj->px), iy = pixel_index_y(proj->py);
            if (ix < 0 || ix >= masks[v].width || iy < 0 || iy >= masks[v].height)
                return std::nullopt;
            return int(masks[v].at(ix, iy));
        };
        if (policy == AssignPolicy::PerView) {
            auto label = observe(size_t(view_index));
            out.per_splat_label[size_t(i)] = label.value_or(0);
            if (keep_histograms && label) votes[*label] = 1;
        } else {
            for (size_t v = 0; v < cameras.size(); ++v)
                if (auto label = observe(v)) votes[*label]++;
            int best_label = 0, best_votes = 0;
            for (const auto& [label, n_votes] : votes)
                if (n_votes > best_votes) {  // map order breaks ties toward lower ids
                    best_votes = n_votes;
                    best_label = label;
                }
            out.per_splat_label[size_t(i)] = best_label;
        }
        if (keep_histograms) out.vote_histograms[size_t(i)] = std::move(votes);
    }
    return out;
}

}  // namespace splatgeom

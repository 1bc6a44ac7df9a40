#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "splatgeom/core.hpp"
#include "splatgeom/splat_model.hpp"

#include <json.hpp>

namespace splatgeom {

struct PointCloud {
    std::vector<Vec3> points;
    std::vector<int32_t> source_index;  // originating splat, when known
    std::vector<Vec3> colors;           // optional

    size_t size() const { return points.size(); }
};

struct Aabb {
    Vec3 min, max;

    bool contains(const Vec3& p) const {
        return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y &&
               p.z >= min.z && p.z <= max.z;
    }
};

// --- Density -----------------------------------------------------------------

// Unnormalized opacity-weighted density: sum_i alpha_i *
// exp(-0.5 (x-mu_i)^T Sigma_i^{-1} (x-mu_i)), via per-splat Cholesky solves.
double density(const std::vector<GaussianSplat>& splats, const Vec3& x);

// --- Sampling ----------------------------------------------------------------

// Stage-1 categorical weight: opacity alone, or opacity times the Gaussian
// volume factor sqrt(det covariance) for the ablation variant.
enum class SampleWeight { Alpha, AlphaVolume };

// P(i) = alpha_i / sum(alpha) over live splats; throws AllZeroOpacity when
// the sum vanishes.
std::vector<double> opacity_multinomial(const std::vector<GaussianSplat>& splats,
                                        const std::vector<uint8_t>* live_mask = nullptr,
                                        SampleWeight weight = SampleWeight::Alpha);

// Alias-method categorical sampler; construction is deterministic.
class AliasTable {
public:
    explicit AliasTable(std::span<const double> probabilities);
    uint32_t sample(double u1, double u2) const;
    size_t size() const { return prob_.size(); }

private:
    std::vector<double> prob_;
    std::vector<uint32_t> alias_;
};

// Two-stage hierarchical sampling: a categorical draw over opacities picks
// the splat, then the point is mu + L*z with L the Cholesky factor of the
// covariance. Point k depends only on (seed, k), so output is bit-identical
// on any thread count.
PointCloud sample_points(const std::vector<GaussianSplat>& splats, int64_t n,
                         uint64_t seed, const std::vector<uint8_t>* live_mask = nullptr,
                         SampleWeight weight = SampleWeight::Alpha);

// Baseline: one point per live splat with opacity >= min_alpha, at the mean.
PointCloud mean_extraction(const std::vector<GaussianSplat>& splats, double min_alpha,
                           const std::vector<uint8_t>* live_mask = nullptr);

PointCloud crop(const PointCloud& pc, const Aabb& box);

// --- Chamfer -----------------------------------------------------------------

// Exact 3D nearest-neighbor queries on an immutable median-split tree.
class KdTree3 {
public:
    explicit KdTree3(std::span<const Vec3> points);

    // Index of the nearest point and its squared distance.
    size_t nearest(const Vec3& query, double& best_d2) const;
    size_t size() const { return points_.size(); }

private:
    struct Node {
        int32_t left = -1, right = -1;
        uint32_t begin = 0, end = 0;  // leaf range into order_
        double split = 0;
        int8_t axis = -1;             // -1 marks a leaf
    };
    void search(int32_t node, const Vec3& q, size_t& best, double& best_d2) const;
    int32_t build(uint32_t begin, uint32_t end);

    std::vector<Vec3> points_;
    std::vector<uint32_t> order_;
    std::vector<Node> nodes_;
    int32_t root_ = -1;
};

struct ChamferStats {
    double mean = 0;
    double var = 0;      // population variance over the pooled distances
    size_t count = 0;    // |a| + |b| pooled nearest-neighbor distances
};

// Symmetric point-to-nearest-point Chamfer statistics over the pooled
// distance multiset. `squared` pools squared distances instead.
ChamferStats chamfer(const PointCloud& a, const PointCloud& b, bool squared = false);

// --- Reporting ---------------------------------------------------------------

struct MethodStats {
    double mean = 0, var = 0;
};

// scene -> method -> stats
using ReportData = std::map<std::string, std::map<std::string, MethodStats>>;

// Aligned text table, one row per scene, (mean, var) per method to three
// decimals; the best mean per scene is starred.
std::string report_table(const ReportData& results);
nlohmann::json report_to_json(const ReportData& results);

// --- Point-cloud I/O ---------------------------------------------------------

// Binary little-endian PLY with float32 x,y,z.
std::vector<uint8_t> write_points_ply(const PointCloud& pc);
void save_points_ply(const std::string& path, const PointCloud& pc);

// Binary little-endian PLY (float/double x,y,z among arbitrary scalar
// properties) or whitespace-separated XYZ text, chosen by extension.
PointCloud load_points(const std::string& path);

Aabb parse_aabb(const std::string& csv);  // "x0,y0,z0,x1,y1,z1"

}  // namespace splatgeom

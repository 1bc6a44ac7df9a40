#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "splatgeom/core.hpp"
#include "splatgeom/image.hpp"
#include "splatgeom/splat_model.hpp"

namespace splatgeom {

// Per-pixel integer labels; 0 is reserved for "no caption".
struct SemanticMask {
    int width = 0, height = 0;
    std::vector<uint16_t> labels;

    uint16_t at(int x, int y) const { return labels[size_t(y) * size_t(width) + size_t(x)]; }
    uint16_t& at(int x, int y) { return labels[size_t(y) * size_t(width) + size_t(x)]; }
};

SemanticMask load_mask(const std::string& path, int label_count);

struct EdgeMap {
    int width = 0, height = 0;
    std::vector<uint8_t> edges;
    int64_t count = 0;

    bool at(int x, int y) const { return edges[size_t(y) * size_t(width) + size_t(x)] != 0; }
};

struct CannyParams {
    double sigma = 1.0;
    double low = 0.05;
    double high = 0.15;
};

// Full Canny pipeline: Gaussian blur (radius ceil(3*sigma)), Sobel gradients
// (magnitude scaled by 1/8 so a unit step is O(0.4)), non-maximum suppression
// over 4 quantized directions, double-threshold hysteresis with
// 8-connectivity. Borders replicate.
EdgeMap canny_edges(const ImageF& gray, double sigma, double low, double high);

inline EdgeMap canny_edges(const ImageF& gray, const CannyParams& p) {
    return canny_edges(gray, p.sigma, p.low, p.high);
}

// Edge pixels bucketed by the mask label at their coordinate.
std::map<int, int64_t> group_edge_counts(const EdgeMap& edges, const SemanticMask& mask);

std::map<int, int64_t> label_pixel_counts(const SemanticMask& mask);

// Per-image raw counts feeding the perplexity aggregation.
struct ImageGroupStats {
    std::string image_id;
    std::map<int, int64_t> edge_counts;
    std::map<int, int64_t> pixel_counts;
};

struct GroupComplexity {
    int label = 0;
    std::map<std::string, int64_t> per_image_edges;
    int64_t total_edges = 0;      // P_j
    int64_t pixel_count = 0;
    double unit_perplexity = 0;   // p_j = P_j / pixel_count, 0 when empty
    double target_a1 = 1, target_a2 = 1;
    int64_t expected_count = 0;   // N_j
    bool empty = false;           // no pixels carried this label
};

// Sums edge and pixel counts across images for each requested label.
std::vector<GroupComplexity> aggregate_perplexity(
    const std::vector<ImageGroupStats>& per_image, const std::vector<int>& labels);

struct ShapeTarget {
    double a1 = 1, a2 = 1;
};

// Per-group shape expectation from unit perplexity: raw ratios 1/(k1*p) and
// 1/(k2*p), clamped to [1, a_max]; an edge-free group gets (a_max, a_max).
ShapeTarget target_shape(double unit_perplexity, double k1, double k2, double a_max);

// N_j = round(kappa * P_j), at least 1 whenever P_j > 0.
int64_t expected_splat_count(int64_t total_edges, double kappa);

// Fills targets and expected counts on aggregated groups.
void finalize_group_targets(std::vector<GroupComplexity>& groups, double k1, double k2,
                            double a_max, double kappa);

enum class AssignPolicy { PerView, Majority };

struct LabelAssignment {
    std::vector<int> per_splat_label;                // 0 = unassigned
    std::vector<std::map<int, int>> vote_histograms; // filled when requested
};

// Projects each splat mean onto the paired masks. PerView takes the label
// seen in `view_index`; Majority takes the mode over all views with ties
// broken toward the lower label id. Splats never visible get label 0.
LabelAssignment assign_labels(const SplatCloud& cloud,
                              const std::vector<CameraModel>& cameras,
                              const std::vector<SemanticMask>& masks,
                              AssignPolicy policy, int view_index = 0,
                              bool keep_histograms = false);

}  // namespace splatgeom

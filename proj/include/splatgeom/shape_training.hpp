#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "splatgeom/core.hpp"
#include "splatgeom/image.hpp"
#include "splatgeom/semantics.hpp"
#include "splatgeom/splat_model.hpp"

namespace splatgeom {

struct LossWeights {
    double lambda_gc = 0.2;
    double lambda_dssim = 0.2;
    double lambda_l1 = 0.6;
};

enum class PenaltyKind { Huber, SmoothAbs };

// Symmetric convex penalty with rho(0) = 0 and continuous derivative.
// Huber: quadratic inside |t| <= delta, linear outside. SmoothAbs:
// sqrt(t^2 + delta^2) - delta.
struct PenaltyConfig {
    PenaltyKind kind = PenaltyKind::Huber;
    double delta = 1.0;
};

double penalty_value(const PenaltyConfig& p, double t);
double penalty_deriv(const PenaltyConfig& p, double t);

PenaltyKind parse_penalty_kind(const std::string& name);

struct GcLossResult {
    double loss = 0;
    std::vector<Vec3> grad_log_scales;  // d(mean loss)/d(log_scales), per splat
};

// Geometric-complexity loss: mean over labeled live splats of
// rho(target_a1 - a1) + rho(target_a2 - a2) on sorted-scale ratios, with the
// gradient routed through the sort. Unlabeled splats contribute nothing.
GcLossResult gc_loss(const std::vector<GaussianSplat>& splats,
                     const std::vector<int>& labels,
                     const std::map<int, ShapeTarget>& targets,
                     const PenaltyConfig& penalty,
                     const std::vector<uint8_t>* live_mask = nullptr);

double total_loss(double gc, double dssim, double l1, const LossWeights& w);

// --- Image metrics -----------------------------------------------------------

// SSIM with an 11x11 Gaussian window (sigma 1.5), C1=0.01^2, C2=0.03^2,
// valid-window convention, channel-averaged. Images must be at least 11x11.
double ssim(const ImageRGB& a, const ImageRGB& b);
double dssim(const ImageRGB& a, const ImageRGB& b);
double l1_distance(const ImageRGB& a, const ImageRGB& b);
double psnr(const ImageRGB& a, const ImageRGB& b);  // +inf for identical inputs

// --- Pruning -----------------------------------------------------------------

struct TrainState {
    int iteration = 0;
    std::vector<uint8_t> live_mask;
    double learning_rate = 0.01;
    int warmup_iters = 0;
    int end_iter = 0;     // iteration at which the target count is reached
    int64_t target_total = 0;
};

// Live-count target: initial during warmup, linear decay to target_total at
// end_iter, constant afterwards. Monotone non-increasing in iteration.
int64_t prune_schedule(const TrainState& state, int64_t initial_count);

// Marks the lowest-opacity live splats dead until `target_live` remain.
// Ties break toward the lower index; no-op when target >= live count.
void prune(std::span<const double> opacities, std::vector<uint8_t>& live_mask,
           int64_t target_live);

// --- Shape fitting -----------------------------------------------------------

struct FitOptions {
    double lr = 0.01;
    int iters = 2000;
    uint64_t seed = 0;
    PenaltyConfig penalty{};
    bool prune_enabled = false;
    int warmup_iters = 0;
    int end_iter = 0;
    int64_t target_total = 0;
};

struct FitTraceRow {
    int iteration = 0;
    double gc_loss = 0;
    int64_t live_count = 0;
};

struct FitResult {
    SplatCloud cloud;
    std::vector<uint8_t> live_mask;
    std::vector<FitTraceRow> trace;  // row 0 is the pre-update state
    double final_loss = 0;
};

// Gradient descent on log_scales only (means, rotations, opacities frozen),
// one backtracking line search per labeled splat per iteration so every
// per-splat loss is non-increasing. Optional opacity-ranked pruning on the
// linear schedule.
FitResult fit_shapes(const SplatCloud& cloud, const std::vector<int>& labels,
                     const std::map<int, ShapeTarget>& targets, const FitOptions& opt);

}  // namespace splatgeom

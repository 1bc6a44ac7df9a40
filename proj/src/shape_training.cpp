#include "splatgeom/shape_training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace splatgeom {

double penalty_value(const PenaltyConfig& p, double t) {
    double d = p.delta;
    switch (p.kind) {
        case PenaltyKind::Huber: {
            double a = std::abs(t);
            return a <= d ? 0.5 * t * t : d * (a - 0.5 * d);
        }
        case PenaltyKind::SmoothAbs:
            return std::sqrt(t * t + d * d) - d;
    }
    return 0;
}

double penalty_deriv(const PenaltyConfig& p, double t) {
    double d = p.delta;
    switch (p.kind) {
        case PenaltyKind::Huber:
            return std::abs(t) <= d ? t : (t > 0 ? d : -d);
        case PenaltyKind::SmoothAbs:
            return t / std::sqrt(t * t + d * d);
    }
    return 0;
}

PenaltyKind parse_penalty_kind(const std::string& name) {
    if (name == "huber") return PenaltyKind::Huber;
    if (name == "smooth-abs") return PenaltyKind::SmoothAbs;
    raise(Errc::InvalidArgument, "unknown penalty kind '" + name + "'");
}

namespace {

// Indices of scales sorted descending; ties rank the lower index first.
std::array<int, 3> sort_scale_indices(const Vec3& s) {
    std::array<int, 3> idx{0, 1, 2};
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return s[a] > s[b]; });
    return idx;
}

struct SplatGcTerm {
    double loss = 0;
    Vec3 grad;  // d(term)/d(log_scales), unscaled by the mean
};

SplatGcTerm splat_gc_term(const Vec3& scales, const ShapeTarget& target,
                          const PenaltyConfig& penalty) {
    SplatGcTerm out;
    auto idx = sort_scale_indices(scales);
    double a1 = scales[idx[0]] / scales[idx[2]];
    double a2 = scales[idx[1]] / scales[idx[2]];
    double e1 = target.a1 - a1;
    double e2 = target.a2 - a2;
    out.loss = penalty_value(penalty, e1) + penalty_value(penalty, e2);
    double r1 = penalty_deriv(penalty, e1);
    double r2 = penalty_deriv(penalty, e2);
    // d a / d log_scale routes through the sorted slots.
    out.grad[idx[0]] += -r1 * a1;
    out.grad[idx[1]] += -r2 * a2;
    out.grad[idx[2]] += r1 * a1 + r2 * a2;
    return out;
}

const ShapeTarget* find_target(const std::map<int, ShapeTarget>& targets, int label) {
    auto it = targets.find(label);
    return it == targets.end() ? nullptr : &it->second;
}

}  // namespace

GcLossResult gc_loss(const std::vector<GaussianSplat>& splats,
                     const std::vector<int>& labels,
                     const std::map<int, ShapeTarget>& targets,
                     const PenaltyConfig& penalty,
                     const std::vector<uint8_t>* live_mask) {
    if (labels.size() != splats.size())
        raise(Errc::DimensionMismatch, "labels and splats differ in length");
    if (live_mask && live_mask->size() != splats.size())
        raise(Errc::DimensionMismatch, "live mask and splats differ in length");
    if (!(penalty.delta > 0)) raise(Errc::InvalidArgument, "penalty delta must be positive");

    const size_t n = splats.size();
    GcLossResult out;
    out.grad_log_scales.assign(n, Vec3{});
    std::vector<double> contrib(n, 0.0);

    // Validate targets up front so the error reports a label, not a race.
    int64_t labeled = 0;
    for (size_t i = 0; i < n; ++i) {
        if (live_mask && !(*live_mask)[i]) continue;
        int label = labels[i];
        if (label == 0) continue;
        if (!find_target(targets, label))
            raise(Errc::MissingTarget, "no shape target for label " + std::to_string(label));
        ++labeled;
    }
    if (labeled == 0) return out;

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (long i = 0; i < long(n); ++i) {
        if (live_mask && !(*live_mask)[size_t(i)]) continue;
        int label = labels[size_t(i)];
        if (label == 0) continue;
        const ShapeTarget* t = find_target(targets, label);
        SplatGcTerm term = splat_gc_term(splats[size_t(i)].scales, *t, penalty);
        contrib[size_t(i)] = term.loss;
        out.grad_log_scales[size_t(i)] = term.grad * (1.0 / double(labeled));
    }
    out.loss = det_sum(contrib) / double(labeled);
    return out;
}

double total_loss(double gc, double dssim, double l1, const LossWeights& w) {
    if (!std::isfinite(gc) || !std::isfinite(dssim) || !std::isfinite(l1))
        raise(Errc::NonFiniteValue, "loss inputs must be finite");
    return w.lambda_gc * gc + w.lambda_dssim * dssim + w.lambda_l1 * l1;
}

// --- Image metrics -----------------------------------------------------------

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kSsimC1 = 0.01 * 0.01;
constexpr double kSsimC2 = 0.03 * 0.03;

std::array<double, kSsimWindow> ssim_kernel() {
    std::array<double, kSsimWindow> k{};
    double sum = 0;
    for (int i = 0; i < kSsimWindow; ++i) {
        double d = double(i - kSsimWindow / 2);
        k[size_t(i)] = std::exp(-0.5 * d * d / (kSsimSigma * kSsimSigma));
        sum += k[size_t(i)];
    }
    for (double& v : k) v /= sum;
    return k;
}

void check_same_shape(const ImageRGB& a, const ImageRGB& b) {
    if (a.width != b.width || a.height != b.height)
        raise(Errc::DimensionMismatch, "image dimensions differ");
}

// Horizontal then vertical pass of the separable window over one channel,
// valid region only. `get` maps (x, y) to the value being averaged.
template <typename F>
std::vector<double> window_filter(int w, int h, F&& get) {
    static const auto kern = ssim_kernel();
    const int r = kSsimWindow / 2;
    const int ow = w - 2 * r, oh = h - 2 * r;
    std::vector<double> tmp(size_t(ow) * size_t(h));
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0;
            for (int k = 0; k < kSsimWindow; ++k) s += kern[size_t(k)] * get(x + k, y);
            tmp[size_t(y) * size_t(ow) + size_t(x)] = s;
        }
    std::vector<double> out(size_t(ow) * size_t(oh));
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0;
            for (int k = 0; k < kSsimWindow; ++k)
                s += kern[size_t(k)] * tmp[size_t(y + k) * size_t(ow) + size_t(x)];
            out[size_t(y) * size_t(ow) + size_t(x)] = s;
        }
    return out;
}

}  // namespace

double ssim(const ImageRGB& a, const ImageRGB& b) {
    check_same_shape(a, b);
    if (a.width < kSsimWindow || a.height < kSsimWindow)
        raise(Errc::DimensionMismatch, "SSIM needs images at least 11x11");
    const int w = a.width, h = a.height;
    const int r = kSsimWindow / 2;
    const int ow = w - 2 * r, oh = h - 2 * r;

    std::vector<double> channel_means(3);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int c = 0; c < 3; ++c) {
        auto ax = [&](int x, int y) { return a.at(x, y, c); };
        auto bx = [&](int x, int y) { return b.at(x, y, c); };
        auto mu_a = window_filter(w, h, ax);
        auto mu_b = window_filter(w, h, bx);
        auto raw_aa = window_filter(w, h, [&](int x, int y) { return ax(x, y) * ax(x, y); });
        auto raw_bb = window_filter(w, h, [&](int x, int y) { return bx(x, y) * bx(x, y); });
        auto raw_ab = window_filter(w, h, [&](int x, int y) { return ax(x, y) * bx(x, y); });
        std::vector<double> smap(size_t(ow) * size_t(oh));
        for (size_t i = 0; i < smap.size(); ++i) {
            double ma = mu_a[i], mb = mu_b[i];
            double va = raw_aa[i] - ma * ma;
            double vb = raw_bb[i] - mb * mb;
            double cov = raw_ab[i] - ma * mb;
            smap[i] = ((2 * ma * mb + kSsimC1) * (2 * cov + kSsimC2)) /
                      ((ma * ma + mb * mb + kSsimC1) * (va + vb + kSsimC2));
        }
        channel_means[size_t(c)] = det_mean(smap);
    }
    return (channel_means[0] + channel_means[1] + channel_means[2]) / 3.0;
}

double dssim(const ImageRGB& a, const ImageRGB& b) { return (1.0 - ssim(a, b)) / 2.0; }

double l1_distance(const ImageRGB& a, const ImageRGB& b) {
    check_same_shape(a, b);
    std::vector<double> diff(a.data.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (long i = 0; i < long(a.data.size()); ++i)
        diff[size_t(i)] = std::abs(a.data[size_t(i)] - b.data[size_t(i)]);
    return det_mean(diff);
}

double psnr(const ImageRGB& a, const ImageRGB& b) {
    check_same_shape(a, b);
    std::vector<double> sq(a.data.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (long i = 0; i < long(a.data.size()); ++i) {
        double d = a.data[size_t(i)] - b.data[size_t(i)];
        sq[size_t(i)] = d * d;
    }
    double mse = det_mean(sq);
    if (mse <= 0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

// --- Pruning -----------------------------------------------------------------

int64_t prune_schedule(const TrainState& state, int64_t initial_count) {
    if (state.warmup_iters < 0) raise(Errc::BadSchedule, "warmup must be non-negative");
    if (state.target_total < 0) raise(Errc::BadSchedule, "target must be non-negative");
    if (state.target_total > initial_count)
        raise(Errc::BadSchedule, "target exceeds initial count");
    if (state.iteration <= state.warmup_iters) return initial_count;
    if (state.iteration >= state.end_iter) return state.target_total;
    double f = double(state.iteration - state.warmup_iters) /
               double(state.end_iter - state.warmup_iters);
    return llround(double(initial_count) +
                   (double(state.target_total) - double(initial_count)) * f);
}

void prune(std::span<const double> opacities, std::vector<uint8_t>& live_mask,
           int64_t target_live) {
    if (live_mask.size() != opacities.size())
        raise(Errc::DimensionMismatch, "live mask and opacities differ in length");
    std::vector<size_t> live;
    live.reserve(opacities.size());
    for (size_t i = 0; i < live_mask.size(); ++i)
        if (live_mask[i]) live.push_back(i);
    int64_t to_kill = int64_t(live.size()) - target_live;
    if (to_kill <= 0) return;
    std::sort(live.begin(), live.end(), [&](size_t a, size_t b) {
        if (opacities[a] != opacities[b]) return opacities[a] < opacities[b];
        return a < b;
    });
    for (int64_t k = 0; k < to_kill; ++k) live_mask[live[size_t(k)]] = 0;
}

// --- Shape fitting -----------------------------------------------------------

FitResult fit_shapes(const SplatCloud& cloud, const std::vector<int>& labels,
                     const std::map<int, ShapeTarget>& targets, const FitOptions& opt) {
    if (!(opt.lr > 0)) raise(Errc::InvalidArgument, "learning rate must be positive");
    if (!(opt.penalty.delta > 0))
        raise(Errc::InvalidArgument, "penalty delta must be positive");
    if (labels.size() != cloud.count())
        raise(Errc::DimensionMismatch, "labels and cloud differ in length");

    FitResult result;
    result.cloud = cloud;
    result.live_mask.assign(cloud.count(), 1);

    const size_t n = cloud.count();
    std::vector<double> opacities(n);
    std::vector<Vec3> scales(n);
    std::vector<uint8_t> changed(n, 0);
    std::vector<const ShapeTarget*> splat_target(n, nullptr);
    for (size_t i = 0; i < n; ++i) {
        const SplatRaw& raw = result.cloud.splats[i];
        opacities[i] = 1.0 / (1.0 + std::exp(-double(raw.opacity_logit)));
        scales[i] = {std::exp(double(raw.log_scales[0])),
                     std::exp(double(raw.log_scales[1])),
                     std::exp(double(raw.log_scales[2]))};
        if (labels[i] != 0) {
            auto it = targets.find(labels[i]);
            if (it == targets.end())
                raise(Errc::MissingTarget,
                      "no shape target for label " + std::to_string(labels[i]));
            splat_target[i] = &it->second;
        }
    }

    std::vector<double> loss_buf(n);
    auto labeled_live_loss = [&]() {
        int64_t labeled = 0;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(+ : labeled)
#endif
        for (long i = 0; i < long(n); ++i) {
            bool counted = result.live_mask[size_t(i)] && splat_target[size_t(i)];
            loss_buf[size_t(i)] =
                counted
                    ? splat_gc_term(scales[size_t(i)], *splat_target[size_t(i)], opt.penalty)
                          .loss
                    : 0.0;
            labeled += counted;
        }
        return labeled == 0 ? 0.0 : det_sum(loss_buf) / double(labeled);
    };

    auto live_count = [&]() {
        int64_t c = 0;
        for (uint8_t v : result.live_mask) c += v;
        return c;
    };

    const int64_t initial_count = int64_t(n);
    result.trace.push_back({0, labeled_live_loss(), live_count()});

    for (int iter = 1; iter <= opt.iters; ++iter) {
        if (opt.prune_enabled) {
            TrainState state;
            state.iteration = iter;
            state.warmup_iters = opt.warmup_iters;
            state.end_iter = opt.end_iter;
            state.target_total = opt.target_total;
            int64_t target = prune_schedule(state, initial_count);
            prune(opacities, result.live_mask, target);
        }

        // One backtracking descent step per labeled live splat. Updates are
        // independent, so the result is identical on any thread count.
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (long i = 0; i < long(n); ++i) {
            if (!result.live_mask[size_t(i)] || !splat_target[size_t(i)]) continue;
            const ShapeTarget& target = *splat_target[size_t(i)];
            Vec3& s = scales[size_t(i)];
            SplatGcTerm term = splat_gc_term(s, target, opt.penalty);
            double g2 = term.grad.norm2();
            if (g2 < 1e-28) continue;
            Vec3 logs{std::log(s.x), std::log(s.y), std::log(s.z)};
            double step = opt.lr;
            for (int bt = 0; bt < 40; ++bt) {
                Vec3 trial_logs = logs - step * term.grad;
                Vec3 trial{std::exp(trial_logs.x), std::exp(trial_logs.y),
                           std::exp(trial_logs.z)};
                double trial_loss =
                    splat_gc_term(trial, target, opt.penalty).loss;
                if (trial_loss <= term.loss - 1e-4 * step * g2) {
                    s = trial;
                    changed[size_t(i)] = 1;
                    break;
                }
                step *= 0.5;
            }
        }

        result.trace.push_back({iter, labeled_live_loss(), live_count()});
    }

    // Write the fitted scales back into the raw records.
    for (size_t i = 0; i < n; ++i) {
        if (!changed[i]) continue;
        SplatRaw& raw = result.cloud.splats[i];
        raw.log_scales[0] = float(std::log(scales[i].x));
        raw.log_scales[1] = float(std::log(scales[i].y));
        raw.log_scales[2] = float(std::log(scales[i].z));
    }
    result.final_loss = result.trace.back().gc_loss;
    return result;
}

}  // namespace splatgeom

// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "splatgeom/pipeline.hpp"
#include "splatgeom/reference.hpp"
#include "splatgeom/spectrum.hpp"

using namespace splatgeom;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void run_criterion(int number, const std::string& name, double budget_s,
                   const std::function<bool(std::string&)>& body) {
    using clock_type = std::chrono::steady_clock;
    std::string detail;
    bool ok = false;
    auto t0 = clock_type::now();
    try {
        ok = body(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    double secs = std::chrono::duration<double>(clock_type::now() - t0).count();
    if (secs > budget_s) {
        ok = false;
        detail += (detail.empty() ? "" : "; ") + std::string("over time budget");
    }
    std::printf("[%s] criterion %2d: %-28s (%6.2f s)%s%s\n", ok ? "PASS" : "FAIL", number,
                name.c_str(), secs, detail.empty() ? "" : "  -- ", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

SplatRaw random_splat(uint64_t seed, uint64_t index) {
    SplatRaw s;
    for (int a = 0; a < 3; ++a) {
        s.position[a] = float(rng::uniform(seed, index, uint64_t(a), -10, 10));
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

SplatCloud random_cloud(uint64_t seed, size_t n, bool rest) {
    SplatCloud cloud;
    cloud.has_sh_rest = rest;
    for (size_t i = 0; i < n; ++i) {
        SplatRaw s = random_splat(seed, i);
        if (!rest) s.sh_rest.fill(0.0f);
        cloud.splats.push_back(s);
    }
    return cloud;
}

ImageF random_image(int w, int h, uint64_t seed) {
    ImageF img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            img.at(x, y) = rng::uniform01(seed, uint64_t(y) * uint64_t(w) + uint64_t(x), 0);
    return img;
}

ImageRGB random_rgb(int w, int h, uint64_t seed) {
    ImageRGB img(w, h);
    for (size_t i = 0; i < img.data.size(); ++i) img.data[i] = rng::uniform01(seed, i, 0);
    return img;
}

std::vector<uint8_t> slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) raise(Errc::IoFailure, "cannot open " + path);
    return std::vector<uint8_t>((std::istreambuf_iterator<char>(f)),
                                std::istreambuf_iterator<char>());
}

std::string scratch(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("splatgeom_acceptance_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

// --- criteria ----------------------------------------------------------------

bool criterion_ply_roundtrip(std::string& detail) {
    for (uint64_t seed = 0; seed < 1000; ++seed) {
        bool rest = (seed % 3) == 0;
        SplatCloud cloud = random_cloud(seed, 8 + seed % 40, rest);
        auto bytes = write_splat_ply(cloud);
        SplatCloud parsed = parse_splat_ply(bytes);
        if (!(parsed == cloud)) {
            detail = "cloud mismatch at seed " + std::to_string(seed);
            return false;
        }
        auto again = write_splat_ply(parsed);
        if (again != bytes) {
            detail = "byte mismatch at seed " + std::to_string(seed);
            return false;
        }
    }

    // Reference 3DGS export layout, spelled out explicitly.
    std::ostringstream h;
    h << "ply\nformat binary_little_endian 1.0\nelement vertex 3\n";
    for (const char* p : {"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"})
        h << "property float " << p << "\n";
    for (int i = 0; i < 45; ++i) h << "property float f_rest_" << i << "\n";
    for (const char* p :
         {"opacity", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"})
        h << "property float " << p << "\n";
    h << "end_header\n";
    std::string header = h.str();
    std::vector<uint8_t> bytes(header.begin(), header.end());
    for (int v = 0; v < 3 * 62; ++v) {
        float value = float(v) * 0.125f;
        uint32_t u;
        std::memcpy(&u, &value, 4);
        for (int i = 0; i < 4; ++i) bytes.push_back(uint8_t((u >> (8 * i)) & 0xff));
    }
    SplatCloud parsed = parse_splat_ply(bytes);
    if (parsed.count() != 3 || !parsed.has_sh_rest) {
        detail = "reference layout parse failed";
        return false;
    }
    return true;
}

bool criterion_gradient_check(std::string& detail) {
    PenaltyConfig penalty;
    double worst = 0;
    int config = 0;
    uint64_t draw = 0;
    while (config < 100) {
        ShapeTarget t;
        t.a1 = rng::uniform(501, draw, 0, 2.0, 30.0);
        t.a2 = rng::uniform(501, draw, 1, 1.0, t.a1);
        Vec3 s{std::exp(rng::uniform(501, draw, 2, -1.5, 1.5)),
               std::exp(rng::uniform(501, draw, 3, -1.5, 1.5)),
               std::exp(rng::uniform(501, draw, 4, -1.5, 1.5))};
        ++draw;
        auto [a1, a2] = aspect_ratios(s);
        bool near_kink = std::abs(std::abs(t.a1 - a1) - penalty.delta) < 0.05 ||
                         std::abs(std::abs(t.a2 - a2) - penalty.delta) < 0.05;
        double ss[3] = {s.x, s.y, s.z};
        std::sort(ss, ss + 3);
        if (near_kink || ss[1] / ss[0] < 1.02 || ss[2] / ss[1] < 1.02) continue;
        ++config;

        GaussianSplat g;
        g.scales = s;
        g.rotation = {1, 0, 0, 0};
        g.opacity = 0.5;
        g.covariance = Mat3::identity();
        std::vector<GaussianSplat> splats{g};
        std::vector<int> labels{1};
        std::map<int, ShapeTarget> targets{{1, t}};
        GcLossResult analytic = gc_loss(splats, labels, targets, penalty);
        const double h = 1e-5;
        for (int axis = 0; axis < 3; ++axis) {
            auto eval = [&](double sign) {
                auto copy = splats;
                copy[0].scales[axis] = std::exp(std::log(s[axis]) + sign * h);
                return gc_loss(copy, labels, targets, penalty).loss;
            };
            double fd = (eval(+1) - eval(-1)) / (2 * h);
            double an = analytic.grad_log_scales[0][axis];
            double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-8});
            worst = std::max(worst, rel);
        }
    }
    detail = "max rel err " + std::to_string(worst);
    return worst < 1e-4;
}

bool criterion_shape_convergence(std::string& detail) {
    ShapeTarget busy = target_shape(0.1, 3.0, 1.0, 50.0);
    ShapeTarget flat = target_shape(0.0, 3.0, 1.0, 50.0);
    if (std::abs(busy.a1 - 10.0) > 1e-12 || std::abs(busy.a2 - 10.0 / 3.0) > 1e-12 ||
        std::abs(flat.a1 - 50.0) > 1e-12 || std::abs(flat.a2 - 50.0) > 1e-12) {
        detail = "target_shape disagrees with k1=3, k2=1 arithmetic";
        return false;
    }

    SplatCloud cloud = random_cloud(601, 300, false);
    std::vector<int> labels(cloud.count());
    for (size_t i = 0; i < labels.size(); ++i) labels[i] = 1 + int(i % 2);
    std::map<int, ShapeTarget> targets{{1, busy}, {2, flat}};

    FitOptions opt;
    opt.lr = 0.01;
    opt.iters = 2000;
    FitResult fit = fit_shapes(cloud, labels, targets, opt);
    auto splats = activate_all(fit.cloud);
    double worst = 0;
    for (size_t i = 0; i < splats.size(); ++i) {
        auto [a1, a2] = aspect_ratios(splats[i]);
        const ShapeTarget& t = targets.at(labels[i]);
        worst = std::max(worst, std::abs(a1 - t.a1) / t.a1);
        worst = std::max(worst, std::abs(a2 - t.a2) / t.a2);
    }
    detail = "worst ratio error " + std::to_string(100.0 * worst) + "%";
    return worst < 0.05;
}

bool criterion_parseval(std::string& detail) {
    double worst = 0;
    for (uint64_t seed = 0; seed < 100; ++seed) {
        int w = 16 + int(seed % 3) * 8;
        int hgt = 16 + int(seed % 5) * 4;
        ImageF img = random_image(w, hgt, 701 + seed);
        Spectrum2D spec = dft2(img);
        double spatial = 0;
        for (double v : img.data) spatial += v * v;
        double spectral = highpass_energy(spec, 0.0);
        worst = std::max(worst, std::abs(spatial - spectral) / spatial);
    }
    if (worst >= 1e-9) {
        detail = "Parseval max rel err " + std::to_string(worst);
        return false;
    }

    // High-pass route against the filter-then-spatial-sum oracle.
    const int n = 64;
    ImageF step(n, n, 0.0);
    for (int y = 0; y < n; ++y)
        for (int x = n / 2; x < n; ++x) step.at(x, y) = 1.0;
    Spectrum2D spec = dft2(step);
    double direct = highpass_energy(spec, 0.1);
    Spectrum2D filtered = spec;
    for (int v = 0; v < n; ++v)
        for (int u = 0; u < n; ++u)
            if (bin_radius(u, v, n, n) < 0.1) filtered.at(u, v) = {0, 0};
    ImageF high = idft2(filtered);
    double spatial = 0;
    for (double v : high.data) spatial += v * v;
    double rel = std::abs(direct - spatial) / spatial;
    detail = "parseval " + std::to_string(worst) + ", filter oracle rel " +
             std::to_string(rel);
    return rel < 1e-6;
}

bool criterion_edge_energy_correlation(std::string& detail) {
    std::vector<ImageF> corpus;
    const int n = 256;
    for (int i = 0; i < 50; ++i) {
        int side = 4 + int(std::lround(double(i) * 124.0 / 49.0));  // perimeter 16..512
        ImageF img(n, n, 0.0);
        int lo = (n - side) / 2;
        for (int y = lo; y < lo + side; ++y)
            for (int x = lo; x < lo + side; ++x) img.at(x, y) = 1.0;
        corpus.push_back(std::move(img));
    }
    double r = edge_energy_correlation(corpus, 0.1, CannyParams{});
    detail = "pearson r " + std::to_string(r);
    return r > 0.9;
}

bool criterion_sampling_statistics(std::string& detail) {
    SplatRaw raw;
    raw.position = {10, 0, 0};
    raw.log_scales = {float(std::log(0.8)), float(std::log(0.4)), float(std::log(0.2))};
    raw.rotation = {0.9f, 0.1f, -0.3f, 0.2f};
    GaussianSplat second = activate(raw);
    second.opacity = 0.1;
    GaussianSplat first;
    first.mean = {0, 0, 0};
    first.scales = {0.5, 0.5, 0.5};
    first.rotation = {1, 0, 0, 0};
    first.opacity = 0.9;
    first.covariance = Mat3::identity();
    for (int i = 0; i < 3; ++i) first.covariance(i, i) = 0.25;
    std::vector<GaussianSplat> splats{first, second};

    const int64_t n = 100000;
    PointCloud pc = sample_points(splats, n, 7);
    if (pc.points.size() != size_t(n)) {
        detail = "sample count mismatch";
        return false;
    }
    int64_t c0 = 0;
    for (int32_t s : pc.source_index) c0 += (s == 0);
    double sigma = std::sqrt(double(n) * 0.9 * 0.1);
    double deviation = std::abs(double(c0) - 0.9 * double(n));
    if (deviation >= 3 * sigma) {
        detail = "splat-0 share off by " + std::to_string(deviation / sigma) + " sigma";
        return false;
    }

    double worst_frob = 0;
    for (int splat_id = 0; splat_id < 2; ++splat_id) {
        Vec3 mean{};
        int64_t count = 0;
        for (size_t k = 0; k < pc.points.size(); ++k)
            if (pc.source_index[k] == splat_id) {
                mean += pc.points[k];
                ++count;
            }
        mean = mean * (1.0 / double(count));
        Mat3 cov{};
        for (size_t k = 0; k < pc.points.size(); ++k) {
            if (pc.source_index[k] != splat_id) continue;
            Vec3 d = pc.points[k] - mean;
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) cov(r, c) += d[r] * d[c];
        }
        for (int i = 0; i < 9; ++i) cov.m[size_t(i)] /= double(count);
        const Mat3& truth = splats[size_t(splat_id)].covariance;
        double num = 0, den = 0;
        for (int i = 0; i < 9; ++i) {
            double d = cov.m[size_t(i)] - truth.m[size_t(i)];
            num += d * d;
            den += truth.m[size_t(i)] * truth.m[size_t(i)];
        }
        worst_frob = std::max(worst_frob, std::sqrt(num / den));
    }
    detail = "share dev " + std::to_string(deviation / sigma) + " sigma, cov err " +
             std::to_string(100 * worst_frob) + "%";
    return worst_frob < 0.05;
}

// Frozen on the first oracle run (scene seed 901, n = 50000, sampling seed 7).
constexpr double kFantasyHierarchicalMean = 0.071582932594425344;
constexpr double kFantasyMeanExtractionMean = 0.20030227442470847;

bool criterion_fantasy_mitigation(std::string& detail) {
    FantasyScene scene = make_fantasy_scene(901, 900, 100, 0.9, 0.05, 5.0);
    auto splats = activate_all(scene.cloud);

    PointCloud hier = sample_points(splats, 50000, 7);
    PointCloud means = mean_extraction(splats, 0.0);
    ChamferStats cd_hier = chamfer(hier, scene.ground_truth);
    ChamferStats cd_mean = chamfer(means, scene.ground_truth);

    detail = "hier " + std::to_string(cd_hier.mean) + " vs mean " +
             std::to_string(cd_mean.mean);
    if (!(cd_hier.mean * 2.0 <= cd_mean.mean)) return false;
    if (kFantasyHierarchicalMean > 0) {
        if (std::abs(cd_hier.mean - kFantasyHierarchicalMean) >
            1e-9 * kFantasyHierarchicalMean)
            return false;
        if (std::abs(cd_mean.mean - kFantasyMeanExtractionMean) >
            1e-9 * kFantasyMeanExtractionMean)
            return false;
    }
    return true;
}

bool criterion_chamfer_oracle(std::string& detail) {
    for (uint64_t pair = 0; pair < 20; ++pair) {
        PointCloud a, b;
        for (size_t i = 0; i < 500; ++i) {
            a.points.push_back({rng::uniform(801 + pair, i, 0, -10, 10),
                                rng::uniform(801 + pair, i, 1, -10, 10),
                                rng::uniform(801 + pair, i, 2, -10, 10)});
            b.points.push_back({rng::uniform(851 + pair, i, 0, -10, 10),
                                rng::uniform(851 + pair, i, 1, -10, 10),
                                rng::uniform(851 + pair, i, 2, -10, 10)});
        }
        ChamferStats fast = chamfer(a, b);
        ChamferStats brute = ref::chamfer_bruteforce(a, b);
        if (std::abs(fast.mean - brute.mean) > 1e-12 ||
            std::abs(fast.var - brute.var) > 1e-12) {
            detail = "kd vs brute mismatch at pair " + std::to_string(pair);
            return false;
        }
        ChamferStats self = chamfer(a, a);
        if (self.mean != 0.0 || self.var != 0.0) {
            detail = "chamfer(a,a) not exactly zero";
            return false;
        }
    }
    return true;
}

bool criterion_prune_schedule(std::string& detail) {
    TrainState st;
    st.warmup_iters = 6000;
    st.end_iter = 30000;
    st.target_total = 400;
    st.iteration = 6000;
    bool ok = prune_schedule(st, 1000) == 1000;
    st.iteration = 18000;  // midpoint
    ok = ok && prune_schedule(st, 1000) == 700;
    st.iteration = 30000;
    ok = ok && prune_schedule(st, 1000) == 400;
    if (!ok) {
        detail = "schedule points off the linear ramp";
        return false;
    }

    const size_t n = 10000;
    std::vector<double> opacities(n);
    for (size_t i = 0; i < n; ++i) opacities[i] = rng::uniform01(901, i, 0);
    std::vector<uint8_t> live(n, 1);
    prune(opacities, live, 4000);
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (opacities[a] != opacities[b]) return opacities[a] > opacities[b];
        return a > b;
    });
    for (size_t k = 0; k < 4000; ++k)
        if (!live[order[k]]) {
            detail = "survivor set disagrees with the full sort";
            return false;
        }
    for (size_t k = 4000; k < n; ++k)
        if (live[order[k]]) {
            detail = "non-survivor kept";
            return false;
        }
    return true;
}

bool criterion_metric_sanity(std::string& detail) {
    ImageRGB a = random_rgb(24, 20, 1001);
    if (dssim(a, a) != 0.0 || l1_distance(a, a) != 0.0) {
        detail = "identity metrics not exactly zero";
        return false;
    }
    double worst = 0;
    for (uint64_t seed = 0; seed < 10; ++seed) {
        ImageRGB x = random_rgb(20, 16, 1100 + seed);
        ImageRGB y = random_rgb(20, 16, 1200 + seed);
        worst = std::max(worst, std::abs(ssim(x, y) - ref::ssim(x, y)));
    }
    if (worst >= 1e-6) {
        detail = "ssim vs reference off by " + std::to_string(worst);
        return false;
    }
    LossWeights w;  // 0.2 / 0.2 / 0.6
    if (total_loss(1, 1, 1, w) != 1.0) {
        detail = "total_loss(1,1,1) != 1.0";
        return false;
    }
    detail = "ssim max err " + std::to_string(worst);
    return true;
}

bool criterion_end_to_end_determinism(std::string& detail) {
    auto run_once = [&](const std::string& dir) {
        SynthCmdConfig synth;
        synth.options.seed = 7;
        synth.options.views = 3;
        synth.options.image_width = 96;
        synth.options.image_height = 72;
        synth.options.ground_splats = 200;
        synth.options.building_splats = 120;
        synth.options.distractor_splats = 30;
        synth.options.gt_spacing = 0.5;
        synth.out_dir = dir + "/scene";
        cmd_synth(synth);

        ComplexityConfig complexity;
        complexity.masks_dir = synth.out_dir + "/masks";
        complexity.images_dir = synth.out_dir + "/images";
        complexity.captions = synth.out_dir + "/captions.json";
        complexity.output = dir + "/complexity.json";
        cmd_complexity(complexity);

        FitCmdConfig fit;
        fit.splats = synth.out_dir + "/splats.ply";
        fit.cameras = synth.out_dir + "/cameras.json";
        fit.masks_dir = synth.out_dir + "/masks";
        fit.report = complexity.output;
        fit.out_ply = dir + "/fitted.ply";
        fit.out_trace = dir + "/trace.csv";
        fit.iters = 200;
        fit.warmup = 40;
        fit.seed = 7;
        cmd_fit(fit);

        ExtractConfig extract;
        extract.input = fit.out_ply;
        extract.output = dir + "/points.ply";
        extract.n = 20000;
        extract.seed = 7;
        cmd_extract(extract);

        ChamferCmdConfig cham;
        cham.a = extract.output;
        cham.b = synth.out_dir + "/ground_truth.ply";
        cham.output = dir + "/chamfer.json";
        cham.json_stdout = false;
        cmd_chamfer(cham);
    };

    std::string root = scratch("determinism");
    run_once(root + "/run1");
    run_once(root + "/run2");

    std::vector<std::string> files{"scene/splats.ply",
                                   "scene/cameras.json",
                                   "scene/captions.json",
                                   "scene/ground_truth.ply",
                                   "scene/masks/view_000.png",
                                   "scene/masks/view_001.png",
                                   "scene/masks/view_002.png",
                                   "scene/images/view_000.png",
                                   "complexity.json",
                                   "fitted.ply",
                                   "trace.csv",
                                   "points.ply",
                                   "chamfer.json"};
    for (const auto& f : files) {
        if (slurp(root + "/run1/" + f) != slurp(root + "/run2/" + f)) {
            detail = "differs: " + f;
            return false;
        }
    }
    return true;
}

}  // namespace

int main() {
    std::printf("splatgeom acceptance suite (threads: %d)\n", max_threads());
    run_criterion(1, "PLY round-trip", 10, criterion_ply_roundtrip);
    run_criterion(2, "gradient check", 5, criterion_gradient_check);
    run_criterion(3, "shape convergence", 30, criterion_shape_convergence);
    run_criterion(4, "Parseval / high-pass", 20, criterion_parseval);
    run_criterion(5, "edge-energy correlation", 30, criterion_edge_energy_correlation);
    run_criterion(6, "sampling statistics", 10, criterion_sampling_statistics);
    run_criterion(7, "fantasy-surface mitigation", 60, criterion_fantasy_mitigation);
    run_criterion(8, "chamfer oracle", 30, criterion_chamfer_oracle);
    run_criterion(9, "pruning schedule", 5, criterion_prune_schedule);
    run_criterion(10, "metric sanity", 10, criterion_metric_sanity);
    run_criterion(11, "end-to-end determinism", 120, criterion_end_to_end_determinism);

    if (g_failures == 0)
        std::printf("all criteria passed\n");
    else
        std::printf("%d criterion(s) failed\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}

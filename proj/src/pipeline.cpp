#include "splatgeom/pipeline.hpp"

#include "splatgeom/spectrum.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include <json.hpp>

namespace splatgeom {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::string> sorted_pngs(const std::string& dir) {
    if (!fs::is_directory(dir)) raise(Errc::IoFailure, dir + " is not a directory");
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string name = entry.path().filename().string();
        if (name.size() >= 4 && name.substr(name.size() - 4) == ".png")
            names.push_back(name);
    }
    std::sort(names.begin(), names.end());
    return names;
}

json load_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) raise(Errc::IoFailure, "cannot open " + path);
    json doc;
    try {
        f >> doc;
    } catch (const std::exception& e) {
        raise(Errc::IoFailure, "cannot parse " + path + ": " + e.what());
    }
    return doc;
}

void write_json_file(const std::string& path, const json& doc) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) raise(Errc::IoFailure, "cannot open " + path + " for writing");
    f << doc.dump(2) << "\n";
}

ImageF mask_as_gray(const SemanticMask& mask) {
    ImageF img(mask.width, mask.height);
    for (size_t i = 0; i < mask.labels.size(); ++i)
        img.data[i] = double(mask.labels[i]) / 255.0;
    return img;
}

}  // namespace

int cmd_complexity(const ComplexityConfig& cfg) {
    std::vector<std::string> mask_names = sorted_pngs(cfg.masks_dir);
    if (mask_names.empty())
        raise(Errc::IoFailure, "no .png masks found in " + cfg.masks_dir);

    std::map<std::string, std::string> captions;
    if (!cfg.captions.empty()) {
        json doc = load_json_file(cfg.captions);
        for (auto it = doc.begin(); it != doc.end(); ++it)
            captions[it.key()] = it.value().get<std::string>();
    }

    std::vector<ImageGroupStats> stats;
    std::set<int> observed;
    for (const std::string& name : mask_names) {
        SemanticMask mask = load_mask(cfg.masks_dir + "/" + name, cfg.label_count);
        ImageF gray = cfg.images_dir.empty()
                          ? mask_as_gray(mask)
                          : load_gray_png(cfg.images_dir + "/" + name);
        if (gray.width != mask.width || gray.height != mask.height)
            raise(Errc::DimensionMismatch, name + ": image and mask dimensions differ");
        EdgeMap edges = canny_edges(gray, cfg.canny);
        ImageGroupStats s;
        s.image_id = name;
        s.edge_counts = group_edge_counts(edges, mask);
        s.pixel_counts = label_pixel_counts(mask);
        for (const auto& [label, n] : s.pixel_counts)
            if (label != 0) observed.insert(label);
        stats.push_back(std::move(s));
    }

    std::vector<int> labels;
    if (!captions.empty()) {
        for (const auto& [key, caption] : captions) labels.push_back(std::stoi(key));
        std::sort(labels.begin(), labels.end());
    } else {
        labels.assign(observed.begin(), observed.end());
    }

    auto groups = aggregate_perplexity(stats, labels);
    finalize_group_targets(groups, cfg.k1, cfg.k2, cfg.a_max, cfg.kappa);

    json doc;
    doc["constants"] = {{"k1", cfg.k1},
                        {"k2", cfg.k2},
                        {"kappa", cfg.kappa},
                        {"a_max", cfg.a_max},
                        {"canny", {{"sigma", cfg.canny.sigma},
                                   {"low", cfg.canny.low},
                                   {"high", cfg.canny.high}}}};
    json jgroups = json::array();
    for (const auto& g : groups) {
        json jg;
        jg["label"] = g.label;
        auto cap = captions.find(std::to_string(g.label));
        jg["caption"] = cap == captions.end() ? std::string() : cap->second;
        jg["P"] = g.total_edges;
        jg["pixel_count"] = g.pixel_count;
        jg["p"] = g.unit_perplexity;
        jg["target_a1"] = g.target_a1;
        jg["target_a2"] = g.target_a2;
        jg["expected_count"] = g.expected_count;
        jgroups.push_back(jg);
    }
    doc["groups"] = jgroups;
    write_json_file(cfg.output, doc);

    if (cfg.json_stdout) {
        std::cout << doc.dump(2) << "\n";
    } else {
        std::cout << "complexity: " << groups.size() << " group(s) over "
                  << mask_names.size() << " image(s) -> " << cfg.output << "\n";
        for (const auto& g : groups)
            std::printf("  label %d  P=%" PRId64 "  pixels=%" PRId64
                        "  p=%.6g  targets=(%.4g, %.4g)  N=%" PRId64 "\n",
                        g.label, g.total_edges, g.pixel_count, g.unit_perplexity,
                        g.target_a1, g.target_a2, g.expected_count);
    }
    return kExitOk;
}

int cmd_fit(const FitCmdConfig& cfg) {
    if (cfg.weights.lambda_gc < 0 || cfg.weights.lambda_dssim < 0 ||
        cfg.weights.lambda_l1 < 0)
        raise(Errc::InvalidArgument, "loss weights must be non-negative");
    if (cfg.weights.lambda_gc == 0 && cfg.weights.lambda_dssim == 0 &&
        cfg.weights.lambda_l1 == 0)
        raise(Errc::InvalidArgument, "at least one loss weight must be positive");

    SplatCloud cloud = load_splat_ply(cfg.splats);
    std::vector<CameraView> views;
    if (!cfg.colmap_cameras.empty() || !cfg.colmap_images.empty()) {
        if (cfg.colmap_cameras.empty() || cfg.colmap_images.empty())
            raise(Errc::InvalidArgument,
                  "COLMAP import needs both cameras.txt and images.txt");
        views = load_cameras_colmap(cfg.colmap_cameras, cfg.colmap_images);
    } else if (!cfg.cameras.empty()) {
        views = load_cameras_json(cfg.cameras);
    } else {
        raise(Errc::InvalidArgument, "need --cameras or --colmap-cameras/--colmap-images");
    }

    std::vector<CameraModel> cameras;
    std::vector<SemanticMask> masks;
    for (const auto& view : views) {
        cameras.push_back(view.camera);
        // Masks are named after the paired image, always as PNG.
        std::string name = fs::path(view.mask_path).stem().string() + ".png";
        masks.push_back(load_mask(cfg.masks_dir + "/" + name, cfg.label_count));
    }

    json report = load_json_file(cfg.report);
    const bool recompute = cfg.k1 > 0 && cfg.k2 > 0;
    std::map<int, ShapeTarget> targets;
    int64_t expected_total = 0;
    for (const auto& g : report.at("groups")) {
        int label = g.at("label").get<int>();
        targets[label] =
            recompute
                ? target_shape(g.at("p").get<double>(), cfg.k1, cfg.k2, cfg.a_max)
                : ShapeTarget{g.at("target_a1").get<double>(),
                              g.at("target_a2").get<double>()};
        expected_total += g.at("expected_count").get<int64_t>();
    }

    AssignPolicy policy;
    if (cfg.policy == "majority")
        policy = AssignPolicy::Majority;
    else if (cfg.policy == "per-view")
        policy = AssignPolicy::PerView;
    else
        raise(Errc::InvalidArgument, "policy must be 'majority' or 'per-view'");
    LabelAssignment assignment =
        assign_labels(cloud, cameras, masks, policy, cfg.view_index);

    FitOptions opt;
    opt.lr = cfg.lr;
    opt.iters = cfg.iters;
    opt.seed = cfg.seed;
    opt.penalty.kind = parse_penalty_kind(cfg.penalty);
    opt.penalty.delta = cfg.penalty_delta;
    opt.warmup_iters = cfg.warmup;
    opt.end_iter = cfg.iters;
    opt.target_total = std::clamp<int64_t>(expected_total, 0, int64_t(cloud.count()));
    opt.prune_enabled = true;

    FitResult result = fit_shapes(cloud, assignment.per_splat_label, targets, opt);

    // Pruned splats are dropped from the output cloud.
    SplatCloud survivors;
    survivors.has_sh_rest = result.cloud.has_sh_rest;
    for (size_t i = 0; i < result.cloud.count(); ++i)
        if (result.live_mask[i]) survivors.splats.push_back(result.cloud.splats[i]);
    save_splat_ply(cfg.out_ply, survivors);
    {
        std::ofstream trace(cfg.out_trace, std::ios::trunc);
        if (!trace) raise(Errc::IoFailure, "cannot open " + cfg.out_trace + " for writing");
        trace << "iteration,gc_loss,live_count\n";
        char line[96];
        for (const auto& row : result.trace) {
            std::snprintf(line, sizeof line, "%d,%.17g,%" PRId64 "\n", row.iteration,
                          row.gc_loss, row.live_count);
            trace << line;
        }
    }

    bool converged = result.final_loss <= cfg.gc_tol;
    if (cfg.json_stdout) {
        json doc = {{"final_gc_loss", result.final_loss},
                    {"live_count", result.trace.back().live_count},
                    {"iterations", cfg.iters},
                    {"seed", cfg.seed},
                    {"converged", converged},
                    {"output", cfg.out_ply}};
        std::cout << doc.dump(2) << "\n";
    } else {
        std::printf("fit: %d iteration(s), final gc_loss %.6g, live %" PRId64 "/%zu -> %s\n",
                    cfg.iters, result.final_loss, result.trace.back().live_count,
                    cloud.count(), cfg.out_ply.c_str());
    }
    return converged ? kExitOk : kExitQualityGate;
}

int cmd_extract(const ExtractConfig& cfg) {
    SplatCloud cloud = load_splat_ply(cfg.input);
    std::vector<GaussianSplat> splats = activate_all(cloud);

    SampleWeight weight;
    if (cfg.weight == "alpha")
        weight = SampleWeight::Alpha;
    else if (cfg.weight == "alpha-volume")
        weight = SampleWeight::AlphaVolume;
    else
        raise(Errc::InvalidArgument, "weight must be 'alpha' or 'alpha-volume'");

    PointCloud pc;
    if (cfg.mode == "hierarchical") {
        pc = sample_points(splats, cfg.n, cfg.seed, nullptr, weight);
    } else if (cfg.mode == "mean") {
        pc = mean_extraction(splats, cfg.min_alpha);
    } else {
        raise(Errc::InvalidArgument, "mode must be 'hierarchical' or 'mean'");
    }
    if (cfg.crop) pc = crop(pc, *cfg.crop);
    save_points_ply(cfg.output, pc);

    if (cfg.json_stdout) {
        json doc = {{"points", pc.points.size()}, {"mode", cfg.mode}, {"output", cfg.output}};
        std::cout << doc.dump(2) << "\n";
    } else {
        std::printf("extract: %zu point(s) (%s) -> %s\n", pc.points.size(),
                    cfg.mode.c_str(), cfg.output.c_str());
    }
    return kExitOk;
}

int cmd_chamfer(const ChamferCmdConfig& cfg) {
    PointCloud a = load_points(cfg.a);
    PointCloud b = load_points(cfg.b);
    ChamferStats stats = chamfer(a, b, cfg.squared);
    json doc = {{"mean", stats.mean}, {"var", stats.var}, {"count", stats.count}};
    if (!cfg.output.empty()) write_json_file(cfg.output, doc);
    if (cfg.json_stdout)
        std::cout << doc.dump(2) << "\n";
    else
        std::printf("chamfer: mean %.6g  var %.6g  over %zu distance(s)\n", stats.mean,
                    stats.var, stats.count);
    return kExitOk;
}

int cmd_spectrum_validate(const SpectrumValidateConfig& cfg) {
    std::vector<std::string> names = sorted_pngs(cfg.images_dir);
    if (names.size() < 10)
        raise(Errc::InvalidArgument, "spectrum validation needs at least 10 images, found " +
                                         std::to_string(names.size()));
    std::vector<ImageF> corpus;
    corpus.reserve(names.size());
    for (const auto& name : names)
        corpus.push_back(load_gray_png(cfg.images_dir + "/" + name));

    std::vector<SpectrumImageStats> per_image;
    double r = edge_energy_correlation(corpus, cfg.T, cfg.canny, &per_image);

    double max_parseval = 0;
    json jimages = json::object();
    for (size_t i = 0; i < names.size(); ++i) {
        jimages[names[i]] = {{"edge_count", per_image[i].edge_count},
                             {"highpass_energy", per_image[i].highpass_energy},
                             {"naive_stat", per_image[i].naive_stat}};
        max_parseval = std::max(max_parseval, per_image[i].parseval_rel_err);
    }
    json doc = {{"pearson_r", r},
                {"parseval_max_rel_err", max_parseval},
                {"T", cfg.T},
                {"per_image", jimages}};
    write_json_file(cfg.output, doc);
    if (cfg.json_stdout)
        std::cout << doc.dump(2) << "\n";
    else
        std::printf("spectrum-validate: %zu image(s), pearson_r %.4f, parseval max rel err "
                    "%.3g -> %s\n",
                    names.size(), r, max_parseval, cfg.output.c_str());
    return kExitOk;
}

int cmd_synth(const SynthCmdConfig& cfg) {
    SynthScene scene = make_scene(cfg.options);
    write_scene(scene, cfg.out_dir);
    std::printf("synth: %zu splat(s), %zu view(s), %zu ground-truth point(s) -> %s\n",
                scene.cloud.count(), scene.views.size(), scene.ground_truth.points.size(),
                cfg.out_dir.c_str());
    return kExitOk;
}

int cmd_report(const ReportCmdConfig& cfg) {
    json doc = load_json_file(cfg.input);
    ReportData data;
    for (auto scene_it = doc.begin(); scene_it != doc.end(); ++scene_it) {
        for (auto method_it = scene_it.value().begin(); method_it != scene_it.value().end();
             ++method_it) {
            MethodStats stats;
            stats.mean = method_it.value().at("mean").get<double>();
            stats.var = method_it.value().at("var").get<double>();
            data[scene_it.key()][method_it.key()] = stats;
        }
    }
    json out = report_to_json(data);
    if (!cfg.output.empty()) write_json_file(cfg.output, out);
    if (cfg.json_stdout)
        std::cout << out.dump(2) << "\n";
    else
        std::cout << report_table(data);
    return kExitOk;
}

}  // namespace splatgeom

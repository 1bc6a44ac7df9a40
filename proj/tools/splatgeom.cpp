// splatgeom: semantic-geometric toolkit for Gaussian splat clouds.
//
// Subcommands: complexity, fit, extract, chamfer, spectrum-validate, synth,
// report. All randomized commands require an explicit --seed so runs are
// reproducible; --config loads the same options from an INI file, with
// command-line flags taking precedence.

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "splatgeom/pipeline.hpp"

using namespace splatgeom;

int main(int argc, char** argv) {
    CLI::App app{"Geometry toolkit for 3D Gaussian splat clouds"};
    app.require_subcommand(1);
    app.set_config("--config", "", "INI config file; flags override file values");

    int threads = 0;
    if (const char* env = std::getenv("SPLATGEOM_THREADS")) threads = std::atoi(env);
    app.add_option("--threads", threads, "Worker thread cap (default: all cores)")
        ->capture_default_str();

    // --- complexity ---
    ComplexityConfig complexity;
    auto* c = app.add_subcommand("complexity",
                                 "Per-group edge perplexity, shape targets and counts");
    c->add_option("--masks", complexity.masks_dir, "Directory of label-mask PNGs")
        ->required();
    c->add_option("--images", complexity.images_dir,
                  "Directory of grayscale PNGs paired with the masks by filename "
                  "(default: masks reused as images)");
    c->add_option("--captions", complexity.captions, "Captions JSON (label id -> name)");
    c->add_option("--out", complexity.output, "Report JSON path")->capture_default_str();
    c->add_option("--k1", complexity.k1, "Shape constant k1")->capture_default_str();
    c->add_option("--k2", complexity.k2, "Shape constant k2")->capture_default_str();
    c->add_option("--kappa", complexity.kappa,
                  "Splats-per-edge constant (1/image overlap)")
        ->capture_default_str();
    c->add_option("--a-max", complexity.a_max, "Aspect-ratio clamp")->capture_default_str();
    c->add_option("--label-count", complexity.label_count, "Highest label id + 1")
        ->capture_default_str();
    c->add_option("--sigma", complexity.canny.sigma, "Canny blur sigma")
        ->capture_default_str();
    c->add_option("--low", complexity.canny.low, "Canny low threshold")
        ->capture_default_str();
    c->add_option("--high", complexity.canny.high, "Canny high threshold")
        ->capture_default_str();
    c->add_flag("--json", complexity.json_stdout, "Machine-readable stdout");

    // --- fit ---
    FitCmdConfig fit;
    auto* f = app.add_subcommand("fit", "Shape-constraint descent with pruning schedule");
    f->add_option("--splats", fit.splats, "Input splat PLY")->required();
    auto* cam_json = f->add_option("--cameras", fit.cameras, "Cameras JSON");
    f->add_option("--colmap-cameras", fit.colmap_cameras,
                  "COLMAP cameras.txt (use with --colmap-images)")
        ->excludes(cam_json);
    f->add_option("--colmap-images", fit.colmap_images, "COLMAP images.txt");
    f->add_option("--masks", fit.masks_dir, "Directory of label-mask PNGs")->required();
    f->add_option("--report", fit.report, "Complexity report JSON")->required();
    f->add_option("--out-ply", fit.out_ply, "Fitted splat PLY")->capture_default_str();
    f->add_option("--out-trace", fit.out_trace, "Loss-trace CSV")->capture_default_str();
    f->add_option("--k1", fit.k1, "Recompute targets from report p with this k1");
    f->add_option("--k2", fit.k2, "Recompute targets from report p with this k2");
    f->add_option("--a-max", fit.a_max, "Aspect-ratio clamp for recomputed targets")
        ->capture_default_str();
    f->add_option("--lambda-gc", fit.weights.lambda_gc, "GC loss weight")
        ->capture_default_str();
    f->add_option("--lambda-dssim", fit.weights.lambda_dssim, "D-SSIM weight")
        ->capture_default_str();
    f->add_option("--lambda-l1", fit.weights.lambda_l1, "L1 weight")->capture_default_str();
    f->add_option("--warmup", fit.warmup, "Iterations before pruning starts")
        ->capture_default_str();
    f->add_option("--iters", fit.iters, "Descent iterations")->capture_default_str();
    f->add_option("--lr", fit.lr, "Learning rate")->capture_default_str();
    f->add_option("--penalty", fit.penalty, "Penalty kind: huber | smooth-abs")
        ->capture_default_str();
    f->add_option("--delta", fit.penalty_delta, "Penalty knee width")
        ->capture_default_str();
    f->add_option("--seed", fit.seed, "Seed (recorded in outputs)")->required();
    f->add_option("--policy", fit.policy, "Label policy: majority | per-view")
        ->capture_default_str();
    f->add_option("--view-index", fit.view_index, "View for per-view policy")
        ->capture_default_str();
    f->add_option("--gc-tol", fit.gc_tol, "Convergence gate on final gc loss")
        ->capture_default_str();
    f->add_flag("--json", fit.json_stdout, "Machine-readable stdout");

    // --- extract ---
    ExtractConfig extract;
    std::string crop_csv;
    auto* e = app.add_subcommand("extract", "Point-cloud extraction from a splat PLY");
    e->add_option("--input", extract.input, "Splat PLY")->required();
    e->add_option("--output", extract.output, "Points PLY")->capture_default_str();
    e->add_option("--n", extract.n, "Sample count (hierarchical mode)")
        ->capture_default_str();
    e->add_option("--seed", extract.seed, "Sampling seed");
    e->add_option("--mode", extract.mode, "hierarchical | mean")->capture_default_str();
    e->add_option("--weight", extract.weight,
                  "Stage-1 weighting: alpha | alpha-volume (ablation)")
        ->capture_default_str();
    e->add_option("--min-alpha", extract.min_alpha, "Opacity floor for mean mode")
        ->capture_default_str();
    e->add_option("--crop", crop_csv, "Crop box x0,y0,z0,x1,y1,z1");
    e->add_flag("--json", extract.json_stdout, "Machine-readable stdout");

    // --- chamfer ---
    ChamferCmdConfig chamfer_cfg;
    auto* ch = app.add_subcommand("chamfer", "Symmetric Chamfer distance statistics");
    ch->add_option("--a", chamfer_cfg.a, "First point cloud (.ply/.xyz)")->required();
    ch->add_option("--b", chamfer_cfg.b, "Second point cloud (.ply/.xyz)")->required();
    ch->add_option("--out", chamfer_cfg.output, "Result JSON path");
    ch->add_flag("--squared", chamfer_cfg.squared, "Pool squared distances");
    ch->add_flag("--json", chamfer_cfg.json_stdout, "Machine-readable stdout");

    // --- spectrum-validate ---
    SpectrumValidateConfig spectrum_cfg;
    auto* s = app.add_subcommand("spectrum-validate",
                                 "Edge-count vs high-pass-energy correlation over PNGs");
    s->add_option("--images", spectrum_cfg.images_dir, "Directory of PNGs")->required();
    s->add_option("--out", spectrum_cfg.output, "Result JSON path")->capture_default_str();
    s->add_option("--threshold", spectrum_cfg.T, "High-pass cutoff (cycles/pixel)")
        ->capture_default_str();
    s->add_option("--sigma", spectrum_cfg.canny.sigma, "Canny blur sigma")
        ->capture_default_str();
    s->add_option("--low", spectrum_cfg.canny.low, "Canny low threshold")
        ->capture_default_str();
    s->add_option("--high", spectrum_cfg.canny.high, "Canny high threshold")
        ->capture_default_str();
    s->add_flag("--json", spectrum_cfg.json_stdout, "Machine-readable stdout");

    // --- synth ---
    SynthCmdConfig synth_cfg;
    auto* sy = app.add_subcommand("synth", "Seed-determined synthetic scene bundle");
    sy->add_option("--seed", synth_cfg.options.seed, "Scene seed")->required();
    sy->add_option("--out", synth_cfg.out_dir, "Output directory")->capture_default_str();
    sy->add_option("--views", synth_cfg.options.views, "Camera count")
        ->capture_default_str();
    sy->add_option("--width", synth_cfg.options.image_width, "Mask/image width")
        ->capture_default_str();
    sy->add_option("--height", synth_cfg.options.image_height, "Mask/image height")
        ->capture_default_str();
    sy->add_option("--ground-splats", synth_cfg.options.ground_splats, "Ground splats")
        ->capture_default_str();
    sy->add_option("--building-splats", synth_cfg.options.building_splats,
                   "Building splats")
        ->capture_default_str();
    sy->add_option("--distractors", synth_cfg.options.distractor_splats,
                   "Low-opacity distractor splats")
        ->capture_default_str();

    // --- report ---
    ReportCmdConfig report_cfg;
    auto* r = app.add_subcommand("report", "Scene x method Chamfer table");
    r->add_option("--input", report_cfg.input, "Results JSON")->required();
    r->add_option("--out", report_cfg.output, "Formatted JSON path");
    r->add_flag("--json", report_cfg.json_stdout, "Machine-readable stdout");

    CLI11_PARSE(app, argc, argv);
    set_max_threads(threads);

    try {
        if (*c) return cmd_complexity(complexity);
        if (*f) return cmd_fit(fit);
        if (*e) {
            if (!crop_csv.empty()) extract.crop = parse_aabb(crop_csv);
            if (extract.mode == "hierarchical" && e->count("--seed") == 0) {
                std::cerr << "error: hierarchical extraction requires --seed\n";
                return kExitInputError;
            }
            return cmd_extract(extract);
        }
        if (*ch) return cmd_chamfer(chamfer_cfg);
        if (*s) return cmd_spectrum_validate(spectrum_cfg);
        if (*sy) return cmd_synth(synth_cfg);
        if (*r) return cmd_report(report_cfg);
    } catch (const Error& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitInputError;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitInputError;
    }
    return kExitOk;
}

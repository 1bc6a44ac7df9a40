#pragma once

#include <optional>
#include <string>

#include "splatgeom/extraction.hpp"
#include "splatgeom/semantics.hpp"
#include "splatgeom/shape_training.hpp"
#include "splatgeom/synth.hpp"

namespace splatgeom {

// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitQualityGate = 2;

struct ComplexityConfig {
    std::string masks_dir;
    std::string images_dir;  // optional; masks double as grayscale when empty
    std::string captions;    // optional captions JSON
    std::string output = "complexity.json";
    double k1 = 3.0, k2 = 1.0;  // shape constants
    double kappa = 0.05;
    double a_max = 50.0;
    int label_count = 65536;
    CannyParams canny{};
    bool json_stdout = false;
};

int cmd_complexity(const ComplexityConfig& cfg);

struct FitCmdConfig {
    std::string splats;
    std::string cameras;          // cameras JSON
    std::string colmap_cameras;   // alternative: COLMAP cameras.txt ...
    std::string colmap_images;    // ... plus images.txt
    std::string masks_dir;
    std::string report;  // complexity report JSON
    std::string out_ply = "fitted.ply";
    std::string out_trace = "trace.csv";
    double k1 = 0, k2 = 0;  // when both set, targets are recomputed from p
    double a_max = 50.0;
    std::string penalty = "huber";
    double penalty_delta = 1.0;
    double lr = 0.01;
    int iters = 2000;
    int warmup = 6000;
    uint64_t seed = 0;
    LossWeights weights{};
    std::string policy = "majority";  // or per-view
    int view_index = 0;
    int label_count = 65536;
    double gc_tol = 0.05;
    bool json_stdout = false;
};

int cmd_fit(const FitCmdConfig& cfg);

struct ExtractConfig {
    std::string input;
    std::string output = "points.ply";
    int64_t n = 100000;
    uint64_t seed = 0;
    std::string mode = "hierarchical";   // or "mean"
    std::string weight = "alpha";        // or "alpha-volume"
    double min_alpha = 0.5;
    std::optional<Aabb> crop;
    bool json_stdout = false;
};

int cmd_extract(const ExtractConfig& cfg);

struct ChamferCmdConfig {
    std::string a;
    std::string b;
    std::string output;  // optional JSON path
    bool squared = false;
    bool json_stdout = false;
};

int cmd_chamfer(const ChamferCmdConfig& cfg);

struct SpectrumValidateConfig {
    std::string images_dir;
    std::string output = "spectrum.json";
    double T = 0.1;
    CannyParams canny{};
    bool json_stdout = false;
};

int cmd_spectrum_validate(const SpectrumValidateConfig& cfg);

struct SynthCmdConfig {
    SynthOptions options{};
    std::string out_dir = "scene";
};

int cmd_synth(const SynthCmdConfig& cfg);

struct ReportCmdConfig {
    std::string input;   // JSON {scene: {method: {mean, var}}}
    std::string output;  // optional JSON path
    bool json_stdout = false;
};

int cmd_report(const ReportCmdConfig& cfg);

}  // namespace splatgeom

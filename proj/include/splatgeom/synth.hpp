#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "splatgeom/extraction.hpp"
#include "splatgeom/image.hpp"
#include "splatgeom/semantics.hpp"
#include "splatgeom/splat_model.hpp"

namespace splatgeom {

// Seed-determined desk-scale scene: a textured box "building" (label 2) on a
// flat "ground" patch (label 1), plus optional low-opacity distractors
// floating above. Masks and images are ray-cast from the generated cameras.
struct SynthOptions {
    uint64_t seed = 1;
    int views = 4;
    int image_width = 128;
    int image_height = 96;
    int ground_splats = 400;
    int building_splats = 240;
    int distractor_splats = 60;
    double ground_half = 10.0;     // ground patch half-extent
    double building_half = 3.0;    // box footprint half-extent
    double building_height = 4.0;
    double distractor_height = 8.0;
    double distractor_alpha = 0.05;
    double gt_spacing = 0.25;      // ground-truth grid spacing
};

struct SynthScene {
    SplatCloud cloud;
    std::vector<CameraView> views;
    std::vector<SemanticMask> masks;
    std::vector<ImageF> images;
    PointCloud ground_truth;
};

SynthScene make_scene(const SynthOptions& opt);

// Writes splats.ply, cameras.json, captions.json, ground_truth.ply and the
// masks/ + images/ directories under out_dir.
void write_scene(const SynthScene& scene, const std::string& out_dir);

// Flat surface patch plus off-surface low-opacity distractors, used to
// quantify how sampling strategies treat spurious translucent geometry.
struct FantasyScene {
    SplatCloud cloud;
    PointCloud ground_truth;
};

FantasyScene make_fantasy_scene(uint64_t seed, int surface_splats = 900,
                                int distractor_splats = 100,
                                double surface_alpha = 0.9,
                                double distractor_alpha = 0.05,
                                double offset = 5.0);

}  // namespace splatgeom

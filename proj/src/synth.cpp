#include "splatgeom/synth.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <json.hpp>

namespace splatgeom {

namespace {

float logit(double p) { return float(std::log(p / (1.0 - p))); }

std::array<float, 4> random_quaternion(uint64_t seed, uint64_t index, uint64_t stream) {
    double z[3], w;
    rng::normal3(seed, index, stream, z);
    w = rng::normal1(seed, index, stream + 4);
    double n = std::sqrt(w * w + z[0] * z[0] + z[1] * z[1] + z[2] * z[2]);
    if (n < 1e-12) return {1, 0, 0, 0};
    return {float(w / n), float(z[0] / n), float(z[1] / n), float(z[2] / n)};
}

// World-to-camera rotation for a camera at `eye` looking at `target`;
// x right, y down, z forward.
Mat3 look_at(const Vec3& eye, const Vec3& target) {
    Vec3 fwd = target - eye;
    double n = fwd.norm();
    fwd = fwd * (1.0 / n);
    Vec3 up{0, 0, 1};
    Vec3 right = cross(fwd, up);
    if (right.norm() < 1e-9) right = {1, 0, 0};
    right = right * (1.0 / right.norm());
    Vec3 down = cross(fwd, right);
    Mat3 r;
    for (int c = 0; c < 3; ++c) {
        r(0, c) = right[c];
        r(1, c) = down[c];
        r(2, c) = fwd[c];
    }
    return r;
}

struct Hit {
    double t = std::numeric_limits<double>::infinity();
    int label = 0;
    Vec3 point;
};

// Ground patch at z=0 and an axis-aligned box; nearest positive hit wins.
Hit trace_scene(const Vec3& origin, const Vec3& dir, const SynthOptions& opt) {
    Hit hit;
    if (std::abs(dir.z) > 1e-12) {
        double t = -origin.z / dir.z;
        if (t > 1e-6) {
            Vec3 p = origin + dir * t;
            if (std::abs(p.x) <= opt.ground_half && std::abs(p.y) <= opt.ground_half) {
                hit.t = t;
                hit.label = 1;
                hit.point = p;
            }
        }
    }
    // Box slabs: [-bh,bh]^2 x [0, height].
    double bh = opt.building_half, bz = opt.building_height;
    double tmin = 0, tmax = std::numeric_limits<double>::infinity();
    Vec3 lo{-bh, -bh, 0}, hi{bh, bh, bz};
    bool miss = false;
    for (int a = 0; a < 3 && !miss; ++a) {
        if (std::abs(dir[a]) < 1e-12) {
            if (origin[a] < lo[a] || origin[a] > hi[a]) miss = true;
            continue;
        }
        double t0 = (lo[a] - origin[a]) / dir[a];
        double t1 = (hi[a] - origin[a]) / dir[a];
        if (t0 > t1) std::swap(t0, t1);
        tmin = std::max(tmin, t0);
        tmax = std::min(tmax, t1);
        if (tmin > tmax) miss = true;
    }
    if (!miss && tmin > 1e-6 && tmin < hit.t) {
        hit.t = tmin;
        hit.label = 2;
        hit.point = origin + dir * tmin;
    }
    return hit;
}

double shade(const Hit& hit) {
    if (hit.label == 0) return 0.15;
    if (hit.label == 1) return 0.45;  // flat ground, no texture
    // Striped facade: full-contrast bands so Canny fires inside the region.
    double u = hit.point.x + hit.point.y + 2.0 * hit.point.z;
    int band = int(std::floor(u / 0.8));
    return (band % 2 == 0) ? 0.0 : 1.0;
}

}  // namespace

SynthScene make_scene(const SynthOptions& opt) {
    SynthScene scene;
    const uint64_t seed = opt.seed;

    // Splats: ground sheet, building shell, floating distractors.
    uint64_t idx = 0;
    auto push_splat = [&](const Vec3& pos, double base_scale, double alpha) {
        SplatRaw s;
        s.position = {float(pos.x), float(pos.y), float(pos.z)};
        for (int a = 0; a < 3; ++a)
            s.log_scales[a] =
                float(std::log(base_scale) + rng::uniform(seed, idx, 10 + uint64_t(a), -0.3, 0.3));
        s.rotation = random_quaternion(seed, idx, 20);
        s.opacity_logit = logit(alpha) + float(rng::uniform(seed, idx, 30, -0.2, 0.2));
        s.sh_dc = {0.5f, 0.5f, 0.5f};
        scene.cloud.splats.push_back(s);
        ++idx;
    };

    for (int i = 0; i < opt.ground_splats; ++i) {
        double x = rng::uniform(seed, idx, 0, -opt.ground_half, opt.ground_half);
        double y = rng::uniform(seed, idx, 1, -opt.ground_half, opt.ground_half);
        push_splat({x, y, 0.0}, 0.4, 0.85);
    }
    for (int i = 0; i < opt.building_splats; ++i) {
        // One of four walls or the roof, picked round-robin.
        int face = i % 5;
        double u = rng::uniform(seed, idx, 0, -opt.building_half, opt.building_half);
        double v = rng::uniform(seed, idx, 1, 0, opt.building_height);
        Vec3 p;
        switch (face) {
            case 0: p = {u, -opt.building_half, v}; break;
            case 1: p = {u, opt.building_half, v}; break;
            case 2: p = {-opt.building_half, u, v}; break;
            case 3: p = {opt.building_half, u, v}; break;
            default:
                p = {u, rng::uniform(seed, idx, 2, -opt.building_half, opt.building_half),
                     opt.building_height};
        }
        push_splat(p, 0.25, 0.9);
    }
    for (int i = 0; i < opt.distractor_splats; ++i) {
        double x = rng::uniform(seed, idx, 0, -opt.ground_half, opt.ground_half);
        double y = rng::uniform(seed, idx, 1, -opt.ground_half, opt.ground_half);
        double z = opt.distractor_height + rng::uniform(seed, idx, 2, -0.5, 0.5);
        push_splat({x, y, z}, 0.5, opt.distractor_alpha);
    }

    // Cameras on a ring, looking at the scene center.
    const double radius = 2.2 * opt.ground_half;
    const double cam_height = 1.4 * opt.ground_half;
    for (int v = 0; v < opt.views; ++v) {
        double angle = 2.0 * std::numbers::pi * double(v) / double(opt.views);
        Vec3 eye{radius * std::cos(angle), radius * std::sin(angle), cam_height};
        CameraView view;
        view.camera.width = opt.image_width;
        view.camera.height = opt.image_height;
        view.camera.fx = view.camera.fy = 0.9 * double(opt.image_width);
        view.camera.cx = double(opt.image_width) / 2.0;
        view.camera.cy = double(opt.image_height) / 2.0;
        view.camera.rotation = look_at(eye, {0, 0, 0.25 * opt.building_height});
        view.camera.translation = (view.camera.rotation * eye) * -1.0;
        char name[32];
        std::snprintf(name, sizeof name, "view_%03d.png", v);
        view.mask_path = name;
        scene.views.push_back(view);
    }

    // Ray-cast masks and shaded grayscale images.
    for (const CameraView& view : scene.views) {
        const CameraModel& cam = view.camera;
        Mat3 rt = cam.rotation.transpose();
        Vec3 origin = (rt * cam.translation) * -1.0;
        SemanticMask mask;
        mask.width = cam.width;
        mask.height = cam.height;
        mask.labels.assign(size_t(cam.width) * size_t(cam.height), 0);
        ImageF img(cam.width, cam.height);
        for (int y = 0; y < cam.height; ++y)
            for (int x = 0; x < cam.width; ++x) {
                Vec3 dir_cam{(double(x) - cam.cx) / cam.fx, (double(y) - cam.cy) / cam.fy,
                             1.0};
                Vec3 dir = rt * dir_cam;
                Hit hit = trace_scene(origin, dir, opt);
                mask.at(x, y) = uint16_t(hit.label);
                img.at(x, y) = shade(hit);
            }
        scene.masks.push_back(std::move(mask));
        scene.images.push_back(std::move(img));
    }

    // Dense ground-truth samples on the visible surfaces.
    for (double x = -opt.ground_half; x <= opt.ground_half; x += opt.gt_spacing)
        for (double y = -opt.ground_half; y <= opt.ground_half; y += opt.gt_spacing) {
            if (std::abs(x) <= opt.building_half && std::abs(y) <= opt.building_half)
                continue;  // under the building
            scene.ground_truth.points.push_back({x, y, 0});
        }
    double bh = opt.building_half;
    for (double u = -bh; u <= bh; u += opt.gt_spacing) {
        for (double w = 0; w <= opt.building_height; w += opt.gt_spacing) {
            scene.ground_truth.points.push_back({u, -bh, w});
            scene.ground_truth.points.push_back({u, bh, w});
            scene.ground_truth.points.push_back({-bh, u, w});
            scene.ground_truth.points.push_back({bh, u, w});
        }
        for (double w = -bh; w <= bh; w += opt.gt_spacing)
            scene.ground_truth.points.push_back({u, w, opt.building_height});
    }
    return scene;
}

void write_scene(const SynthScene& scene, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    fs::create_directories(out_dir + "/masks");
    fs::create_directories(out_dir + "/images");

    save_splat_ply(out_dir + "/splats.ply", scene.cloud);
    save_cameras_json(out_dir + "/cameras.json", scene.views);
    save_points_ply(out_dir + "/ground_truth.ply", scene.ground_truth);

    nlohmann::json captions = {{"1", "ground"}, {"2", "building"}};
    std::ofstream cap(out_dir + "/captions.json", std::ios::trunc);
    if (!cap) raise(Errc::IoFailure, "cannot write captions.json");
    cap << captions.dump(2) << "\n";

    for (size_t v = 0; v < scene.views.size(); ++v) {
        LabelImage label;
        label.width = scene.masks[v].width;
        label.height = scene.masks[v].height;
        label.bit_depth = 8;
        label.data = scene.masks[v].labels;
        save_label_png(out_dir + "/masks/" + scene.views[v].mask_path, label);
        save_gray_png(out_dir + "/images/" + scene.views[v].mask_path, scene.images[v]);
    }
}

FantasyScene make_fantasy_scene(uint64_t seed, int surface_splats, int distractor_splats,
                                double surface_alpha, double distractor_alpha,
                                double offset) {
    FantasyScene scene;
    const double half = 5.0;
    uint64_t idx = 0;
    for (int i = 0; i < surface_splats; ++i) {
        SplatRaw s;
        double x = rng::uniform(seed, idx, 0, -half, half);
        double y = rng::uniform(seed, idx, 1, -half, half);
        s.position = {float(x), float(y), 0.0f};
        // Thin disks lying in the surface plane.
        s.log_scales = {float(std::log(0.25)), float(std::log(0.25)),
                        float(std::log(0.02))};
        double yaw = rng::uniform(seed, idx, 2, 0, 2.0 * std::numbers::pi);
        s.rotation = {float(std::cos(yaw / 2)), 0.0f, 0.0f, float(std::sin(yaw / 2))};
        s.opacity_logit = logit(surface_alpha);
        scene.cloud.splats.push_back(s);
        ++idx;
    }
    for (int i = 0; i < distractor_splats; ++i) {
        SplatRaw s;
        double x = rng::uniform(seed, idx, 0, -half, half);
        double y = rng::uniform(seed, idx, 1, -half, half);
        double z = offset + rng::uniform(seed, idx, 2, -0.25, 0.25);
        s.position = {float(x), float(y), float(z)};
        s.log_scales = {float(std::log(0.3)), float(std::log(0.3)), float(std::log(0.3))};
        s.rotation = random_quaternion(seed, idx, 20);
        s.opacity_logit = logit(distractor_alpha);
        scene.cloud.splats.push_back(s);
        ++idx;
    }
    for (double x = -half; x <= half; x += 0.1)
        for (double y = -half; y <= half; y += 0.1)
            scene.ground_truth.points.push_back({x, y, 0});
    return scene;
}

}  // namespace splatgeom

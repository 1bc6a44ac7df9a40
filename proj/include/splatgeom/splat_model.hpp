#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "splatgeom/core.hpp"

namespace splatgeom {

// Storage-domain splat record, mirroring the 3DGS binary PLY layout.
// Scales are stored as logs and opacity as a logit; `normal` carries the
// nx/ny/nz slots so a parsed file round-trips byte-exactly.
struct SplatRaw {
    std::array<float, 3> position{};
    std::array<float, 3> normal{};
    std::array<float, 3> sh_dc{};
    std::array<float, 45> sh_rest{};
    float opacity_logit = 0;
    std::array<float, 3> log_scales{};
    std::array<float, 4> rotation{1, 0, 0, 0};  // (w,x,y,z), unnormalized

    bool operator==(const SplatRaw&) const = default;
};

struct SplatCloud {
    std::vector<SplatRaw> splats;
    bool has_sh_rest = false;

    size_t count() const { return splats.size(); }
    bool operator==(const SplatCloud&) const = default;
};

// Activated splat: world-domain parameters plus the assembled covariance.
struct GaussianSplat {
    Vec3 mean;
    Vec3 scales;      // strictly positive
    Quat rotation;    // unit
    double opacity = 0;  // in (0,1)
    Mat3 covariance;  // R * diag(scales^2) * R^T
};

struct CameraModel {
    double fx = 0, fy = 0, cx = 0, cy = 0;
    int width = 0, height = 0;
    Mat3 rotation;     // world-to-camera
    Vec3 translation;  // camera frame
};

// Camera plus the mask file it is paired with.
struct CameraView {
    CameraModel camera;
    std::string mask_path;
};

// --- PLY I/O ---------------------------------------------------------------

// Parses a 3DGS binary little-endian PLY. Unknown vertex properties are
// skipped; a note is appended to `warnings` when given.
SplatCloud parse_splat_ply(std::span<const uint8_t> bytes,
                           std::vector<std::string>* warnings = nullptr);

std::vector<uint8_t> write_splat_ply(const SplatCloud& cloud);

SplatCloud load_splat_ply(const std::string& path,
                          std::vector<std::string>* warnings = nullptr);
void save_splat_ply(const std::string& path, const SplatCloud& cloud);

size_t splat_record_size(bool has_sh_rest);  // bytes per vertex record

// --- Activation ------------------------------------------------------------

GaussianSplat activate(const SplatRaw& raw);
std::vector<GaussianSplat> activate_all(const SplatCloud& cloud);

// Sorted-scale aspect ratios (s_max/s_min, s_mid/s_min); a1 >= a2 >= 1.
std::pair<double, double> aspect_ratios(const GaussianSplat& splat);
std::pair<double, double> aspect_ratios(const Vec3& scales);

// --- Projection ------------------------------------------------------------

struct PixelProjection {
    double px = 0, py = 0;
    double depth = 0;
};

// Pinhole projection; nullopt when the point is at or behind the camera
// plane. No bounds clamp, callers check in-image themselves.
std::optional<PixelProjection> project_mean(const CameraModel& cam, const Vec3& point);

bool in_image(const CameraModel& cam, double px, double py);

// Nearest-pixel coordinates for mask lookups.
inline int pixel_index_x(double px) { return int(std::lround(px)); }
inline int pixel_index_y(double py) { return int(std::lround(py)); }

// --- Camera pose ingestion ---------------------------------------------------

// JSON list of {fx,fy,cx,cy,width,height,rotation:[9 row-major],
// translation:[3],mask_path}. Rotation must be orthonormal within 1e-6.
std::vector<CameraView> load_cameras_json(const std::string& path);
void save_cameras_json(const std::string& path, const std::vector<CameraView>& views);

// COLMAP text import (PINHOLE / SIMPLE_PINHOLE only); mask_path is set to the
// image name recorded in images.txt.
std::vector<CameraView> load_cameras_colmap(const std::string& cameras_txt,
                                            const std::string& images_txt);

void validate_camera(const CameraModel& cam);

}  // namespace splatgeom

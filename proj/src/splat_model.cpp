#include "splatgeom/splat_model.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace splatgeom {

namespace {

// Canonical 3DGS vertex property order.
const char* kBaseProps[] = {"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"};
const char* kTailProps[] = {"opacity", "scale_0", "scale_1", "scale_2",
                            "rot_0", "rot_1", "rot_2", "rot_3"};

struct PropInfo {
    std::string name;
    size_t size = 4;
    bool is_float = false;
    size_t offset = 0;
};

size_t ply_type_size(const std::string& t) {
    if (t == "float" || t == "float32" || t == "int" || t == "int32" || t == "uint" ||
        t == "uint32")
        return 4;
    if (t == "double" || t == "float64") return 8;
    if (t == "char" || t == "int8" || t == "uchar" || t == "uint8") return 1;
    if (t == "short" || t == "int16" || t == "ushort" || t == "uint16") return 2;
    return 0;
}

float load_f32le(const uint8_t* p) {
    uint32_t u = uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 |
                 uint32_t(p[3]) << 24;
    float f;
    std::memcpy(&f, &u, 4);
    return f;
}

void store_f32le(std::vector<uint8_t>& out, float v) {
    uint32_t u;
    std::memcpy(&u, &v, 4);
    out.push_back(uint8_t(u & 0xff));
    out.push_back(uint8_t((u >> 8) & 0xff));
    out.push_back(uint8_t((u >> 16) & 0xff));
    out.push_back(uint8_t((u >> 24) & 0xff));
}

}  // namespace

size_t splat_record_size(bool has_sh_rest) {
    return 4 * (has_sh_rest ? 62 : 17);
}

SplatCloud parse_splat_ply(std::span<const uint8_t> bytes,
                           std::vector<std::string>* warnings) {
    auto warn = [&](const std::string& msg) {
        if (warnings) warnings->push_back(msg);
    };

    // Header: text lines up to and including "end_header\n".
    size_t header_end = 0;
    {
        const std::string needle = "end_header";
        std::string_view view(reinterpret_cast<const char*>(bytes.data()),
                              std::min<size_t>(bytes.size(), 1 << 16));
        size_t pos = view.find(needle);
        if (pos == std::string_view::npos)
            raise(Errc::MalformedHeader, "no end_header found");
        size_t nl = view.find('\n', pos);
        if (nl == std::string_view::npos)
            raise(Errc::MalformedHeader, "end_header line not terminated");
        header_end = nl + 1;
    }

    std::istringstream header(
        std::string(reinterpret_cast<const char*>(bytes.data()), header_end));
    std::string line;
    if (!std::getline(header, line) || (line != "ply" && line != "ply\r"))
        raise(Errc::MalformedHeader, "missing ply magic");

    bool format_seen = false;
    bool in_vertex_element = false;
    bool vertex_seen = false;
    size_t vertex_count = 0;
    std::vector<PropInfo> props;

    while (std::getline(header, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (tok == "end_header") break;
        if (tok == "comment" || tok == "obj_info" || tok.empty()) continue;
        if (tok == "format") {
            std::string fmt, ver;
            ls >> fmt >> ver;
            if (fmt == "ascii")
                raise(Errc::MalformedHeader, "ASCII PLY not supported, expected binary_little_endian");
            if (fmt != "binary_little_endian")
                raise(Errc::MalformedHeader, "unsupported format " + fmt);
            format_seen = true;
        } else if (tok == "element") {
            std::string name;
            size_t count = 0;
            ls >> name >> count;
            if (name == "vertex") {
                if (vertex_seen) raise(Errc::MalformedHeader, "duplicate vertex element");
                vertex_seen = true;
                in_vertex_element = true;
                vertex_count = count;
            } else {
                if (!vertex_seen)
                    raise(Errc::MalformedHeader, "element '" + name + "' precedes vertex data");
                in_vertex_element = false;
                if (count > 0) warn("ignoring trailing element '" + name + "'");
            }
        } else if (tok == "property") {
            if (!in_vertex_element) continue;  // trailing element layout, ignored
            std::string type, name;
            ls >> type;
            if (type == "list")
                raise(Errc::MalformedHeader, "list property unsupported in vertex element");
            ls >> name;
            size_t sz = ply_type_size(type);
            if (sz == 0) raise(Errc::MalformedHeader, "unknown property type " + type);
            PropInfo p;
            p.name = name;
            p.size = sz;
            p.is_float = (type == "float" || type == "float32");
            props.push_back(p);
        } else {
            raise(Errc::MalformedHeader, "unrecognized header line: " + line);
        }
    }
    if (!format_seen) raise(Errc::MalformedHeader, "missing format line");
    if (!vertex_seen) raise(Errc::MalformedHeader, "missing vertex element");

    size_t record_size = 0;
    for (auto& p : props) {
        p.offset = record_size;
        record_size += p.size;
    }

    auto find_prop = [&](const std::string& name) -> const PropInfo* {
        for (const auto& p : props)
            if (p.name == name) return &p;
        return nullptr;
    };
    auto require_float_prop = [&](const std::string& name) -> size_t {
        const PropInfo* p = find_prop(name);
        if (!p) raise(Errc::MalformedHeader, "missing required property " + name);
        if (!p->is_float)
            raise(Errc::MalformedHeader, "property " + name + " must be 32-bit float");
        return p->offset;
    };

    size_t off_base[9];
    for (int i = 0; i < 9; ++i) off_base[i] = require_float_prop(kBaseProps[i]);
    size_t off_tail[8];
    for (int i = 0; i < 8; ++i) off_tail[i] = require_float_prop(kTailProps[i]);

    bool has_rest = find_prop("f_rest_0") != nullptr;
    size_t off_rest[45];
    if (has_rest) {
        for (int i = 0; i < 45; ++i)
            off_rest[i] = require_float_prop("f_rest_" + std::to_string(i));
    } else {
        for (const auto& p : props)
            if (p.name.rfind("f_rest_", 0) == 0)
                raise(Errc::MalformedHeader,
                      "partial f_rest block: expected f_rest_0..44 or none");
    }

    size_t known = 17 + (has_rest ? 45 : 0);
    if (props.size() > known)
        warn("skipping " + std::to_string(props.size() - known) +
             " unknown vertex properties");

    if (bytes.size() < header_end + vertex_count * record_size)
        raise(Errc::TruncatedBody,
              "body holds " + std::to_string(bytes.size() - header_end) + " bytes, need " +
                  std::to_string(vertex_count * record_size));

    SplatCloud cloud;
    cloud.has_sh_rest = has_rest;
    cloud.splats.resize(vertex_count);
    const uint8_t* body = bytes.data() + header_end;

    long bad_index = -1;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (long i = 0; i < long(vertex_count); ++i) {
        const uint8_t* rec = body + size_t(i) * record_size;
        SplatRaw& s = cloud.splats[size_t(i)];
        for (int k = 0; k < 3; ++k) {
            s.position[k] = load_f32le(rec + off_base[k]);
            s.normal[k] = load_f32le(rec + off_base[3 + k]);
            s.sh_dc[k] = load_f32le(rec + off_base[6 + k]);
        }
        if (has_rest)
            for (int k = 0; k < 45; ++k) s.sh_rest[k] = load_f32le(rec + off_rest[k]);
        s.opacity_logit = load_f32le(rec + off_tail[0]);
        for (int k = 0; k < 3; ++k) s.log_scales[k] = load_f32le(rec + off_tail[1 + k]);
        for (int k = 0; k < 4; ++k) s.rotation[k] = load_f32le(rec + off_tail[4 + k]);

        bool ok = true;
        for (float v : s.position) ok = ok && std::isfinite(v);
        for (float v : s.normal) ok = ok && std::isfinite(v);
        for (float v : s.sh_dc) ok = ok && std::isfinite(v);
        if (has_rest)
            for (float v : s.sh_rest) ok = ok && std::isfinite(v);
        ok = ok && std::isfinite(s.opacity_logit);
        for (float v : s.log_scales) ok = ok && std::isfinite(v);
        for (float v : s.rotation) ok = ok && std::isfinite(v);
        if (!ok) {
#ifdef _OPENMP
#pragma omp critical
#endif
            {
                if (bad_index < 0 || i < bad_index) bad_index = i;
            }
        }
    }
    if (bad_index >= 0)
        raise(Errc::NonFiniteValue,
              "non-finite value in splat record " + std::to_string(bad_index));
    return cloud;
}

std::vector<uint8_t> write_splat_ply(const SplatCloud& cloud) {
    for (size_t i = 0; i < cloud.splats.size(); ++i) {
        const SplatRaw& s = cloud.splats[i];
        bool ok = true;
        for (float v : s.position) ok = ok && std::isfinite(v);
        for (float v : s.normal) ok = ok && std::isfinite(v);
        for (float v : s.sh_dc) ok = ok && std::isfinite(v);
        if (cloud.has_sh_rest)
            for (float v : s.sh_rest) ok = ok && std::isfinite(v);
        ok = ok && std::isfinite(s.opacity_logit);
        for (float v : s.log_scales) ok = ok && std::isfinite(v);
        for (float v : s.rotation) ok = ok && std::isfinite(v);
        if (!ok)
            raise(Errc::NonFiniteValue,
                  "non-finite value in splat record " + std::to_string(i));
    }

    std::ostringstream header;
    header << "ply\nformat binary_little_endian 1.0\nelement vertex "
           << cloud.splats.size() << "\n";
    for (const char* p : kBaseProps) header << "property float " << p << "\n";
    if (cloud.has_sh_rest)
        for (int i = 0; i < 45; ++i) header << "property float f_rest_" << i << "\n";
    for (const char* p : kTailProps) header << "property float " << p << "\n";
    header << "end_header\n";

    std::string h = header.str();
    std::vector<uint8_t> out;
    out.reserve(h.size() + cloud.splats.size() * splat_record_size(cloud.has_sh_rest));
    out.insert(out.end(), h.begin(), h.end());

    for (const SplatRaw& s : cloud.splats) {
        for (float v : s.position) store_f32le(out, v);
        for (float v : s.normal) store_f32le(out, v);
        for (float v : s.sh_dc) store_f32le(out, v);
        if (cloud.has_sh_rest)
            for (float v : s.sh_rest) store_f32le(out, v);
        store_f32le(out, s.opacity_logit);
        for (float v : s.log_scales) store_f32le(out, v);
        for (float v : s.rotation) store_f32le(out, v);
    }
    return out;
}

SplatCloud load_splat_ply(const std::string& path, std::vector<std::string>* warnings) {
    std::ifstream f(path, std::ios::binary);
    if (!f) raise(Errc::IoFailure, "cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                               std::istreambuf_iterator<char>());
    return parse_splat_ply(bytes, warnings);
}

void save_splat_ply(const std::string& path, const SplatCloud& cloud) {
    auto bytes = write_splat_ply(cloud);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) raise(Errc::IoFailure, "cannot open " + path + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!f) raise(Errc::IoFailure, "short write to " + path);
}

GaussianSplat activate(const SplatRaw& raw) {
    GaussianSplat g;
    g.mean = {raw.position[0], raw.position[1], raw.position[2]};
    g.scales = {std::exp(double(raw.log_scales[0])), std::exp(double(raw.log_scales[1])),
                std::exp(double(raw.log_scales[2]))};
    Quat q{raw.rotation[0], raw.rotation[1], raw.rotation[2], raw.rotation[3]};
    g.rotation = q.normalized();
    double o = 1.0 / (1.0 + std::exp(-double(raw.opacity_logit)));
    // Logistic saturates to exactly 0/1 for large |logit|; keep the open interval.
    g.opacity = std::clamp(o, 1e-300, 1.0 - 1e-16);

    Mat3 r = quat_to_mat3(g.rotation);
    Mat3 rs = r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) rs(i, j) *= g.scales[j];
    Mat3 cov = rs * rs.transpose();
    // Symmetrize away rounding asymmetry.
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) {
            double v = 0.5 * (cov(i, j) + cov(j, i));
            cov(i, j) = v;
            cov(j, i) = v;
        }
    g.covariance = cov;
    return g;
}

std::vector<GaussianSplat> activate_all(const SplatCloud& cloud) {
    std::vector<GaussianSplat> out(cloud.splats.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (long i = 0; i < long(cloud.splats.size()); ++i)
        out[size_t(i)] = activate(cloud.splats[size_t(i)]);
    return out;
}

std::pair<double, double> aspect_ratios(const Vec3& scales) {
    double a = scales.x, b = scales.y, c = scales.z;
    if (a < b) std::swap(a, b);
    if (b < c) std::swap(b, c);
    if (a < b) std::swap(a, b);
    return {a / c, b / c};
}

std::pair<double, double> aspect_ratios(const GaussianSplat& splat) {
    return aspect_ratios(splat.scales);
}

std::optional<PixelProjection> project_mean(const CameraModel& cam, const Vec3& point) {
    Vec3 p = cam.rotation * point + cam.translation;
    if (p.z <= 0) return std::nullopt;
    PixelProjection out;
    out.px = cam.fx * p.x / p.z + cam.cx;
    out.py = cam.fy * p.y / p.z + cam.cy;
    out.depth = p.z;
    return out;
}

bool in_image(const CameraModel& cam, double px, double py) {
    int ix = pixel_index_x(px);
    int iy = pixel_index_y(py);
    return ix >= 0 && ix < cam.width && iy >= 0 && iy < cam.height;
}

void validate_camera(const CameraModel& cam) {
    if (cam.width <= 0 || cam.height <= 0)
        raise(Errc::InvalidArgument, "camera width/height must be positive");
    Mat3 rtr = cam.rotation.transpose() * cam.rotation;
    if (max_abs_diff(rtr, Mat3::identity()) > 1e-6)
        raise(Errc::InvalidArgument, "camera rotation not orthonormal within 1e-6");
}

std::vector<CameraView> load_cameras_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) raise(Errc::IoFailure, "cannot open " + path);
    nlohmann::json doc;
    try {
        f >> doc;
    } catch (const std::exception& e) {
        raise(Errc::IoFailure, "cannot parse " + path + ": " + e.what());
    }
    if (!doc.is_array()) raise(Errc::InvalidArgument, "cameras JSON must be a list");
    std::vector<CameraView> views;
    for (const auto& item : doc) {
        CameraView v;
        CameraModel& c = v.camera;
        try {
            c.fx = item.at("fx").get<double>();
            c.fy = item.at("fy").get<double>();
            c.cx = item.at("cx").get<double>();
            c.cy = item.at("cy").get<double>();
            c.width = item.at("width").get<int>();
            c.height = item.at("height").get<int>();
            auto rot = item.at("rotation").get<std::vector<double>>();
            auto tr = item.at("translation").get<std::vector<double>>();
            if (rot.size() != 9 || tr.size() != 3)
                raise(Errc::InvalidArgument, "rotation must have 9 entries, translation 3");
            for (int i = 0; i < 9; ++i) c.rotation.m[size_t(i)] = rot[size_t(i)];
            c.translation = {tr[0], tr[1], tr[2]};
            v.mask_path = item.value("mask_path", std::string());
        } catch (const nlohmann::json::exception& e) {
            raise(Errc::InvalidArgument, std::string("bad camera entry: ") + e.what());
        }
        validate_camera(c);
        views.push_back(std::move(v));
    }
    return views;
}

void save_cameras_json(const std::string& path, const std::vector<CameraView>& views) {
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& v : views) {
        const CameraModel& c = v.camera;
        nlohmann::json item;
        item["fx"] = c.fx;
        item["fy"] = c.fy;
        item["cx"] = c.cx;
        item["cy"] = c.cy;
        item["width"] = c.width;
        item["height"] = c.height;
        item["rotation"] = std::vector<double>(c.rotation.m.begin(), c.rotation.m.end());
        item["translation"] = std::vector<double>{c.translation.x, c.translation.y,
                                                  c.translation.z};
        item["mask_path"] = v.mask_path;
        doc.push_back(item);
    }
    std::ofstream f(path, std::ios::trunc);
    if (!f) raise(Errc::IoFailure, "cannot open " + path + " for writing");
    f << doc.dump(2) << "\n";
}

std::vector<CameraView> load_cameras_colmap(const std::string& cameras_txt,
                                            const std::string& images_txt) {
    struct Intrinsics {
        double fx, fy, cx, cy;
        int width, height;
    };
    std::map<int, Intrinsics> intrinsics;

    std::ifstream cf(cameras_txt);
    if (!cf) raise(Errc::IoFailure, "cannot open " + cameras_txt);
    std::string line;
    while (std::getline(cf, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        int cam_id, width, height;
        std::string model;
        ls >> cam_id >> model >> width >> height;
        Intrinsics in{};
        in.width = width;
        in.height = height;
        if (model == "PINHOLE") {
            ls >> in.fx >> in.fy >> in.cx >> in.cy;
        } else if (model == "SIMPLE_PINHOLE") {
            double f;
            ls >> f >> in.cx >> in.cy;
            in.fx = in.fy = f;
        } else {
            raise(Errc::InvalidArgument,
                  "unsupported COLMAP camera model " + model + " (id " +
                      std::to_string(cam_id) + ")");
        }
        if (!ls) raise(Errc::InvalidArgument, "short camera line: " + line);
        intrinsics[cam_id] = in;
    }

    std::ifstream imf(images_txt);
    if (!imf) raise(Errc::IoFailure, "cannot open " + images_txt);
    std::vector<CameraView> views;
    bool expect_points_line = false;
    while (std::getline(imf, line)) {
        if (expect_points_line) {
            expect_points_line = false;  // 2D point observations (may be empty), unused
            continue;
        }
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        long image_id;
        double qw, qx, qy, qz, tx, ty, tz;
        int cam_id;
        std::string name;
        ls >> image_id >> qw >> qx >> qy >> qz >> tx >> ty >> tz >> cam_id >> name;
        if (!ls) raise(Errc::InvalidArgument, "short image line: " + line);
        auto it = intrinsics.find(cam_id);
        if (it == intrinsics.end())
            raise(Errc::InvalidArgument,
                  "image references unknown camera id " + std::to_string(cam_id));
        CameraView v;
        v.camera.fx = it->second.fx;
        v.camera.fy = it->second.fy;
        v.camera.cx = it->second.cx;
        v.camera.cy = it->second.cy;
        v.camera.width = it->second.width;
        v.camera.height = it->second.height;
        Quat q = Quat{qw, qx, qy, qz}.normalized();
        v.camera.rotation = quat_to_mat3(q);
        v.camera.translation = {tx, ty, tz};
        v.mask_path = name;
        validate_camera(v.camera);
        views.push_back(std::move(v));
        expect_points_line = true;
    }
    return views;
}

}  // namespace splatgeom

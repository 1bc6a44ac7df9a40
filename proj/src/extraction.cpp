#include "splatgeom/extraction.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace splatgeom {

// --- Density -----------------------------------------------------------------

double density(const std::vector<GaussianSplat>& splats, const Vec3& x) {
    if (splats.empty()) raise(Errc::EmptyCloud, "density of an empty cloud");
    std::vector<double> contrib(splats.size());
    long bad = -1;  // exceptions cannot leave the parallel region
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (long i = 0; i < long(splats.size()); ++i) {
        const GaussianSplat& g = splats[size_t(i)];
        Mat3 lower;
        if (!cholesky3(g.covariance, lower)) {
#ifdef _OPENMP
#pragma omp critical
#endif
            {
                if (bad < 0 || i < bad) bad = i;
            }
            continue;
        }
        Vec3 y = solve_lower3(lower, x - g.mean);
        contrib[size_t(i)] = g.opacity * std::exp(-0.5 * y.norm2());
    }
    if (bad >= 0)
        raise(Errc::SingularCovariance,
              "covariance of splat " + std::to_string(bad) + " is not SPD");
    return det_sum(contrib);
}

// --- Sampling ----------------------------------------------------------------

std::vector<double> opacity_multinomial(const std::vector<GaussianSplat>& splats,
                                        const std::vector<uint8_t>* live_mask,
                                        SampleWeight weight) {
    if (live_mask && live_mask->size() != splats.size())
        raise(Errc::DimensionMismatch, "live mask and splats differ in length");
    std::vector<double> alpha(splats.size(), 0.0);
    for (size_t i = 0; i < splats.size(); ++i) {
        if (live_mask && !(*live_mask)[i]) continue;
        double w = splats[i].opacity;
        if (weight == SampleWeight::AlphaVolume) {
            const Vec3& s = splats[i].scales;
            w *= s.x * s.y * s.z;  // sqrt(det covariance)
        }
        alpha[i] = w;
    }
    double total = det_sum(alpha);
    if (!(total > 0)) raise(Errc::AllZeroOpacity, "opacities sum to zero");
    for (double& a : alpha) a /= total;
    return alpha;
}

AliasTable::AliasTable(std::span<const double> probabilities) {
    const size_t k = probabilities.size();
    if (k == 0) raise(Errc::InvalidArgument, "alias table needs at least one category");
    prob_.assign(k, 0.0);
    alias_.assign(k, 0);
    std::vector<double> scaled(k);
    for (size_t i = 0; i < k; ++i) scaled[i] = probabilities[i] * double(k);

    std::vector<uint32_t> small, large;
    small.reserve(k);
    large.reserve(k);
    for (size_t i = 0; i < k; ++i)
        (scaled[i] < 1.0 ? small : large).push_back(uint32_t(i));

    while (!small.empty() && !large.empty()) {
        uint32_t s = small.back();
        small.pop_back();
        uint32_t l = large.back();
        large.pop_back();
        prob_[s] = scaled[s];
        alias_[s] = l;
        scaled[l] = (scaled[l] + scaled[s]) - 1.0;
        (scaled[l] < 1.0 ? small : large).push_back(l);
    }
    for (uint32_t i : large) prob_[i] = 1.0;
    for (uint32_t i : small) prob_[i] = 1.0;  // numerical leftovers
}

uint32_t AliasTable::sample(double u1, double u2) const {
    size_t k = prob_.size();
    auto i = size_t(u1 * double(k));
    if (i >= k) i = k - 1;
    return u2 < prob_[i] ? uint32_t(i) : alias_[i];
}

PointCloud sample_points(const std::vector<GaussianSplat>& splats, int64_t n,
                         uint64_t seed, const std::vector<uint8_t>* live_mask,
                         SampleWeight weight) {
    if (n < 0) raise(Errc::InvalidArgument, "sample count must be non-negative");
    std::vector<double> probs = opacity_multinomial(splats, live_mask, weight);
    AliasTable table(probs);

    // Cholesky factors up front; activation guarantees SPD covariances. Dead
    // splats carry zero sampling weight, so their factorization is optional.
    std::vector<Mat3> lower(splats.size());
    for (size_t i = 0; i < splats.size(); ++i) {
        bool live = !live_mask || (*live_mask)[i];
        if (!cholesky3(splats[i].covariance, lower[i]) && live)
            raise(Errc::SingularCovariance,
                  "covariance of splat " + std::to_string(i) + " is not SPD");
    }

    PointCloud out;
    out.points.resize(size_t(n));
    out.source_index.resize(size_t(n));
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (long k = 0; k < long(n); ++k) {
        double u1 = rng::uniform01(seed, uint64_t(k), 0);
        double u2 = rng::uniform01(seed, uint64_t(k), 1);
        uint32_t s = table.sample(u1, u2);
        double z[3];
        rng::normal3(seed, uint64_t(k), 2, z);
        const Mat3& l = lower[s];
        Vec3 d{l(0, 0) * z[0], l(1, 0) * z[0] + l(1, 1) * z[1],
               l(2, 0) * z[0] + l(2, 1) * z[1] + l(2, 2) * z[2]};
        out.points[size_t(k)] = splats[s].mean + d;
        out.source_index[size_t(k)] = int32_t(s);
    }
    return out;
}

PointCloud mean_extraction(const std::vector<GaussianSplat>& splats, double min_alpha,
                           const std::vector<uint8_t>* live_mask) {
    if (live_mask && live_mask->size() != splats.size())
        raise(Errc::DimensionMismatch, "live mask and splats differ in length");
    PointCloud out;
    for (size_t i = 0; i < splats.size(); ++i) {
        if (live_mask && !(*live_mask)[i]) continue;
        if (splats[i].opacity < min_alpha) continue;
        out.points.push_back(splats[i].mean);
        out.source_index.push_back(int32_t(i));
    }
    return out;
}

PointCloud crop(const PointCloud& pc, const Aabb& box) {
    if (!(box.min.x <= box.max.x && box.min.y <= box.max.y && box.min.z <= box.max.z))
        raise(Errc::InvalidArgument, "crop box has min > max");
    PointCloud out;
    for (size_t i = 0; i < pc.points.size(); ++i) {
        if (!box.contains(pc.points[i])) continue;
        out.points.push_back(pc.points[i]);
        if (!pc.source_index.empty()) out.source_index.push_back(pc.source_index[i]);
        if (!pc.colors.empty()) out.colors.push_back(pc.colors[i]);
    }
    return out;
}

// --- KdTree3 -----------------------------------------------------------------

namespace {
constexpr uint32_t kLeafSize = 16;
}

KdTree3::KdTree3(std::span<const Vec3> points)
    : points_(points.begin(), points.end()) {
    if (points_.empty()) raise(Errc::EmptyCloud, "kd-tree over an empty cloud");
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0u);
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    root_ = build(0, uint32_t(points_.size()));
}

int32_t KdTree3::build(uint32_t begin, uint32_t end) {
    Node node;
    node.begin = begin;
    node.end = end;
    if (end - begin <= kLeafSize) {
        nodes_.push_back(node);
        return int32_t(nodes_.size() - 1);
    }
    Vec3 lo = points_[order_[begin]], hi = lo;
    for (uint32_t i = begin + 1; i < end; ++i) {
        const Vec3& p = points_[order_[i]];
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], p[a]);
            hi[a] = std::max(hi[a], p[a]);
        }
    }
    int axis = 0;
    double spread = hi.x - lo.x;
    if (hi.y - lo.y > spread) { axis = 1; spread = hi.y - lo.y; }
    if (hi.z - lo.z > spread) { axis = 2; }

    uint32_t mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](uint32_t a, uint32_t b) {
                         double va = points_[a][axis], vb = points_[b][axis];
                         if (va != vb) return va < vb;
                         return a < b;
                     });
    node.axis = int8_t(axis);
    node.split = points_[order_[mid]][axis];
    nodes_.push_back(node);
    size_t self = nodes_.size() - 1;
    int32_t left = build(begin, mid);
    int32_t right = build(mid, end);
    nodes_[self].left = left;
    nodes_[self].right = right;
    return int32_t(self);
}

void KdTree3::search(int32_t idx, const Vec3& q, size_t& best, double& best_d2) const {
    const Node& node = nodes_[size_t(idx)];
    if (node.axis < 0) {
        for (uint32_t i = node.begin; i < node.end; ++i) {
            const Vec3& p = points_[order_[i]];
            double d2 = (p - q).norm2();
            if (d2 < best_d2) {
                best_d2 = d2;
                best = order_[i];
            }
        }
        return;
    }
    double delta = q[node.axis] - node.split;
    int32_t near = delta < 0 ? node.left : node.right;
    int32_t far = delta < 0 ? node.right : node.left;
    search(near, q, best, best_d2);
    if (delta * delta < best_d2) search(far, q, best, best_d2);
}

size_t KdTree3::nearest(const Vec3& query, double& best_d2) const {
    size_t best = 0;
    best_d2 = std::numeric_limits<double>::infinity();
    search(root_, query, best, best_d2);
    return best;
}

// --- Chamfer -----------------------------------------------------------------

ChamferStats chamfer(const PointCloud& a, const PointCloud& b, bool squared) {
    if (a.points.empty() || b.points.empty())
        raise(Errc::EmptyCloud, "chamfer needs two non-empty clouds");
    KdTree3 tree_a(a.points);
    KdTree3 tree_b(b.points);

    std::vector<double> dist(a.points.size() + b.points.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (long i = 0; i < long(a.points.size()); ++i) {
        double d2;
        tree_b.nearest(a.points[size_t(i)], d2);
        dist[size_t(i)] = squared ? d2 : std::sqrt(d2);
    }
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (long i = 0; i < long(b.points.size()); ++i) {
        double d2;
        tree_a.nearest(b.points[size_t(i)], d2);
        dist[a.points.size() + size_t(i)] = squared ? d2 : std::sqrt(d2);
    }

    ChamferStats stats;
    stats.count = dist.size();
    stats.mean = det_mean(dist);
    std::vector<double> sq(dist.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (long i = 0; i < long(dist.size()); ++i) {
        double d = dist[size_t(i)] - stats.mean;
        sq[size_t(i)] = d * d;
    }
    stats.var = det_mean(sq);
    return stats;
}

// --- Reporting ---------------------------------------------------------------

std::string report_table(const ReportData& results) {
    if (results.empty()) return "";
    std::vector<std::string> methods;
    for (const auto& [scene, per_method] : results)
        for (const auto& [method, stats] : per_method)
            if (std::find(methods.begin(), methods.end(), method) == methods.end())
                methods.push_back(method);

    size_t scene_width = std::string("Scene").size();
    for (const auto& [scene, _] : results) scene_width = std::max(scene_width, scene.size());

    std::ostringstream out;
    out << std::left << std::setw(int(scene_width) + 2) << "Scene";
    for (const auto& m : methods)
        out << std::setw(18) << (m + " mean/var");
    out << "\n";

    for (const auto& [scene, per_method] : results) {
        double best_mean = std::numeric_limits<double>::infinity();
        for (const auto& [method, stats] : per_method)
            best_mean = std::min(best_mean, stats.mean);
        out << std::left << std::setw(int(scene_width) + 2) << scene;
        for (const auto& m : methods) {
            auto it = per_method.find(m);
            if (it == per_method.end()) {
                out << std::setw(18) << "-";
                continue;
            }
            std::ostringstream cell;
            cell << std::fixed << std::setprecision(3) << it->second.mean << "/"
                 << it->second.var;
            if (it->second.mean == best_mean) cell << " *";
            out << std::setw(18) << cell.str();
        }
        out << "\n";
    }
    return out.str();
}

nlohmann::json report_to_json(const ReportData& results) {
    nlohmann::json doc = nlohmann::json::object();
    for (const auto& [scene, per_method] : results) {
        nlohmann::json row = nlohmann::json::object();
        double best_mean = std::numeric_limits<double>::infinity();
        for (const auto& [method, stats] : per_method)
            best_mean = std::min(best_mean, stats.mean);
        for (const auto& [method, stats] : per_method) {
            row[method] = {{"mean", stats.mean},
                           {"var", stats.var},
                           {"best", stats.mean == best_mean}};
        }
        doc[scene] = row;
    }
    return doc;
}

// --- Point-cloud I/O ---------------------------------------------------------

namespace {

void store_f32le(std::vector<uint8_t>& out, float v) {
    uint32_t u;
    std::memcpy(&u, &v, 4);
    out.push_back(uint8_t(u & 0xff));
    out.push_back(uint8_t((u >> 8) & 0xff));
    out.push_back(uint8_t((u >> 16) & 0xff));
    out.push_back(uint8_t((u >> 24) & 0xff));
}

double load_scalar_le(const uint8_t* p, size_t size, bool is_double) {
    if (is_double) {
        uint64_t u = 0;
        for (int i = 7; i >= 0; --i) u = (u << 8) | p[i];
        double d;
        std::memcpy(&d, &u, 8);
        return d;
    }
    (void)size;
    uint32_t u = uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 |
                 uint32_t(p[3]) << 24;
    float f;
    std::memcpy(&f, &u, 4);
    return double(f);
}

}  // namespace

std::vector<uint8_t> write_points_ply(const PointCloud& pc) {
    for (const Vec3& p : pc.points)
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
            raise(Errc::NonFiniteValue, "non-finite point");
    std::ostringstream header;
    header << "ply\nformat binary_little_endian 1.0\nelement vertex " << pc.points.size()
           << "\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
    std::string h = header.str();
    std::vector<uint8_t> out;
    out.reserve(h.size() + pc.points.size() * 12);
    out.insert(out.end(), h.begin(), h.end());
    for (const Vec3& p : pc.points) {
        store_f32le(out, float(p.x));
        store_f32le(out, float(p.y));
        store_f32le(out, float(p.z));
    }
    return out;
}

void save_points_ply(const std::string& path, const PointCloud& pc) {
    auto bytes = write_points_ply(pc);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) raise(Errc::IoFailure, "cannot open " + path + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!f) raise(Errc::IoFailure, "short write to " + path);
}

namespace {

PointCloud load_points_ply_bytes(const std::vector<uint8_t>& bytes,
                                 const std::string& path) {
    std::string_view view(reinterpret_cast<const char*>(bytes.data()),
                          std::min<size_t>(bytes.size(), 1 << 16));
    size_t pos = view.find("end_header");
    if (pos == std::string_view::npos)
        raise(Errc::MalformedHeader, path + ": no end_header");
    size_t nl = view.find('\n', pos);
    if (nl == std::string_view::npos)
        raise(Errc::MalformedHeader, path + ": unterminated end_header");
    size_t header_end = nl + 1;

    std::istringstream header(
        std::string(reinterpret_cast<const char*>(bytes.data()), header_end));
    std::string line;
    std::getline(header, line);
    if (line != "ply" && line != "ply\r") raise(Errc::MalformedHeader, path + ": not a PLY");

    size_t vertex_count = 0;
    bool in_vertex = false;
    struct Prop {
        size_t size;
        bool is_double;
        std::string name;
        size_t offset;
    };
    std::vector<Prop> props;
    size_t record_size = 0;
    while (std::getline(header, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (tok == "end_header") break;
        if (tok == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt != "binary_little_endian")
                raise(Errc::MalformedHeader, path + ": only binary_little_endian supported");
        } else if (tok == "element") {
            std::string name;
            size_t count;
            ls >> name >> count;
            in_vertex = (name == "vertex");
            if (in_vertex) vertex_count = count;
        } else if (tok == "property" && in_vertex) {
            std::string type, name;
            ls >> type >> name;
            if (type == "list")
                raise(Errc::MalformedHeader, path + ": list property unsupported");
            size_t sz;
            bool is_double = false;
            if (type == "float" || type == "float32") sz = 4;
            else if (type == "double" || type == "float64") { sz = 8; is_double = true; }
            else if (type == "uchar" || type == "char" || type == "int8" || type == "uint8") sz = 1;
            else if (type == "short" || type == "ushort" || type == "int16" || type == "uint16") sz = 2;
            else if (type == "int" || type == "uint" || type == "int32" || type == "uint32") sz = 4;
            else raise(Errc::MalformedHeader, path + ": unknown property type " + type);
            props.push_back({sz, is_double, name, record_size});
            record_size += sz;
        }
    }
    const Prop* px = nullptr;
    const Prop* py = nullptr;
    const Prop* pz = nullptr;
    for (const auto& p : props) {
        if (p.name == "x") px = &p;
        if (p.name == "y") py = &p;
        if (p.name == "z") pz = &p;
    }
    if (!px || !py || !pz)
        raise(Errc::MalformedHeader, path + ": missing x/y/z properties");
    for (const Prop* p : {px, py, pz})
        if (p->size != 4 && p->size != 8)
            raise(Errc::MalformedHeader, path + ": x/y/z must be float or double");
    if (bytes.size() < header_end + vertex_count * record_size)
        raise(Errc::TruncatedBody, path + ": body shorter than declared");

    PointCloud pc;
    pc.points.resize(vertex_count);
    const uint8_t* body = bytes.data() + header_end;
    for (size_t i = 0; i < vertex_count; ++i) {
        const uint8_t* rec = body + i * record_size;
        pc.points[i] = {load_scalar_le(rec + px->offset, px->size, px->is_double),
                        load_scalar_le(rec + py->offset, py->size, py->is_double),
                        load_scalar_le(rec + pz->offset, pz->size, pz->is_double)};
    }
    return pc;
}

}  // namespace

PointCloud load_points(const std::string& path) {
    auto ends_with = [&](const char* suffix) {
        std::string s(suffix);
        return path.size() >= s.size() &&
               std::equal(s.rbegin(), s.rend(), path.rbegin(),
                          [](char a, char b) { return std::tolower(a) == std::tolower(b); });
    };
    if (ends_with(".xyz") || ends_with(".txt")) {
        std::ifstream f(path);
        if (!f) raise(Errc::IoFailure, "cannot open " + path);
        PointCloud pc;
        double x, y, z;
        std::string line;
        while (std::getline(f, line)) {
            if (line.empty() || line[0] == '#') continue;
            std::istringstream ls(line);
            if (ls >> x >> y >> z) pc.points.push_back({x, y, z});
        }
        return pc;
    }
    std::ifstream f(path, std::ios::binary);
    if (!f) raise(Errc::IoFailure, "cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                               std::istreambuf_iterator<char>());
    return load_points_ply_bytes(bytes, path);
}

Aabb parse_aabb(const std::string& csv) {
    std::istringstream ss(csv);
    double v[6];
    char comma;
    for (int i = 0; i < 6; ++i) {
        if (!(ss >> v[i])) raise(Errc::InvalidArgument, "crop box needs 6 numbers: " + csv);
        if (i < 5 && !(ss >> comma))
            raise(Errc::InvalidArgument, "crop box needs comma-separated numbers: " + csv);
    }
    Aabb box{{v[0], v[1], v[2]}, {v[3], v[4], v[5]}};
    if (!(box.min.x <= box.max.x && box.min.y <= box.max.y && box.min.z <= box.max.z))
        raise(Errc::InvalidArgument, "crop box has min > max: " + csv);
    return box;
}

}  // namespace splatgeom

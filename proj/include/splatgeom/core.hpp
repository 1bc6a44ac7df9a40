#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace splatgeom {

// ---------------------------------------------------------------------------
// Errors

enum class Errc {
    MalformedHeader,
    TruncatedBody,
    NonFiniteValue,
    DegenerateRotation,
    UnreadableImage,
    LabelOutOfRange,
    BadThresholds,
    DimensionMismatch,
    BadConstants,
    MissingTarget,
    BadSchedule,
    BadThreshold,
    DegenerateCorpus,
    PairingMismatch,
    SingularCovariance,
    AllZeroOpacity,
    EmptyCloud,
    InvalidArgument,
    IoFailure,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& msg)
        : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}
    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& msg) { throw Error(code, msg); }

// ---------------------------------------------------------------------------
// Small fixed-size linear algebra

struct Vec3 {
    double x = 0, y = 0, z = 0;

    double& operator[](int i) { return (&x)[i]; }
    double operator[](int i) const { return (&x)[i]; }

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm2() const { return dot(*this); }
    double norm() const { return std::sqrt(norm2()); }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

struct Quat {
    double w = 1, x = 0, y = 0, z = 0;

    double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
    Quat normalized() const {
        double n = norm();
        if (n < 1e-12) raise(Errc::DegenerateRotation, "quaternion norm below 1e-12");
        return {w / n, x / n, y / n, z / n};
    }
};

// Row-major 3x3 matrix.
struct Mat3 {
    std::array<double, 9> m{};

    static Mat3 identity() { return {{1, 0, 0, 0, 1, 0, 0, 0, 1}}; }

    double& operator()(int r, int c) { return m[3 * r + c]; }
    double operator()(int r, int c) const { return m[3 * r + c]; }

    Mat3 transpose() const {
        return {{m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]}};
    }

    Vec3 operator*(const Vec3& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
                m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }

    Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0;
                for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
                r(i, j) = s;
            }
        return r;
    }
};

// Rotation matrix from a unit quaternion (w,x,y,z).
Mat3 quat_to_mat3(const Quat& q);

// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
// Returns false on failure (non-positive pivot).
bool cholesky3(const Mat3& a, Mat3& lower);

// Solves L*y = b with L lower triangular.
Vec3 solve_lower3(const Mat3& lower, const Vec3& b);

// Adjugate-based inverse; throws SingularCovariance if |det| is tiny.
Mat3 inverse3(const Mat3& a);

double max_abs_diff(const Mat3& a, const Mat3& b);

// ---------------------------------------------------------------------------
// Counter-based RNG
//
// Stateless uniform/normal draws keyed by (seed, index, stream). A draw
// depends only on its key, so parallel generation is reproducible on any
// thread count.

namespace rng {

inline uint64_t mix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline uint64_t keyed(uint64_t seed, uint64_t index, uint64_t stream) {
    return mix64(mix64(mix64(seed) ^ (index * 0xd6e8feb86659fd93ULL)) ^
                 (stream * 0xa5a5a5a5a5a5a5a5ULL));
}

// Uniform in (0, 1]; never 0, safe under log().
inline double uniform01(uint64_t seed, uint64_t index, uint64_t stream) {
    return double((keyed(seed, index, stream) >> 11) + 1) * 0x1.0p-53;
}

inline uint64_t uniform_u64(uint64_t seed, uint64_t index, uint64_t stream) {
    return keyed(seed, index, stream);
}

// Uniform in [lo, hi).
inline double uniform(uint64_t seed, uint64_t index, uint64_t stream, double lo, double hi) {
    return lo + (hi - lo) * (uniform01(seed, index, stream) - 0x1.0p-53);
}

// Three standard normals via Box-Muller, consuming streams [base, base+4).
void normal3(uint64_t seed, uint64_t index, uint64_t stream_base, double out[3]);

double normal1(uint64_t seed, uint64_t index, uint64_t stream_base);

}  // namespace rng

// ---------------------------------------------------------------------------
// Deterministic reductions
//
// Fixed-size blocks summed left-to-right, block partials combined
// left-to-right. The result is bit-identical for any thread count.

double det_sum(std::span<const double> values);
double det_mean(std::span<const double> values);

// ---------------------------------------------------------------------------
// Thread control

void set_max_threads(int n);  // n <= 0 restores the runtime default
int max_threads();

}  // namespace splatgeom

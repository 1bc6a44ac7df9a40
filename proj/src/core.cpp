#include "splatgeom/core.hpp"

#include <algorithm>
#include <numbers>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace splatgeom {

const char* errc_name(Errc c) {
    switch (c) {
        case Errc::MalformedHeader: return "MalformedHeader";
        case Errc::TruncatedBody: return "TruncatedBody";
        case Errc::NonFiniteValue: return "NonFiniteValue";
        case Errc::DegenerateRotation: return "DegenerateRotation";
        case Errc::UnreadableImage: return "UnreadableImage";
        case Errc::LabelOutOfRange: return "LabelOutOfRange";
        case Errc::BadThresholds: return "BadThresholds";
        case Errc::DimensionMismatch: return "DimensionMismatch";
        case Errc::BadConstants: return "BadConstants";
        case Errc::MissingTarget: return "MissingTarget";
        case Errc::BadSchedule: return "BadSchedule";
        case Errc::BadThreshold: return "BadThreshold";
        case Errc::DegenerateCorpus: return "DegenerateCorpus";
        case Errc::PairingMismatch: return "PairingMismatch";
        case Errc::SingularCovariance: return "SingularCovariance";
        case Errc::AllZeroOpacity: return "AllZeroOpacity";
        case Errc::EmptyCloud: return "EmptyCloud";
        case Errc::InvalidArgument: return "InvalidArgument";
        case Errc::IoFailure: return "IoFailure";
    }
    return "UnknownError";
}

Mat3 quat_to_mat3(const Quat& q) {
    const double w = q.w, x = q.x, y = q.y, z = q.z;
    Mat3 r;
    r(0, 0) = 1 - 2 * (y * y + z * z);
    r(0, 1) = 2 * (x * y - w * z);
    r(0, 2) = 2 * (x * z + w * y);
    r(1, 0) = 2 * (x * y + w * z);
    r(1, 1) = 1 - 2 * (x * x + z * z);
    r(1, 2) = 2 * (y * z - w * x);
    r(2, 0) = 2 * (x * z - w * y);
    r(2, 1) = 2 * (y * z + w * x);
    r(2, 2) = 1 - 2 * (x * x + y * y);
    return r;
}

bool cholesky3(const Mat3& a, Mat3& lower) {
    Mat3 l{};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = a(i, j);
            for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            if (i == j) {
                if (s <= 0 || !std::isfinite(s)) return false;
                l(i, i) = std::sqrt(s);
            } else {
                l(i, j) = s / l(j, j);
            }
        }
    }
    lower = l;
    return true;
}

Vec3 solve_lower3(const Mat3& lower, const Vec3& b) {
    Vec3 y;
    y.x = b.x / lower(0, 0);
    y.y = (b.y - lower(1, 0) * y.x) / lower(1, 1);
    y.z = (b.z - lower(2, 0) * y.x - lower(2, 1) * y.y) / lower(2, 2);
    return y;
}

Mat3 inverse3(const Mat3& a) {
    const auto& m = a.m;
    double c00 = m[4] * m[8] - m[5] * m[7];
    double c01 = m[5] * m[6] - m[3] * m[8];
    double c02 = m[3] * m[7] - m[4] * m[6];
    double det = m[0] * c00 + m[1] * c01 + m[2] * c02;
    if (std::abs(det) < 1e-300)
        raise(Errc::SingularCovariance, "3x3 matrix not invertible");
    double inv = 1.0 / det;
    Mat3 r;
    r(0, 0) = c00 * inv;
    r(0, 1) = (m[2] * m[7] - m[1] * m[8]) * inv;
    r(0, 2) = (m[1] * m[5] - m[2] * m[4]) * inv;
    r(1, 0) = c01 * inv;
    r(1, 1) = (m[0] * m[8] - m[2] * m[6]) * inv;
    r(1, 2) = (m[2] * m[3] - m[0] * m[5]) * inv;
    r(2, 0) = c02 * inv;
    r(2, 1) = (m[1] * m[6] - m[0] * m[7]) * inv;
    r(2, 2) = (m[0] * m[4] - m[1] * m[3]) * inv;
    return r;
}

double max_abs_diff(const Mat3& a, const Mat3& b) {
    double d = 0;
    for (int i = 0; i < 9; ++i) d = std::max(d, std::abs(a.m[i] - b.m[i]));
    return d;
}

namespace rng {

void normal3(uint64_t seed, uint64_t index, uint64_t stream_base, double out[3]) {
    const double two_pi = 2.0 * std::numbers::pi;
    double u1 = uniform01(seed, index, stream_base + 0);
    double u2 = uniform01(seed, index, stream_base + 1);
    double u3 = uniform01(seed, index, stream_base + 2);
    double u4 = uniform01(seed, index, stream_base + 3);
    double r1 = std::sqrt(-2.0 * std::log(u1));
    double r2 = std::sqrt(-2.0 * std::log(u3));
    out[0] = r1 * std::cos(two_pi * u2);
    out[1] = r1 * std::sin(two_pi * u2);
    out[2] = r2 * std::cos(two_pi * u4);
}

double normal1(uint64_t seed, uint64_t index, uint64_t stream_base) {
    const double two_pi = 2.0 * std::numbers::pi;
    double u1 = uniform01(seed, index, stream_base + 0);
    double u2 = uniform01(seed, index, stream_base + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

}  // namespace rng

namespace {
constexpr size_t kSumBlock = 4096;
}

double det_sum(std::span<const double> values) {
    const size_t n = values.size();
    if (n <= kSumBlock) {
        double s = 0;
        for (double v : values) s += v;
        return s;
    }
    const size_t nblocks = (n + kSumBlock - 1) / kSumBlock;
    std::vector<double> partial(nblocks);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (long b = 0; b < long(nblocks); ++b) {
        size_t lo = size_t(b) * kSumBlock;
        size_t hi = std::min(lo + kSumBlock, n);
        double s = 0;
        for (size_t i = lo; i < hi; ++i) s += values[i];
        partial[size_t(b)] = s;
    }
    double s = 0;
    for (double v : partial) s += v;
    return s;
}

double det_mean(std::span<const double> values) {
    if (values.empty()) return 0.0;
    return det_sum(values) / double(values.size());
}

void set_max_threads(int n) {
#ifdef _OPENMP
    if (n > 0)
        omp_set_num_threads(n);
    else
        omp_set_num_threads(omp_get_num_procs());
#else
    (void)n;
#endif
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace splatgeom

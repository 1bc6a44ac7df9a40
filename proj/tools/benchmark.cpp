// Times the OpenMP kernels against their serial reference implementations.
//
//   splatgeom_bench [--small]

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>

#include "splatgeom/reference.hpp"
#include "splatgeom/synth.hpp"

using namespace splatgeom;

namespace {

using clock_type = std::chrono::steady_clock;

template <typename F>
double time_ms(F&& fn) {
    auto t0 = clock_type::now();
    fn();
    auto t1 = clock_type::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

void row(const char* kernel, double serial_ms, double parallel_ms) {
    std::printf("%-28s %12.1f %12.1f %9.2fx\n", kernel, serial_ms, parallel_ms,
                serial_ms / parallel_ms);
}

ImageF random_image(int w, int h, uint64_t seed) {
    ImageF img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            img.at(x, y) = rng::uniform01(seed, uint64_t(y) * uint64_t(w) + uint64_t(x), 0);
    return img;
}

}  // namespace

int main(int argc, char** argv) {
    bool small = argc > 1 && std::strcmp(argv[1], "--small") == 0;
    const int img_dim = small ? 256 : 1024;
    const int n_splats = small ? 20000 : 200000;
    const int n_points = small ? 4000 : 20000;
    const int64_t n_samples = small ? 100000 : 1000000;
    const int fft_dim = small ? 128 : 512;

    std::printf("threads: %d\n", max_threads());
    std::printf("%-28s %12s %12s %9s\n", "kernel", "serial ms", "parallel ms", "speedup");

    {
        ImageF img = random_image(img_dim, img_dim, 7);
        EdgeMap serial_map, parallel_map;
        double ts = time_ms([&] { serial_map = ref::canny_edges(img, 1.4, 0.05, 0.15); });
        double tp = time_ms([&] { parallel_map = canny_edges(img, 1.4, 0.05, 0.15); });
        row("canny", ts, tp);
        if (serial_map.count != parallel_map.count)
            std::printf("  !! edge count mismatch: %lld vs %lld\n",
                        (long long)serial_map.count, (long long)parallel_map.count);
    }

    {
        FantasyScene scene = make_fantasy_scene(3, n_splats * 9 / 10, n_splats / 10);
        auto splats = activate_all(scene.cloud);
        std::vector<int> labels(splats.size());
        for (size_t i = 0; i < labels.size(); ++i) labels[i] = 1 + int(i % 2);
        std::map<int, ShapeTarget> targets{{1, {10.0, 10.0 / 3.0}}, {2, {50.0, 50.0}}};
        PenaltyConfig penalty;
        GcLossResult a, b;
        double ts = time_ms([&] { a = ref::gc_loss(splats, labels, targets, penalty); });
        double tp = time_ms([&] { b = gc_loss(splats, labels, targets, penalty); });
        row("gc_loss + grad", ts, tp);
    }

    {
        FantasyScene scene = make_fantasy_scene(5, n_points, n_points / 10);
        auto splats = activate_all(scene.cloud);
        PointCloud a = sample_points(splats, n_points, 11);
        PointCloud b = sample_points(splats, n_points, 12);
        ChamferStats cs, cp;
        double ts = time_ms([&] { cs = ref::chamfer_bruteforce(a, b); });
        double tp = time_ms([&] { cp = chamfer(a, b); });
        row("chamfer (brute vs kd)", ts, tp);
        if (std::abs(cs.mean - cp.mean) > 1e-9)
            std::printf("  !! mean mismatch: %.12g vs %.12g\n", cs.mean, cp.mean);
    }

    {
        ImageF img = random_image(fft_dim, fft_dim, 9);
        Spectrum2D sa, sb;
        double ts = time_ms([&] { sa = dft2_direct(img); });
        double tp = time_ms([&] { sb = dft2(img); });
        row("dft2 (direct vs fft)", ts, tp);
    }

    {
        FantasyScene scene = make_fantasy_scene(13, 900, 100);
        auto splats = activate_all(scene.cloud);
        PointCloud a, b;
        double ts = time_ms([&] { a = ref::sample_points_serial(splats, n_samples, 21); });
        double tp = time_ms([&] { b = sample_points(splats, n_samples, 21); });
        row("sample_points", ts, tp);
        for (size_t i = 0; i < a.points.size(); ++i)
            if (std::memcmp(&a.points[i], &b.points[i], sizeof(Vec3)) != 0) {
                std::printf("  !! sample %zu differs\n", i);
                break;
            }
    }

    return 0;
}

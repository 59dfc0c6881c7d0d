// Timing comparison of the serial reference kernels against the OpenMP
// variants, plus a bitwise-equality check of their outputs.
#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <vector>

#include <omp.h>

#include "congestnet/kernels.hpp"
#include "congestnet/rng.hpp"

using namespace congestnet;

namespace {

std::vector<float> random_vec(size_t n, uint64_t seed) {
    Rng rng(seed);
    std::vector<float> v(n);
    for (float& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
    return v;
}

double time_ms(const std::function<void()>& fn, int reps) {
    fn(); // warm up
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return best;
}

int failures = 0;

void report(const char* name, double serial_ms, double parallel_ms, bool bitwise_equal) {
    std::printf("%-24s %10.3f ms %10.3f ms %7.2fx   %s\n", name, serial_ms, parallel_ms,
                serial_ms / parallel_ms, bitwise_equal ? "bitwise-equal" : "MISMATCH");
    if (!bitwise_equal) ++failures;
}

bool same_bits(const std::vector<float>& a, const std::vector<float>& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

} // namespace

int main() {
    std::printf("threads: %d\n", omp_get_max_threads());
    std::printf("%-24s %13s %13s %8s\n", "kernel", "serial", "parallel", "speedup");

    { // gemm 512^3
        const int m = 512, k = 512, n = 512;
        const auto a = random_vec(static_cast<size_t>(m) * k, 1);
        const auto b = random_vec(static_cast<size_t>(k) * n, 2);
        std::vector<float> cs(static_cast<size_t>(m) * n), cp(cs.size());
        const double ts = time_ms([&] { gemm_serial(a.data(), b.data(), cs.data(), m, k, n); }, 3);
        const double tp =
            time_ms([&] { gemm_parallel(a.data(), b.data(), cp.data(), m, k, n); }, 3);
        report("gemm 512x512x512", ts, tp, same_bits(cs, cp));
    }

    { // segment reductions over a skewed segmentation
        const int e = 1 << 20, f = 64, segments = 1 << 14;
        const auto vals = random_vec(static_cast<size_t>(e) * f, 3);
        Rng rng(4);
        std::vector<int> ids(e);
        for (int& id : ids) id = static_cast<int>(rng.uniform_int(0, segments - 1));
        const SegmentIndex idx = build_segment_index(ids, segments);
        std::vector<float> outs(static_cast<size_t>(segments) * f), outp(outs.size());
        const double ts =
            time_ms([&] { segment_sum_serial(vals.data(), e, f, idx, outs.data()); }, 3);
        const double tp =
            time_ms([&] { segment_sum_parallel(vals.data(), e, f, idx, outp.data()); }, 3);
        report("segment_sum 1M x 64", ts, tp, same_bits(outs, outp));

        std::vector<float> sms(static_cast<size_t>(e) * f), smp(sms.size());
        const double ss =
            time_ms([&] { segment_softmax_serial(vals.data(), e, f, idx, sms.data()); }, 3);
        const double sp =
            time_ms([&] { segment_softmax_parallel(vals.data(), e, f, idx, smp.data()); }, 3);
        report("segment_softmax 1M x 64", ss, sp, same_bits(sms, smp));
    }

    { // gather
        const int rows = 1 << 16, f = 64, e = 1 << 20;
        const auto x = random_vec(static_cast<size_t>(rows) * f, 5);
        Rng rng(6);
        std::vector<int> idx(e);
        for (int& i : idx) i = static_cast<int>(rng.uniform_int(0, rows - 1));
        std::vector<float> os(static_cast<size_t>(e) * f), op(os.size());
        const double ts =
            time_ms([&] { gather_rows_serial(x.data(), f, idx.data(), e, os.data()); }, 3);
        const double tp =
            time_ms([&] { gather_rows_parallel(x.data(), f, idx.data(), e, op.data()); }, 3);
        report("gather_rows 1M x 64", ts, tp, same_bits(os, op));
    }

    { // elementwise + head ops
        const size_t n = 1 << 24;
        const auto a = random_vec(n, 7), b = random_vec(n, 8);
        std::vector<float> cs(n), cp(n);
        const double ts = time_ms([&] { ew_serial(EwOp::mul, a.data(), b.data(), cs.data(), n); }, 3);
        const double tp =
            time_ms([&] { ew_parallel(EwOp::mul, a.data(), b.data(), cp.data(), n); }, 3);
        report("ew mul 16M", ts, tp, same_bits(cs, cp));

        const int rows = 1 << 18, heads = 4, dh = 16;
        const auto z = random_vec(static_cast<size_t>(rows) * heads * dh, 9);
        const auto av = random_vec(static_cast<size_t>(heads) * dh, 10);
        std::vector<float> hs(static_cast<size_t>(rows) * heads), hp(hs.size());
        const double hds =
            time_ms([&] { head_dot_serial(z.data(), av.data(), hs.data(), rows, heads, dh); }, 3);
        const double hdp = time_ms(
            [&] { head_dot_parallel(z.data(), av.data(), hp.data(), rows, heads, dh); }, 3);
        report("head_dot 256K x 4x16", hds, hdp, same_bits(hs, hp));
    }

    if (failures) {
        std::printf("\n%d kernel(s) differ between backends\n", failures);
        return 1;
    }
    std::printf("\nall backends bitwise-equal\n");
    return 0;
}

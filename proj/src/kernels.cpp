#include "congestnet/kernels.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace congestnet {

namespace {
std::atomic<Backend> g_backend{Backend::parallel};
}

void set_backend(Backend b) { g_backend.store(b); }
Backend backend() { return g_backend.load(); }

// ---------------------------------------------------------------- gemm ----

namespace {

// One output row of C = A*B. k ascending; the j loop is the vectorizable one.
template <class T>
inline void gemm_row(const T* a, const T* b, T* c, int i, int k, int n, bool accumulate) {
    T* crow = c + static_cast<size_t>(i) * n;
    if (!accumulate) {
        for (int j = 0; j < n; ++j) crow[j] = T(0);
    }
    const T* arow = a + static_cast<size_t>(i) * k;
    for (int p = 0; p < k; ++p) {
        const T aip = arow[p];
        const T* brow = b + static_cast<size_t>(p) * n;
        for (int j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
}

} // namespace

template <class T>
void gemm_serial(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate) {
    for (int i = 0; i < m; ++i) gemm_row(a, b, c, i, k, n, accumulate);
}

template <class T>
void gemm_parallel(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) gemm_row(a, b, c, i, k, n, accumulate);
}

template <class T>
void gemm(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate) {
    if (backend() == Backend::parallel)
        gemm_parallel(a, b, c, m, k, n, accumulate);
    else
        gemm_serial(a, b, c, m, k, n, accumulate);
}

template <class T>
void transpose(const T* a, T* at, int m, int n) {
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) at[static_cast<size_t>(j) * m + i] = a[static_cast<size_t>(i) * n + j];
}

// ---------------------------------------------------------- segment ops ----

SegmentIndex build_segment_index(const std::vector<int>& ids, int n_segments) {
    SegmentIndex idx;
    idx.n_segments = n_segments;
    idx.offsets.assign(static_cast<size_t>(n_segments) + 1, 0);
    for (int id : ids) {
        if (id < 0 || id >= n_segments) throw std::out_of_range("segment id out of range");
        ++idx.offsets[static_cast<size_t>(id) + 1];
    }
    for (int s = 0; s < n_segments; ++s) idx.offsets[s + 1] += idx.offsets[s];
    idx.rows.resize(ids.size());
    std::vector<int> cursor(idx.offsets.begin(), idx.offsets.end() - 1);
    for (int e = 0; e < static_cast<int>(ids.size()); ++e) idx.rows[cursor[ids[e]]++] = e;
    return idx;
}

namespace {

template <class T>
inline void segment_sum_one(const T* values, int f, const SegmentIndex& idx, T* out, int s) {
    T* orow = out + static_cast<size_t>(s) * f;
    for (int j = 0; j < f; ++j) orow[j] = T(0);
    for (int p = idx.offsets[s]; p < idx.offsets[s + 1]; ++p) {
        const T* vrow = values + static_cast<size_t>(idx.rows[p]) * f;
        for (int j = 0; j < f; ++j) orow[j] += vrow[j];
    }
}

template <class T>
inline void scatter_add_one(const T* values, int f, const SegmentIndex& idx, T* out, int s) {
    T* orow = out + static_cast<size_t>(s) * f;
    for (int p = idx.offsets[s]; p < idx.offsets[s + 1]; ++p) {
        const T* vrow = values + static_cast<size_t>(idx.rows[p]) * f;
        for (int j = 0; j < f; ++j) orow[j] += vrow[j];
    }
}

template <class T>
inline void segment_softmax_one(const T* scores, int f, const SegmentIndex& idx, T* out, int s) {
    const int lo = idx.offsets[s], hi = idx.offsets[s + 1];
    for (int j = 0; j < f; ++j) {
        T mx = -std::numeric_limits<T>::infinity();
        for (int p = lo; p < hi; ++p) {
            const T v = scores[static_cast<size_t>(idx.rows[p]) * f + j];
            if (v > mx) mx = v;
        }
        T sum = T(0);
        for (int p = lo; p < hi; ++p) {
            const size_t off = static_cast<size_t>(idx.rows[p]) * f + j;
            const T ex = std::exp(scores[off] - mx);
            out[off] = ex;
            sum += ex;
        }
        for (int p = lo; p < hi; ++p) out[static_cast<size_t>(idx.rows[p]) * f + j] /= sum;
    }
}

template <class T>
inline void segment_softmax_backward_one(const T* y, const T* dy, int f, const SegmentIndex& idx,
                                         T* dscores, int s) {
    const int lo = idx.offsets[s], hi = idx.offsets[s + 1];
    for (int j = 0; j < f; ++j) {
        T dot = T(0);
        for (int p = lo; p < hi; ++p) {
            const size_t off = static_cast<size_t>(idx.rows[p]) * f + j;
            dot += y[off] * dy[off];
        }
        for (int p = lo; p < hi; ++p) {
            const size_t off = static_cast<size_t>(idx.rows[p]) * f + j;
            dscores[off] += y[off] * (dy[off] - dot);
        }
    }
}

} // namespace

template <class T>
void segment_sum_serial(const T* values, int, int f, const SegmentIndex& idx, T* out) {
    for (int s = 0; s < idx.n_segments; ++s) segment_sum_one(values, f, idx, out, s);
}

template <class T>
void segment_sum_parallel(const T* values, int, int f, const SegmentIndex& idx, T* out) {
#pragma omp parallel for schedule(static)
    for (int s = 0; s < idx.n_segments; ++s) segment_sum_one(values, f, idx, out, s);
}

template <class T>
void segment_sum(const T* values, int e, int f, const SegmentIndex& idx, T* out) {
    if (backend() == Backend::parallel)
        segment_sum_parallel(values, e, f, idx, out);
    else
        segment_sum_serial(values, e, f, idx, out);
}

template <class T>
void scatter_add_rows_serial(const T* values, int, int f, const SegmentIndex& idx, T* out) {
    for (int s = 0; s < idx.n_segments; ++s) scatter_add_one(values, f, idx, out, s);
}

template <class T>
void scatter_add_rows_parallel(const T* values, int, int f, const SegmentIndex& idx, T* out) {
#pragma omp parallel for schedule(static)
    for (int s = 0; s < idx.n_segments; ++s) scatter_add_one(values, f, idx, out, s);
}

template <class T>
void scatter_add_rows(const T* values, int e, int f, const SegmentIndex& idx, T* out) {
    if (backend() == Backend::parallel)
        scatter_add_rows_parallel(values, e, f, idx, out);
    else
        scatter_add_rows_serial(values, e, f, idx, out);
}

template <class T>
void segment_softmax_serial(const T* scores, int, int f, const SegmentIndex& idx, T* out) {
    for (int s = 0; s < idx.n_segments; ++s) segment_softmax_one(scores, f, idx, out, s);
}

template <class T>
void segment_softmax_parallel(const T* scores, int, int f, const SegmentIndex& idx, T* out) {
#pragma omp parallel for schedule(static)
    for (int s = 0; s < idx.n_segments; ++s) segment_softmax_one(scores, f, idx, out, s);
}

template <class T>
void segment_softmax(const T* scores, int e, int f, const SegmentIndex& idx, T* out) {
    if (backend() == Backend::parallel)
        segment_softmax_parallel(scores, e, f, idx, out);
    else
        segment_softmax_serial(scores, e, f, idx, out);
}

template <class T>
void segment_softmax_backward_serial(const T* y, const T* dy, int, int f, const SegmentIndex& idx,
                                     T* dscores) {
    for (int s = 0; s < idx.n_segments; ++s) segment_softmax_backward_one(y, dy, f, idx, dscores, s);
}

template <class T>
void segment_softmax_backward_parallel(const T* y, const T* dy, int, int f,
                                       const SegmentIndex& idx, T* dscores) {
#pragma omp parallel for schedule(static)
    for (int s = 0; s < idx.n_segments; ++s) segment_softmax_backward_one(y, dy, f, idx, dscores, s);
}

template <class T>
void segment_softmax_backward(const T* y, const T* dy, int e, int f, const SegmentIndex& idx,
                              T* dscores) {
    if (backend() == Backend::parallel)
        segment_softmax_backward_parallel(y, dy, e, f, idx, dscores);
    else
        segment_softmax_backward_serial(y, dy, e, f, idx, dscores);
}

// ------------------------------------------------------------ gather/ew ----

template <class T>
void gather_rows_serial(const T* x, int f, const int* idx, int e, T* out) {
    for (int i = 0; i < e; ++i) {
        const T* src = x + static_cast<size_t>(idx[i]) * f;
        T* dst = out + static_cast<size_t>(i) * f;
        for (int j = 0; j < f; ++j) dst[j] = src[j];
    }
}

template <class T>
void gather_rows_parallel(const T* x, int f, const int* idx, int e, T* out) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < e; ++i) {
        const T* src = x + static_cast<size_t>(idx[i]) * f;
        T* dst = out + static_cast<size_t>(i) * f;
        for (int j = 0; j < f; ++j) dst[j] = src[j];
    }
}

template <class T>
void gather_rows(const T* x, int f, const int* idx, int e, T* out) {
    if (backend() == Backend::parallel)
        gather_rows_parallel(x, f, idx, e, out);
    else
        gather_rows_serial(x, f, idx, e, out);
}

namespace {

template <class T>
inline T ew_apply(EwOp op, T x, T y) {
    switch (op) {
        case EwOp::add: return x + y;
        case EwOp::sub: return x - y;
        default: return x * y;
    }
}

} // namespace

template <class T>
void ew_serial(EwOp op, const T* a, const T* b, T* c, size_t n) {
    for (size_t i = 0; i < n; ++i) c[i] = ew_apply(op, a[i], b[i]);
}

template <class T>
void ew_parallel(EwOp op, const T* a, const T* b, T* c, size_t n) {
    const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < nn; ++i) c[i] = ew_apply(op, a[i], b[i]);
}

template <class T>
void ew(EwOp op, const T* a, const T* b, T* c, size_t n) {
    if (backend() == Backend::parallel)
        ew_parallel(op, a, b, c, n);
    else
        ew_serial(op, a, b, c, n);
}

template <class T>
void ew_rowvec_serial(EwOp op, const T* a, const T* v, T* c, int rows, int cols) {
    for (int i = 0; i < rows; ++i) {
        const size_t off = static_cast<size_t>(i) * cols;
        for (int j = 0; j < cols; ++j) c[off + j] = ew_apply(op, a[off + j], v[j]);
    }
}

template <class T>
void ew_rowvec_parallel(EwOp op, const T* a, const T* v, T* c, int rows, int cols) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < rows; ++i) {
        const size_t off = static_cast<size_t>(i) * cols;
        for (int j = 0; j < cols; ++j) c[off + j] = ew_apply(op, a[off + j], v[j]);
    }
}

template <class T>
void ew_rowvec(EwOp op, const T* a, const T* v, T* c, int rows, int cols) {
    if (backend() == Backend::parallel)
        ew_rowvec_parallel(op, a, v, c, rows, cols);
    else
        ew_rowvec_serial(op, a, v, c, rows, cols);
}

// ------------------------------------------------------------- head ops ----

template <class T>
void head_dot_serial(const T* z, const T* a, T* out, int rows, int heads, int dh) {
    for (int i = 0; i < rows; ++i) {
        const T* zrow = z + static_cast<size_t>(i) * heads * dh;
        for (int h = 0; h < heads; ++h) {
            T acc = T(0);
            for (int c = 0; c < dh; ++c) acc += zrow[h * dh + c] * a[h * dh + c];
            out[static_cast<size_t>(i) * heads + h] = acc;
        }
    }
}

template <class T>
void head_dot_parallel(const T* z, const T* a, T* out, int rows, int heads, int dh) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < rows; ++i) {
        const T* zrow = z + static_cast<size_t>(i) * heads * dh;
        for (int h = 0; h < heads; ++h) {
            T acc = T(0);
            for (int c = 0; c < dh; ++c) acc += zrow[h * dh + c] * a[h * dh + c];
            out[static_cast<size_t>(i) * heads + h] = acc;
        }
    }
}

template <class T>
void head_dot(const T* z, const T* a, T* out, int rows, int heads, int dh) {
    if (backend() == Backend::parallel)
        head_dot_parallel(z, a, out, rows, heads, dh);
    else
        head_dot_serial(z, a, out, rows, heads, dh);
}

template <class T>
void head_scale_serial(const T* v, const T* s, T* out, int rows, int heads, int dh) {
    for (int i = 0; i < rows; ++i) {
        const size_t voff = static_cast<size_t>(i) * heads * dh;
        for (int h = 0; h < heads; ++h) {
            const T sv = s[static_cast<size_t>(i) * heads + h];
            for (int c = 0; c < dh; ++c) out[voff + h * dh + c] = v[voff + h * dh + c] * sv;
        }
    }
}

template <class T>
void head_scale_parallel(const T* v, const T* s, T* out, int rows, int heads, int dh) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < rows; ++i) {
        const size_t voff = static_cast<size_t>(i) * heads * dh;
        for (int h = 0; h < heads; ++h) {
            const T sv = s[static_cast<size_t>(i) * heads + h];
            for (int c = 0; c < dh; ++c) out[voff + h * dh + c] = v[voff + h * dh + c] * sv;
        }
    }
}

template <class T>
void head_scale(const T* v, const T* s, T* out, int rows, int heads, int dh) {
    if (backend() == Backend::parallel)
        head_scale_parallel(v, s, out, rows, heads, dh);
    else
        head_scale_serial(v, s, out, rows, heads, dh);
}

template <class T>
bool all_finite(const T* x, size_t n) {
    bool ok = true;
    const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(static) reduction(&& : ok)
    for (long long i = 0; i < nn; ++i) ok = ok && std::isfinite(x[i]);
    return ok;
}

// ------------------------------------------------- explicit instantiation ----

#define CONGESTNET_INSTANTIATE_KERNELS(T)                                                          \
    template void gemm_serial<T>(const T*, const T*, T*, int, int, int, bool);                     \
    template void gemm_parallel<T>(const T*, const T*, T*, int, int, int, bool);                   \
    template void gemm<T>(const T*, const T*, T*, int, int, int, bool);                            \
    template void transpose<T>(const T*, T*, int, int);                                            \
    template void segment_sum_serial<T>(const T*, int, int, const SegmentIndex&, T*);              \
    template void segment_sum_parallel<T>(const T*, int, int, const SegmentIndex&, T*);            \
    template void segment_sum<T>(const T*, int, int, const SegmentIndex&, T*);                     \
    template void scatter_add_rows_serial<T>(const T*, int, int, const SegmentIndex&, T*);         \
    template void scatter_add_rows_parallel<T>(const T*, int, int, const SegmentIndex&, T*);       \
    template void scatter_add_rows<T>(const T*, int, int, const SegmentIndex&, T*);                \
    template void segment_softmax_serial<T>(const T*, int, int, const SegmentIndex&, T*);          \
    template void segment_softmax_parallel<T>(const T*, int, int, const SegmentIndex&, T*);        \
    template void segment_softmax<T>(const T*, int, int, const SegmentIndex&, T*);                 \
    template void segment_softmax_backward_serial<T>(const T*, const T*, int, int,                 \
                                                     const SegmentIndex&, T*);                     \
    template void segment_softmax_backward_parallel<T>(const T*, const T*, int, int,               \
                                                       const SegmentIndex&, T*);                   \
    template void segment_softmax_backward<T>(const T*, const T*, int, int, const SegmentIndex&,   \
                                              T*);                                                 \
    template void gather_rows_serial<T>(const T*, int, const int*, int, T*);                       \
    template void gather_rows_parallel<T>(const T*, int, const int*, int, T*);                     \
    template void gather_rows<T>(const T*, int, const int*, int, T*);                              \
    template void ew_serial<T>(EwOp, const T*, const T*, T*, size_t);                              \
    template void ew_parallel<T>(EwOp, const T*, const T*, T*, size_t);                            \
    template void ew<T>(EwOp, const T*, const T*, T*, size_t);                                     \
    template void ew_rowvec_serial<T>(EwOp, const T*, const T*, T*, int, int);                     \
    template void ew_rowvec_parallel<T>(EwOp, const T*, const T*, T*, int, int);                   \
    template void ew_rowvec<T>(EwOp, const T*, const T*, T*, int, int);                            \
    template void head_dot_serial<T>(const T*, const T*, T*, int, int, int);                       \
    template void head_dot_parallel<T>(const T*, const T*, T*, int, int, int);                     \
    template void head_dot<T>(const T*, const T*, T*, int, int, int);                              \
    template void head_scale_serial<T>(const T*, const T*, T*, int, int, int);                     \
    template void head_scale_parallel<T>(const T*, const T*, T*, int, int, int);                   \
    template void head_scale<T>(const T*, const T*, T*, int, int, int);                            \
    template bool all_finite<T>(const T*, size_t);

CONGESTNET_INSTANTIATE_KERNELS(float)
CONGESTNET_INSTANTIATE_KERNELS(double)

#undef CONGESTNET_INSTANTIATE_KERNELS

} // namespace congestnet

#pragma once

#include <cstddef>
#include <vector>

namespace congestnet {

// Every kernel has a serial reference and an OpenMP variant. Both perform the
// identical floating-point operation sequence per output element (parallelism
// is only ever across independent output elements), so results are bitwise
// equal regardless of backend or thread count. test_kernels asserts this and
// bench_kernels compares throughput.
enum class Backend { serial, parallel };

void set_backend(Backend b);
Backend backend();

// C = A*B (+C when accumulate), A: m x k, B: k x n, C: m x n.
// Per output element contributions are added in ascending-k order.
template <class T>
void gemm_serial(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate = false);
template <class T>
void gemm_parallel(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate = false);
template <class T>
void gemm(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate = false);

template <class T>
void transpose(const T* a, T* at, int m, int n);

// CSR grouping of segment ids; row order inside a segment is ascending, which
// fixes the accumulation order of every segment reduction.
struct SegmentIndex {
    std::vector<int> offsets; // n_segments + 1
    std::vector<int> rows;    // e entries, ascending within each segment
    int n_segments = 0;
};

// Throws std::out_of_range on an id outside [0, n_segments).
SegmentIndex build_segment_index(const std::vector<int>& ids, int n_segments);

// out[s,:] = sum of values rows with id s (ascending); empty segments zero.
template <class T>
void segment_sum_serial(const T* values, int e, int f, const SegmentIndex& idx, T* out);
template <class T>
void segment_sum_parallel(const T* values, int e, int f, const SegmentIndex& idx, T* out);
template <class T>
void segment_sum(const T* values, int e, int f, const SegmentIndex& idx, T* out);

// out[s,:] += sum of values rows with id s; the scatter-add adjoint of a row
// gather with index list equal to the segment ids.
template <class T>
void scatter_add_rows_serial(const T* values, int e, int f, const SegmentIndex& idx, T* out);
template <class T>
void scatter_add_rows_parallel(const T* values, int e, int f, const SegmentIndex& idx, T* out);
template <class T>
void scatter_add_rows(const T* values, int e, int f, const SegmentIndex& idx, T* out);

// Column-wise softmax within each segment, max-shifted.
template <class T>
void segment_softmax_serial(const T* scores, int e, int f, const SegmentIndex& idx, T* out);
template <class T>
void segment_softmax_parallel(const T* scores, int e, int f, const SegmentIndex& idx, T* out);
template <class T>
void segment_softmax(const T* scores, int e, int f, const SegmentIndex& idx, T* out);

// dscores += y * (dy - sum_segment(y*dy)) per column.
template <class T>
void segment_softmax_backward_serial(const T* y, const T* dy, int e, int f,
                                     const SegmentIndex& idx, T* dscores);
template <class T>
void segment_softmax_backward_parallel(const T* y, const T* dy, int e, int f,
                                       const SegmentIndex& idx, T* dscores);
template <class T>
void segment_softmax_backward(const T* y, const T* dy, int e, int f, const SegmentIndex& idx,
                              T* dscores);

template <class T>
void gather_rows_serial(const T* x, int f, const int* idx, int e, T* out);
template <class T>
void gather_rows_parallel(const T* x, int f, const int* idx, int e, T* out);
template <class T>
void gather_rows(const T* x, int f, const int* idx, int e, T* out);

enum class EwOp { add, sub, mul };

template <class T>
void ew_serial(EwOp op, const T* a, const T* b, T* c, size_t n);
template <class T>
void ew_parallel(EwOp op, const T* a, const T* b, T* c, size_t n);
template <class T>
void ew(EwOp op, const T* a, const T* b, T* c, size_t n);

// c[i,j] = a[i,j] op v[j]
template <class T>
void ew_rowvec_serial(EwOp op, const T* a, const T* v, T* c, int rows, int cols);
template <class T>
void ew_rowvec_parallel(EwOp op, const T* a, const T* v, T* c, int rows, int cols);
template <class T>
void ew_rowvec(EwOp op, const T* a, const T* v, T* c, int rows, int cols);

// out[i,h] = dot(z[i, h*dh : (h+1)*dh], a[h, :]), ascending within the head.
template <class T>
void head_dot_serial(const T* z, const T* a, T* out, int rows, int heads, int dh);
template <class T>
void head_dot_parallel(const T* z, const T* a, T* out, int rows, int heads, int dh);
template <class T>
void head_dot(const T* z, const T* a, T* out, int rows, int heads, int dh);

// out[i, h*dh+c] = v[i, h*dh+c] * s[i, h]
template <class T>
void head_scale_serial(const T* v, const T* s, T* out, int rows, int heads, int dh);
template <class T>
void head_scale_parallel(const T* v, const T* s, T* out, int rows, int heads, int dh);
template <class T>
void head_scale(const T* v, const T* s, T* out, int rows, int heads, int dh);

// true iff every element is finite; safe to call from any backend.
template <class T>
bool all_finite(const T* x, size_t n);

} // namespace congestnet

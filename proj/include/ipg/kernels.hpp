#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ipg::kernels {

/// Worker threads for the parallel kernel variants. 1 (the default) selects
/// the serial reference path. Parallel execution is opt-in; every variant is
/// bitwise identical to the reference because each output element is computed
/// by exactly one thread in the reference summation order.
void set_threads(int n);
int threads();

/// Work floor below which the dispatchers stay serial regardless of the
/// thread setting (fork overhead dominates small problems).
constexpr size_t kParallelMinRows = 64;
constexpr size_t kParallelMinWork = size_t(1) << 18;  // rows * cols

inline bool parallel_worthwhile(size_t rows, size_t cols) {
  return rows >= kParallelMinRows && rows * cols >= kParallelMinWork;
}

// ---------------------------------------------------------------------------
// Serial reference implementations. Kept separate so tests and the benchmark
// can compare the parallel variants against them directly.
// ---------------------------------------------------------------------------
namespace ref {

/// y = A x   (A: rows x cols, row-major)
template <typename T>
void matvec(const T* a, const T* x, T* y, size_t rows, size_t cols) {
  for (size_t i = 0; i < rows; ++i) {
    T acc = T(0);
    const T* row = a + i * cols;
    for (size_t j = 0; j < cols; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
}

/// y += A x
template <typename T>
void matvec_acc(const T* a, const T* x, T* y, size_t rows, size_t cols) {
  for (size_t i = 0; i < rows; ++i) {
    T acc = T(0);
    const T* row = a + i * cols;
    for (size_t j = 0; j < cols; ++j) acc += row[j] * x[j];
    y[i] += acc;
  }
}

/// dx += A^T dy   (A: rows x cols; dy: rows; dx: cols)
template <typename T>
void matvec_t_acc(const T* a, const T* dy, T* dx, size_t rows, size_t cols) {
  for (size_t j = 0; j < cols; ++j) {
    T acc = T(0);
    for (size_t i = 0; i < rows; ++i) acc += a[i * cols + j] * dy[i];
    dx[j] += acc;
  }
}

/// dA += dy x^T   (rank-1 update)
template <typename T>
void ger_acc(const T* dy, const T* x, T* da, size_t rows, size_t cols) {
  for (size_t i = 0; i < rows; ++i) {
    T* row = da + i * cols;
    const T dyi = dy[i];
    for (size_t j = 0; j < cols; ++j) row[j] += dyi * x[j];
  }
}

}  // namespace ref

// ---------------------------------------------------------------------------
// Dispatching variants: OpenMP over rows (or columns for the transpose) when
// threads() > 1 and the problem is big enough, the reference loop otherwise.
// ---------------------------------------------------------------------------

template <typename T>
void matvec(const T* a, const T* x, T* y, size_t rows, size_t cols) {
#ifdef _OPENMP
  const int nt = threads();
  if (nt > 1 && parallel_worthwhile(rows, cols)) {
#pragma omp parallel for num_threads(nt) schedule(static)
    for (long long i = 0; i < static_cast<long long>(rows); ++i) {
      T acc = T(0);
      const T* row = a + static_cast<size_t>(i) * cols;
      for (size_t j = 0; j < cols; ++j) acc += row[j] * x[j];
      y[i] = acc;
    }
    return;
  }
#endif
  ref::matvec(a, x, y, rows, cols);
}

template <typename T>
void matvec_acc(const T* a, const T* x, T* y, size_t rows, size_t cols) {
#ifdef _OPENMP
  const int nt = threads();
  if (nt > 1 && parallel_worthwhile(rows, cols)) {
#pragma omp parallel for num_threads(nt) schedule(static)
    for (long long i = 0; i < static_cast<long long>(rows); ++i) {
      T acc = T(0);
      const T* row = a + static_cast<size_t>(i) * cols;
      for (size_t j = 0; j < cols; ++j) acc += row[j] * x[j];
      y[i] += acc;
    }
    return;
  }
#endif
  ref::matvec_acc(a, x, y, rows, cols);
}

template <typename T>
void matvec_t_acc(const T* a, const T* dy, T* dx, size_t rows, size_t cols) {
#ifdef _OPENMP
  const int nt = threads();
  if (nt > 1 && parallel_worthwhile(cols, rows)) {
#pragma omp parallel for num_threads(nt) schedule(static)
    for (long long j = 0; j < static_cast<long long>(cols); ++j) {
      T acc = T(0);
      for (size_t i = 0; i < rows; ++i) acc += a[i * cols + j] * dy[i];
      dx[j] += acc;
    }
    return;
  }
#endif
  ref::matvec_t_acc(a, dy, dx, rows, cols);
}

template <typename T>
void ger_acc(const T* dy, const T* x, T* da, size_t rows, size_t cols) {
#ifdef _OPENMP
  const int nt = threads();
  if (nt > 1 && parallel_worthwhile(rows, cols)) {
#pragma omp parallel for num_threads(nt) schedule(static)
    for (long long i = 0; i < static_cast<long long>(rows); ++i) {
      T* row = da + static_cast<size_t>(i) * cols;
      const T dyi = dy[i];
      for (size_t j = 0; j < cols; ++j) row[j] += dyi * x[j];
    }
    return;
  }
#endif
  ref::ger_acc(dy, x, da, rows, cols);
}

}  // namespace ipg::kernels

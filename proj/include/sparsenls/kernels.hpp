#pragma once

#include <cstddef>

#include "sparsenls/types.hpp"

namespace sparsenls::kernels {

// Serial reference kernels. Kept as the ground truth the OpenMP variants
// are tested and benchmarked against.
namespace serial {

double sum_squares(const Vec& v);

// out = J^T J, p x p symmetric, J is n x p row-major
void gram(const Matrix& j, Matrix& out);

// out = J^T v, length p
void jt_vec(const Matrix& j, const Vec& v, Vec& out);

}  // namespace serial

// OpenMP kernels. gram and jt_vec parallelize across output entries while
// each entry accumulates in the same order as the serial reference, so
// results are bit-identical to serial:: for any thread count.
// sum_squares uses fixed-size chunk partials summed in chunk order:
// deterministic for any thread count, but the grouping differs from the
// serial running sum, so agreement with serial:: is to rounding only.
double sum_squares(const Vec& v);
void gram(const Matrix& j, Matrix& out);
void jt_vec(const Matrix& j, const Vec& v, Vec& out);

// y = A x for square p x p A
void matvec(const Matrix& a, const Vec& x, Vec& y);

// x = A⁻¹ b for symmetric positive definite A, in-place Cholesky.
// Serial; throws Error when a pivot is not strictly positive.
Vec cholesky_solve(Matrix a, Vec b);

void set_jobs(int jobs);  // <= 0 leaves the OpenMP default in place
int max_jobs();

}  // namespace sparsenls::kernels

#pragma once

#include <cstdint>

namespace ugseg::detail {

// Row-major dense products used by the convolution layers.
//   gemm_nn: C[r x c] (+)= A[r x k] * B[k x c]
//   gemm_nt: C[r x c] (+)= A[r x k] * B[c x k]^T
//   gemm_tn: C[r x c] (+)= A[k x r]^T * B[k x c]
void gemm_nn(std::int64_t r, std::int64_t c, std::int64_t k, const float* A,
             const float* B, float* C, bool accumulate);
void gemm_nt(std::int64_t r, std::int64_t c, std::int64_t k, const float* A,
             const float* B, float* C, bool accumulate);
void gemm_tn(std::int64_t r, std::int64_t c, std::int64_t k, const float* A,
             const float* B, float* C, bool accumulate);

void gemm_nn(std::int64_t r, std::int64_t c, std::int64_t k, const double* A,
             const double* B, double* C, bool accumulate);
void gemm_nt(std::int64_t r, std::int64_t c, std::int64_t k, const double* A,
             const double* B, double* C, bool accumulate);
void gemm_tn(std::int64_t r, std::int64_t c, std::int64_t k, const double* A,
             const double* B, double* C, bool accumulate);

}  // namespace ugseg::detail

#include "ugseg/gemm.hpp"

#include <Eigen/Core>

namespace ugseg::detail {

namespace {

template <typename T>
using MatMap =
    Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using ConstMatMap = Eigen::Map<
    const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

template <typename T>
void gemm_nn_impl(std::int64_t r, std::int64_t c, std::int64_t k, const T* A,
                  const T* B, T* C, bool accumulate) {
  ConstMatMap<T> a(A, r, k);
  ConstMatMap<T> b(B, k, c);
  MatMap<T> out(C, r, c);
  if (accumulate) {
    out.noalias() += a * b;
  } else {
    out.noalias() = a * b;
  }
}

template <typename T>
void gemm_nt_impl(std::int64_t r, std::int64_t c, std::int64_t k, const T* A,
                  const T* B, T* C, bool accumulate) {
  ConstMatMap<T> a(A, r, k);
  ConstMatMap<T> b(B, c, k);
  MatMap<T> out(C, r, c);
  if (accumulate) {
    out.noalias() += a * b.transpose();
  } else {
    out.noalias() = a * b.transpose();
  }
}

template <typename T>
void gemm_tn_impl(std::int64_t r, std::int64_t c, std::int64_t k, const T* A,
                  const T* B, T* C, bool accumulate) {
  ConstMatMap<T> a(A, k, r);
  ConstMatMap<T> b(B, k, c);
  MatMap<T> out(C, r, c);
  if (accumulate) {
    out.noalias() += a.transpose() * b;
  } else {
    out.noalias() = a.transpose() * b;
  }
}

}  // namespace

void gemm_nn(std::int64_t r, std::int64_t c, std::int64_t k, const float* A,
             const float* B, float* C, bool accumulate) {
  gemm_nn_impl(r, c, k, A, B, C, accumulate);
}
void gemm_nt(std::int64_t r, std::int64_t c, std::int64_t k, const float* A,
             const float* B, float* C, bool accumulate) {
  gemm_nt_impl(r, c, k, A, B, C, accumulate);
}
void gemm_tn(std::int64_t r, std::int64_t c, std::int64_t k, const float* A,
             const float* B, float* C, bool accumulate) {
  gemm_tn_impl(r, c, k, A, B, C, accumulate);
}
void gemm_nn(std::int64_t r, std::int64_t c, std::int64_t k, const double* A,
             const double* B, double* C, bool accumulate) {
  gemm_nn_impl(r, c, k, A, B, C, accumulate);
}
void gemm_nt(std::int64_t r, std::int64_t c, std::int64_t k, const double* A,
             const double* B, double* C, bool accumulate) {
  gemm_nt_impl(r, c, k, A, B, C, accumulate);
}
void gemm_tn(std::int64_t r, std::int64_t c, std::int64_t k, const double* A,
             const double* B, double* C, bool accumulate) {
  gemm_tn_impl(r, c, k, A, B, C, accumulate);
}

}  // namespace ugseg::detail

#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>

namespace bubbles {

// Ambient dimension is at most 4 (sheet dimension m <= 3); small matrices live on the stack.
inline constexpr int kMaxDim = 4;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

inline constexpr double kPi = std::numbers::pi;
inline const double kSqrt3 = std::sqrt(3.0);

struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dense tensor of fixed rank with a runtime extent n <= kMaxDim in every slot.
template <int Rank>
class Tensor {
 public:
  static constexpr std::size_t kCapacity = [] {
    std::size_t c = 1;
    for (int i = 0; i < Rank; ++i) c *= kMaxDim;
    return c;
  }();

  Tensor() = default;
  explicit Tensor(int n) : n_(n) { data_.fill(0.0); }

  int dim() const { return n_; }

  template <typename... I>
  double& operator()(I... idx) {
    static_assert(sizeof...(I) == Rank);
    return data_[offset(idx...)];
  }
  template <typename... I>
  double operator()(I... idx) const {
    static_assert(sizeof...(I) == Rank);
    return data_[offset(idx...)];
  }

  void fill(double v) { data_.fill(v); }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  template <typename... I>
  static std::size_t offset(I... idx) {
    std::size_t off = 0;
    ((off = off * kMaxDim + static_cast<std::size_t>(idx)), ...);
    return off;
  }

  int n_ = 0;
  std::array<double, kCapacity> data_{};
};

using Tensor3 = Tensor<3>;
using Tensor4 = Tensor<4>;
using Tensor5 = Tensor<5>;

}  // namespace bubbles

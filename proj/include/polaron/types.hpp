#ifndef POLARON_TYPES_HPP
#define POLARON_TYPES_HPP

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace polaron {

using Real = double;
using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;

constexpr Complex kImag{0.0, 1.0};

// Thrown when a computation would exceed a configured size cap
// (dense reconstruction, exact-diagonalization dimension, ...).
struct ResourceLimitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace polaron

#endif

#ifndef POLARON_DENSE_TENSOR_HPP
#define POLARON_DENSE_TENSOR_HPP

#include "polaron/types.hpp"

#include <numeric>
#include <vector>

namespace polaron::tensor {

// Dense complex tensor with row-major storage: the index of the first axis
// varies slowest.  Used for small exact reconstructions and test oracles.
struct DenseTensor {
  std::vector<long> shape;
  Vector data;

  DenseTensor() = default;
  DenseTensor(std::vector<long> shp, Vector values)
      : shape(std::move(shp)), data(std::move(values)) {
    require(static_cast<long>(data.size()) == size_of(shape),
            "DenseTensor: data size does not match shape");
  }

  static long size_of(const std::vector<long>& shp) {
    long n = 1;
    for (long e : shp) {
      require(e >= 1, "DenseTensor: extents must be >= 1");
      n *= e;
    }
    return n;
  }

  long size() const { return data.size(); }

  long flat_index(const std::vector<long>& idx) const {
    require(idx.size() == shape.size(), "DenseTensor: index rank mismatch");
    long f = 0;
    for (size_t a = 0; a < shape.size(); ++a) {
      require(idx[a] >= 0 && idx[a] < shape[a], "DenseTensor: index out of range");
      f = f * shape[a] + idx[a];
    }
    return f;
  }

  Complex at(const std::vector<long>& idx) const { return data(flat_index(idx)); }

  // Reshape preserves the flattened value sequence.
  DenseTensor reshaped(std::vector<long> shp) const {
    require(size_of(shp) == size(), "DenseTensor: reshape must preserve size");
    return DenseTensor(std::move(shp), data);
  }
};

inline double max_abs_diff(const DenseTensor& a, const DenseTensor& b) {
  require(a.shape == b.shape, "max_abs_diff: shape mismatch");
  return (a.data - b.data).cwiseAbs().maxCoeff();
}

}  // namespace polaron::tensor

#endif

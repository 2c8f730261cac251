#pragma once

#include <cmath>
#include <cstdint>
#include <new>
#include <string>
#include <vector>

namespace pfsgan {

// 64-byte aligned storage. Keeping every buffer on the same alignment keeps
// Eigen's vectorized kernels on one code path regardless of heap layout, so
// repeated runs stay bit-identical.
template <typename T>
struct AlignedAlloc {
  using value_type = T;
  AlignedAlloc() = default;
  template <typename U>
  AlignedAlloc(const AlignedAlloc<U>&) {}
  T* allocate(std::size_t n) {
    if (n == 0) return nullptr;
    return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t(64)));
  }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, std::align_val_t(64)); }
  template <typename U>
  bool operator==(const AlignedAlloc<U>&) const {
    return true;
  }
};

// Dense float tensor, row-major, shape up to rank 4. Images are stored
// channels-last: (N, H, W, C) for batches, (H, W, C) for single samples.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);
  Tensor(std::vector<int> shape, float fill_value);

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  int64_t size() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  float& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  float operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  // Reinterprets the buffer under a new shape of identical element count.
  Tensor reshaped(std::vector<int> new_shape) const;

  void fill(float v);
  void add_scaled(const Tensor& o, float scale);
  void scale(float s);

  float min_value() const;
  float max_value() const;
  float abs_max() const;
  bool all_finite() const;

 private:
  std::vector<int> shape_;
  std::vector<float, AlignedAlloc<float>> data_;
};

std::string shape_str(const std::vector<int>& shape);

// Throws ContractError when shapes differ.
void require_same_shape(const Tensor& a, const Tensor& b, const char* where);

}  // namespace pfsgan

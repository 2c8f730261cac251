#include "pfsgan/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "pfsgan/errors.hpp"

namespace pfsgan {

namespace {
int64_t element_count(const std::vector<int>& shape) {
  int64_t n = shape.empty() ? 0 : 1;
  for (int d : shape) {
    if (d < 0) throw ContractError("negative tensor dimension in " + shape_str(shape));
    n *= d;
  }
  return n;
}
}  // namespace

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
  data_.assign(static_cast<size_t>(element_count(shape_)), 0.0f);
}

Tensor::Tensor(std::vector<int> shape, float fill_value) : shape_(std::move(shape)) {
  data_.assign(static_cast<size_t>(element_count(shape_)), fill_value);
}

Tensor Tensor::reshaped(std::vector<int> new_shape) const {
  if (element_count(new_shape) != size()) {
    throw ContractError("reshape " + shape_str(shape_) + " -> " + shape_str(new_shape) +
                        " changes element count");
  }
  Tensor out;
  out.shape_ = std::move(new_shape);
  out.data_ = data_;
  return out;
}

void Tensor::fill(float v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::add_scaled(const Tensor& o, float scale) {
  require_same_shape(*this, o, "Tensor::add_scaled");
  const float* src = o.data();
  for (size_t i = 0; i < data_.size(); ++i) data_[i] += scale * src[i];
}

void Tensor::scale(float s) {
  for (float& v : data_) v *= s;
}

float Tensor::min_value() const {
  return data_.empty() ? 0.0f : *std::min_element(data_.begin(), data_.end());
}

float Tensor::max_value() const {
  return data_.empty() ? 0.0f : *std::max_element(data_.begin(), data_.end());
}

float Tensor::abs_max() const {
  float m = 0.0f;
  for (float v : data_) m = std::max(m, std::abs(v));
  return m;
}

bool Tensor::all_finite() const {
  for (float v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ")";
  return os.str();
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* where) {
  if (!a.same_shape(b)) {
    throw ContractError(std::string(where) + ": shape mismatch " + shape_str(a.shape()) +
                        " vs " + shape_str(b.shape()));
  }
}

}  // namespace pfsgan

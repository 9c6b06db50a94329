#include "fsed/tensor.hpp"

#include <algorithm>
#include <stdexcept>

namespace fsed {

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

Matrix& ParameterSet::add(std::string name, Matrix value) {
  tensors_.push_back({std::move(name), std::move(value)});
  return tensors_.back().value;
}

Matrix& ParameterSet::get(const std::string& name) {
  auto it = std::find_if(tensors_.begin(), tensors_.end(), [&](const auto& t) { return t.name == name; });
  if (it == tensors_.end()) throw std::out_of_range("no parameter named '" + name + "'");
  return it->value;
}

const Matrix& ParameterSet::get(const std::string& name) const {
  return const_cast<ParameterSet*>(this)->get(name);
}

ParameterSet ParameterSet::zeros_like() const {
  ParameterSet out;
  for (const auto& t : tensors_) out.add(t.name, Matrix::Zero(t.value.rows(), t.value.cols()));
  return out;
}

void ParameterSet::set_zero() {
  for (auto& t : tensors_) t.value.setZero();
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += static_cast<std::size_t>(t.value.size());
  return n;
}

bool ParameterSet::all_finite() const {
  return std::all_of(tensors_.begin(), tensors_.end(), [](const auto& t) { return t.value.allFinite(); });
}

std::uint64_t ParameterSet::checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : tensors_) h = fnv1a(t.value.data(), sizeof(double) * static_cast<std::size_t>(t.value.size()), h);
  return h;
}

ParameterSet& ParameterSet::operator+=(const ParameterSet& o) {
  if (o.size() != size()) throw std::invalid_argument("ParameterSet shape mismatch");
  for (std::size_t i = 0; i < size(); ++i) tensors_[i].value += o.tensors_[i].value;
  return *this;
}

ParameterSet& ParameterSet::operator*=(double s) {
  for (auto& t : tensors_) t.value *= s;
  return *this;
}

}  // namespace fsed

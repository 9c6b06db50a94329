#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fsed {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct NamedTensor {
  std::string name;
  Matrix value;
};

// Ordered, named collection of parameter (or gradient) tensors.
class ParameterSet {
 public:
  Matrix& add(std::string name, Matrix value);

  std::size_t size() const { return tensors_.size(); }
  NamedTensor& operator[](std::size_t i) { return tensors_[i]; }
  const NamedTensor& operator[](std::size_t i) const { return tensors_[i]; }
  Matrix& get(const std::string& name);
  const Matrix& get(const std::string& name) const;

  auto begin() { return tensors_.begin(); }
  auto end() { return tensors_.end(); }
  auto begin() const { return tensors_.begin(); }
  auto end() const { return tensors_.end(); }

  // Same names and shapes, all zeros.
  ParameterSet zeros_like() const;
  void set_zero();
  std::size_t scalar_count() const;
  bool all_finite() const;
  // Order-sensitive FNV-1a over the raw bytes of every tensor.
  std::uint64_t checksum() const;
  ParameterSet& operator+=(const ParameterSet& o);
  ParameterSet& operator*=(double s);

 private:
  std::vector<NamedTensor> tensors_;
};

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace fsed

#include "pifo/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pifo/errors.hpp"

namespace pifo::nn {

std::size_t product(const Dims& dims) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::string to_string(const Dims& dims) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) out << ',';
    out << dims[i];
  }
  out << ']';
  return out.str();
}

Tensor::Tensor(Dims dims, double fill) : dims_(std::move(dims)) {
  for (auto d : dims_) {
    if (d == 0) throw ShapeError("tensor extents must be positive, got " + to_string(dims_));
  }
  data_.assign(product(dims_), fill);
}

Tensor::Tensor(Dims dims, std::vector<double> data) : Tensor(Adopt{}, std::move(dims), Buffer(data.begin(), data.end())) {}

Tensor::Tensor(Adopt, Dims dims, Buffer data) : dims_(std::move(dims)), data_(std::move(data)) {
  for (auto d : dims_) {
    if (d == 0) throw ShapeError("tensor extents must be positive, got " + to_string(dims_));
  }
  if (product(dims_) != data_.size()) {
    throw ShapeError("tensor dims " + to_string(dims_) + " do not match " + std::to_string(data_.size()) +
                     " values");
  }
}

double Tensor::item() const {
  if (data_.size() != 1) throw ShapeError("item() on tensor of dims " + to_string(dims_));
  return data_[0];
}

Tensor Tensor::reshaped(Dims dims) const {
  if (product(dims) != data_.size()) {
    throw ShapeError("cannot reshape " + to_string(dims_) + " to " + to_string(dims));
  }
  return Tensor(Adopt{}, std::move(dims), data_);
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

ParamSet::Entry& ParamSet::add(std::string name, Tensor value) {
  if (index_.contains(name)) throw UsageError("duplicate parameter name '" + name + "'");
  index_.emplace(name, entries_.size());
  Tensor grad(value.dims());
  entries_.push_back(Entry{std::move(name), std::move(value), std::move(grad)});
  return entries_.back();
}

bool ParamSet::contains(std::string_view name) const { return index_.contains(std::string(name)); }

std::size_t ParamSet::index_of(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw UsageError("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

ParamSet::Entry& ParamSet::at(std::string_view name) { return entries_[index_of(name)]; }
const ParamSet::Entry& ParamSet::at(std::string_view name) const { return entries_[index_of(name)]; }

std::size_t ParamSet::num_scalars() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

void ParamSet::zero_grad() {
  for (auto& e : entries_) e.grad.fill(0.0);
}

void ParamSet::copy_values_from(const ParamSet& other) {
  for (const auto& src : other.entries()) {
    auto& dst = at(src.name);
    if (dst.value.dims() != src.value.dims()) {
      throw ShapeError("parameter '" + src.name + "': " + to_string(dst.value.dims()) + " vs " +
                       to_string(src.value.dims()));
    }
    dst.value = src.value;
  }
}

}  // namespace pifo::nn

#ifndef PIFO_NN_TENSOR_HPP_
#define PIFO_NN_TENSOR_HPP_

#include <cstddef>
#include <new>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pifo::nn {

using Dims = std::vector<std::size_t>;

std::size_t product(const Dims& dims);
std::string to_string(const Dims& dims);

// Storage with a fixed 64-byte base alignment. Vectorized reductions peel up to
// the first aligned element, so a run-dependent base address would change the
// summation order from run to run.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlignment{64};

  AlignedAllocator() noexcept = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlignment)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlignment); }

  friend bool operator==(const AlignedAllocator&, const AlignedAllocator&) noexcept { return true; }
};

using Buffer = std::vector<double, AlignedAllocator<double>>;

// Dense row-major array of doubles. An empty dims vector denotes a scalar.
class Tensor {
 public:
  Tensor() : data_(1, 0.0) {}
  explicit Tensor(Dims dims, double fill = 0.0);
  Tensor(Dims dims, std::vector<double> data);

  static Tensor scalar(double value) { return Tensor(Dims{}, std::vector<double>{value}); }

  const Dims& dims() const noexcept { return dims_; }
  std::size_t rank() const noexcept { return dims_.size(); }
  std::size_t dim(std::size_t axis) const { return dims_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  double* raw() noexcept { return data_.data(); }
  const double* raw() const noexcept { return data_.data(); }
  std::vector<double> values() const { return {data_.begin(), data_.end()}; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double item() const;

  // Same data, new extents; the element count must be unchanged.
  Tensor reshaped(Dims dims) const;

  void fill(double value);
  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  struct Adopt {};
  Tensor(Adopt, Dims dims, Buffer data);

  Dims dims_;
  Buffer data_;
};

// Named parameter tensors with matching gradient slots, kept in insertion order.
class ParamSet {
 public:
  struct Entry {
    std::string name;
    Tensor value;
    Tensor grad;
  };

  Entry& add(std::string name, Tensor value);

  bool contains(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;
  Entry& at(std::string_view name);
  const Entry& at(std::string_view name) const;
  Entry& entry(std::size_t index) { return entries_.at(index); }
  const Entry& entry(std::size_t index) const { return entries_.at(index); }

  std::span<Entry> entries() noexcept { return entries_; }
  std::span<const Entry> entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  // Total scalar parameter count.
  std::size_t num_scalars() const;

  void zero_grad();

  // Copies values of every entry of `other` into same-named entries here.
  void copy_values_from(const ParamSet& other);

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace pifo::nn

#endif  // PIFO_NN_TENSOR_HPP_

#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace zggp {

template <typename S>
struct Tensor {
  std::vector<int> shape;
  std::vector<S> values;

  Tensor() = default;
  explicit Tensor(std::vector<int> dims)
      : shape(std::move(dims)), values(element_count(shape), S{0}) {}

  static std::size_t element_count(const std::vector<int>& dims) {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                           [](std::size_t a, int b) {
                             return a * static_cast<std::size_t>(b);
                           });
  }

  S& at(int r, int c) { return values[static_cast<std::size_t>(r) * shape[1] + c]; }
  S at(int r, int c) const {
    return values[static_cast<std::size_t>(r) * shape[1] + c];
  }
};

struct ParamSpec {
  std::string name;
  std::vector<int> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
};

// Ordered, named parameter tensors packed into one flat buffer. The layout
// is fully determined by the network config.
class ParamLayout {
 public:
  std::size_t add(std::string name, std::vector<int> shape) {
    ParamSpec spec;
    spec.name = std::move(name);
    spec.size = Tensor<float>::element_count(shape);
    spec.shape = std::move(shape);
    spec.offset = total_;
    total_ += spec.size;
    specs_.push_back(std::move(spec));
    return specs_.size() - 1;
  }

  const std::vector<ParamSpec>& specs() const { return specs_; }
  const ParamSpec& operator[](std::size_t i) const { return specs_[i]; }
  std::size_t count() const { return specs_.size(); }
  std::size_t total_size() const { return total_; }

  friend bool operator==(const ParamLayout& a, const ParamLayout& b) {
    if (a.specs_.size() != b.specs_.size()) return false;
    for (std::size_t i = 0; i < a.specs_.size(); ++i) {
      if (a.specs_[i].name != b.specs_[i].name ||
          a.specs_[i].shape != b.specs_[i].shape) {
        return false;
      }
    }
    return true;
  }

 private:
  std::vector<ParamSpec> specs_;
  std::size_t total_ = 0;
};

template <typename S>
class ParamSet {
 public:
  ParamSet() = default;
  explicit ParamSet(ParamLayout layout)
      : layout_(std::move(layout)), data_(layout_.total_size(), S{0}) {}

  const ParamLayout& layout() const { return layout_; }
  std::span<S> data() { return data_; }
  std::span<const S> data() const { return data_; }
  std::size_t size() const { return data_.size(); }

  S* ptr(std::size_t index) { return data_.data() + layout_[index].offset; }
  const S* ptr(std::size_t index) const {
    return data_.data() + layout_[index].offset;
  }
  std::span<S> view(std::size_t index) {
    return {ptr(index), layout_[index].size};
  }
  std::span<const S> view(std::size_t index) const {
    return {ptr(index), layout_[index].size};
  }

  void zero() { std::fill(data_.begin(), data_.end(), S{0}); }

  template <typename T>
  ParamSet<T> cast() const {
    ParamSet<T> out(layout_);
    auto dst = out.data();
    for (std::size_t i = 0; i < data_.size(); ++i) {
      dst[i] = static_cast<T>(data_[i]);
    }
    return out;
  }

 private:
  ParamLayout layout_;
  std::vector<S> data_;
};

}  // namespace zggp

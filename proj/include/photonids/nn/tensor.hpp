#pragma once

#include <cstddef>
#include <memory>
#include <numeric>
#include <utility>
#include <vector>

#include "photonids/types.hpp"

namespace photonids::nn {

/// Allocator that default-initializes on resize, so large buffers that are
/// fully overwritten right away skip the zero-fill pass.
template <class T>
struct default_init_allocator {
  using value_type = T;
  default_init_allocator() = default;
  template <class U>
  constexpr default_init_allocator(const default_init_allocator<U>&) noexcept {}
  T* allocate(std::size_t n) { return std::allocator<T>{}.allocate(n); }
  void deallocate(T* p, std::size_t n) {
    std::allocator<T>{}.deallocate(p, n);
  }
  template <class U>
  void construct(U* p) noexcept {
    ::new (static_cast<void*>(p)) U;
  }
  template <class U, class... Args>
  void construct(U* p, Args&&... args) {
    ::new (static_cast<void*>(p)) U(std::forward<Args>(args)...);
  }
  template <class U>
  bool operator==(const default_init_allocator<U>&) const noexcept {
    return true;
  }
  template <class U>
  bool operator!=(const default_init_allocator<U>&) const noexcept {
    return false;
  }
};

/// Dense row-major tensor. Templated on the scalar so the training engine
/// runs in float while numerical checks instantiate double.
template <class T>
struct Tensor {
  using Buffer = std::vector<T, default_init_allocator<T>>;

  std::vector<int> shape;
  Buffer data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) { resize(std::move(s)); }

  /// Zero-initialized resize.
  void resize(std::vector<int> s) {
    resize_uninit(std::move(s));
    std::fill(data.begin(), data.end(), T(0));
  }

  /// Resize without initialization; caller must write every element.
  void resize_uninit(std::vector<int> s) {
    shape = std::move(s);
    std::size_t n = 1;
    for (int d : shape) {
      if (d < 0) throw Error(ErrorCategory::InvalidArgument, "negative dim");
      n *= static_cast<std::size_t>(d);
    }
    data.resize(n);
  }

  std::size_t numel() const { return data.size(); }
  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }

  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }
};

/// Uninitialized tensor constructor for buffers that are fully overwritten.
template <class T>
Tensor<T> make_uninit(std::vector<int> shape) {
  Tensor<T> t;
  t.resize_uninit(std::move(shape));
  return t;
}

}  // namespace photonids::nn

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lidkit {

// Dense row-major matrix. Vectors are stored as n x 1.
template <typename T>
struct Tensor {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> values;

    Tensor() = default;
    Tensor(std::size_t r, std::size_t c, T fill = T(0)) : rows(r), cols(c), values(r * c, fill) {}

    std::size_t size() const { return values.size(); }
    bool empty() const { return values.empty(); }

    T* data() { return values.data(); }
    const T* data() const { return values.data(); }
    T* row(std::size_t i) { return values.data() + i * cols; }
    const T* row(std::size_t i) const { return values.data() + i * cols; }

    T& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
    T& operator[](std::size_t i) { return values[i]; }
    const T& operator[](std::size_t i) const { return values[i]; }

    std::span<T> span() { return values; }
    std::span<const T> span() const { return values; }

    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
    bool operator==(const Tensor&) const = default;
};

}  // namespace lidkit

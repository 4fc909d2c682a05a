#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace psp {

// Row-major image. Rows run along the vertical (carrier) axis t, columns
// along x.
template <typename T>
class Raster {
public:
    Raster() = default;
    Raster(std::size_t height, std::size_t width, T fill = T{})
        : height_(height), width_(width), data_(height * width, fill) {}

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(std::size_t row, std::size_t col) { return data_[row * width_ + col]; }
    const T& operator()(std::size_t row, std::size_t col) const { return data_[row * width_ + col]; }

    std::span<T> row(std::size_t r) { return {data_.data() + r * width_, width_}; }
    std::span<const T> row(std::size_t r) const { return {data_.data() + r * width_, width_}; }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }

    bool same_shape(std::size_t h, std::size_t w) const noexcept { return height_ == h && width_ == w; }

    friend bool operator==(const Raster&, const Raster&) = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<T> data_;
};

}  // namespace psp

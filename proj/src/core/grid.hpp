#pragma once

#include <cstddef>
#include <vector>

namespace lexmrf {

// Dense row-major matrix over the Lexis grid: row index = time, column = age.
template <class T>
class Grid {
  public:
    Grid() = default;
    Grid(int rows, int cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    T &operator()(int t, int j) { return data_[static_cast<std::size_t>(t) * cols_ + j]; }
    const T &operator()(int t, int j) const {
        return data_[static_cast<std::size_t>(t) * cols_ + j];
    }
    T &operator[](std::size_t i) { return data_[i]; }
    const T &operator[](std::size_t i) const { return data_[i]; }

    T *data() { return data_.data(); }
    const T *data() const { return data_.data(); }

    bool same_shape(const Grid &other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    bool operator==(const Grid &other) const = default;

  private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<T> data_;
};

using Matrix = Grid<double>;
using CountMatrix = Grid<long long>;

} // namespace lexmrf

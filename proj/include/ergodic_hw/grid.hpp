#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "ergodic_hw/model.hpp"

namespace ergodic_hw {

inline constexpr std::size_t kMaxGridPoints = 20'000'000;

/// Tensor grid on the box [-L_1, L_1] x ... x [-L_d, L_d].
class Grid {
 public:
  Grid(std::size_t d, Vec half_width, Vec spacing);
  static Grid uniform(std::size_t d, double half_width, double spacing);

  std::size_t dim() const { return d_; }
  std::size_t size() const { return size_; }
  std::size_t count(std::size_t axis) const { return counts_[axis]; }
  std::size_t stride(std::size_t axis) const { return strides_[axis]; }
  double spacing(std::size_t axis) const { return h_[axis]; }
  double half_width(std::size_t axis) const { return L_[axis]; }
  double max_half_width() const;

  /// Index along one axis of a flat index.
  std::size_t axis_index(std::size_t flat, std::size_t axis) const {
    return (flat / strides_[axis]) % counts_[axis];
  }
  double coordinate(std::size_t flat, std::size_t axis) const {
    return -L_[axis] + h_[axis] * static_cast<double>(axis_index(flat, axis));
  }
  void point(std::size_t flat, std::span<double> out) const;
  std::size_t origin() const { return origin_; }

  /// Nearest grid point, or nullopt when x lies outside the box by more than h/2.
  std::optional<std::size_t> nearest(std::span<const double> x) const;

 private:
  std::size_t d_;
  Vec L_, h_;
  std::vector<std::size_t> counts_, strides_;
  std::size_t size_ = 1;
  std::size_t origin_ = 0;
};

struct ValueField {
  std::vector<double> values;
};

/// Simplex controls stored per grid point; u0 outside the grid.
class ControlField {
 public:
  ControlField(const Grid& grid, SimplexControl fallback);

  /// Spatially constant control.
  static ControlField constant(const Grid& grid, const SimplexControl& u);

  const Grid& grid() const { return grid_; }
  std::span<const double> at_index(std::size_t flat) const {
    return {data_.data() + flat * grid_.dim(), grid_.dim()};
  }
  std::span<double> at_index(std::size_t flat) {
    return {data_.data() + flat * grid_.dim(), grid_.dim()};
  }
  std::span<double> data() { return data_; }
  /// Nearest-grid-point lookup.
  std::span<const double> at(std::span<const double> x) const;
  const SimplexControl& fallback() const { return fallback_; }

 private:
  Grid grid_;
  SimplexControl fallback_;
  std::vector<double> data_;
};

/// One line per grid point: coordinates, V, u.
void write_fields(std::ostream& os, const Grid& grid, const ValueField& value,
                  const ControlField& control);

}  // namespace ergodic_hw

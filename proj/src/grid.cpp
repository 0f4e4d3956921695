#include "ergodic_hw/grid.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace ergodic_hw {

Grid::Grid(std::size_t d, Vec half_width, Vec spacing)
    : d_(d), L_(std::move(half_width)), h_(std::move(spacing)) {
  if (d_ == 0 || L_.size() != d_ || h_.size() != d_)
    throw ConfigError("grid dimension mismatch");
  counts_.resize(d_);
  strides_.resize(d_);
  for (std::size_t a = 0; a < d_; ++a) {
    if (!(L_[a] > 0.0) || !(h_[a] > 0.0))
      throw ConfigError("grid half width and spacing must be positive");
    const double cells = L_[a] / h_[a];
    const double rounded = std::round(cells);
    if (std::abs(cells - rounded) > 1e-9 * std::max(1.0, cells))
      throw ConfigError("grid half width must be an integer multiple of the spacing");
    counts_[a] = 2 * static_cast<std::size_t>(rounded) + 1;
  }
  for (std::size_t a = d_; a-- > 0;) {
    strides_[a] = size_;
    if (size_ > kMaxGridPoints / counts_[a])
      throw ConfigError("grid exceeds the point budget");
    size_ *= counts_[a];
  }
  for (std::size_t a = 0; a < d_; ++a) origin_ += (counts_[a] / 2) * strides_[a];
}

Grid Grid::uniform(std::size_t d, double half_width, double spacing) {
  return Grid(d, Vec(d, half_width), Vec(d, spacing));
}

double Grid::max_half_width() const {
  return *std::max_element(L_.begin(), L_.end());
}

void Grid::point(std::size_t flat, std::span<double> out) const {
  for (std::size_t a = 0; a < d_; ++a) out[a] = coordinate(flat, a);
}

std::optional<std::size_t> Grid::nearest(std::span<const double> x) const {
  std::size_t flat = 0;
  for (std::size_t a = 0; a < d_; ++a) {
    const double k = std::round((x[a] + L_[a]) / h_[a]);
    if (k < 0.0 || k >= static_cast<double>(counts_[a])) return std::nullopt;
    flat += static_cast<std::size_t>(k) * strides_[a];
  }
  return flat;
}

ControlField::ControlField(const Grid& grid, SimplexControl fallback)
    : grid_(grid), fallback_(std::move(fallback)) {
  if (fallback_.size() != grid_.dim())
    throw ConfigError("fallback control has wrong dimension");
  data_.resize(grid_.size() * grid_.dim());
  for (std::size_t p = 0; p < grid_.size(); ++p) {
    auto u = at_index(p);
    std::copy(fallback_.values().begin(), fallback_.values().end(), u.begin());
  }
}

ControlField ControlField::constant(const Grid& grid, const SimplexControl& u) {
  return ControlField(grid, u);
}

std::span<const double> ControlField::at(std::span<const double> x) const {
  if (auto p = grid_.nearest(x)) return at_index(*p);
  return fallback_.values();
}

void write_fields(std::ostream& os, const Grid& grid, const ValueField& value,
                  const ControlField& control) {
  const auto old = os.precision(12);
  std::vector<double> x(grid.dim());
  for (std::size_t p = 0; p < grid.size(); ++p) {
    grid.point(p, x);
    for (double c : x) os << c << ' ';
    os << value.values[p];
    for (double u : control.at_index(p)) os << ' ' << u;
    os << '\n';
  }
  os.precision(old);
}

}  // namespace ergodic_hw

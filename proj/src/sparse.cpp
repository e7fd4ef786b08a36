#include "cmp/sparse.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "cmp/kernels.hpp"

namespace cmp {

CsrMatrix CsrMatrix::from_triplets(std::int32_t n, std::vector<Triplet> triplets) {
  std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  CsrMatrix m;
  m.n_ = n;
  m.row_ptr_.assign(static_cast<std::size_t>(n) + 1, 0);
  std::int32_t last_row = -1;
  std::int32_t last_col = -1;
  for (const Triplet& t : triplets) {
    if (t.row < 0 || t.row >= n || t.col < 0 || t.col >= n)
      throw std::out_of_range("triplet index outside matrix");
    if (t.row == last_row && t.col == last_col) {
      m.values_.back() += t.value;
      continue;
    }
    m.col_.push_back(t.col);
    m.values_.push_back(t.value);
    ++m.row_ptr_[t.row + 1];
    last_row = t.row;
    last_col = t.col;
  }
  for (std::int32_t r = 0; r < n; ++r) m.row_ptr_[r + 1] += m.row_ptr_[r];
  return m;
}

double CsrMatrix::entry(std::int32_t row, std::int32_t col) const {
  const auto first = col_.begin() + row_ptr_[row];
  const auto last = col_.begin() + row_ptr_[row + 1];
  const auto it = std::lower_bound(first, last, col);
  if (it == last || *it != col) return 0.0;
  return values_[static_cast<std::size_t>(it - col_.begin())];
}

std::vector<double> CsrMatrix::diagonal() const {
  std::vector<double> d(static_cast<std::size_t>(n_));
  for (std::int32_t i = 0; i < n_; ++i) d[i] = entry(i, i);
  return d;
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  kernels::active_table().spmv(row_ptr_.data(), col_.data(), values_.data(), x.data(), y.data(),
                               static_cast<std::size_t>(n_));
}

bool CsrMatrix::exactly_symmetric() const {
  for (std::int32_t r = 0; r < n_; ++r)
    for (std::int32_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
      if (entry(col_[k], r) != values_[k]) return false;
  return true;
}

void CsrMatrix::write_coordinate(std::ostream& os) const {
  char buf[96];
  for (std::int32_t r = 0; r < n_; ++r)
    for (std::int32_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      std::snprintf(buf, sizeof buf, "%d %d %.17g\n", r, col_[k], values_[k]);
      os << buf;
    }
}

}  // namespace cmp

#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace cmp {

struct Triplet {
  std::int32_t row;
  std::int32_t col;
  double value;
};

// Compressed sparse row matrix, square, columns sorted within each row.
class CsrMatrix {
 public:
  CsrMatrix() = default;

  // Duplicate (row, col) entries are summed in input order.
  static CsrMatrix from_triplets(std::int32_t n, std::vector<Triplet> triplets);

  std::int32_t size() const { return n_; }
  std::size_t nonzeros() const { return values_.size(); }

  std::span<const std::int32_t> row_ptr() const { return row_ptr_; }
  std::span<const std::int32_t> col_index() const { return col_; }
  std::span<const double> values() const { return values_; }

  double entry(std::int32_t row, std::int32_t col) const;
  std::vector<double> diagonal() const;

  // y <- A x through the active kernel backend.
  void multiply(std::span<const double> x, std::span<double> y) const;

  bool exactly_symmetric() const;

  // One "row col value" line per stored entry, 0-based, %.17g values.
  void write_coordinate(std::ostream& os) const;

  friend bool operator==(const CsrMatrix&, const CsrMatrix&) = default;

 private:
  std::int32_t n_ = 0;
  std::vector<std::int32_t> row_ptr_{0};
  std::vector<std::int32_t> col_;
  std::vector<double> values_;
};

}  // namespace cmp

#include "flexspim/bit_grid.hpp"

#include <algorithm>
#include <sstream>

namespace flexspim {

BitGrid::BitGrid(std::size_t rows, std::size_t cols)
    : rows_(rows),
      cols_(cols),
      data_(rows * cols, 0),
      ctrl_(cols, 0),
      emu_(cols, 0),
      emu_valid_(cols, 0) {
  if (rows == 0 || cols == 0) throw ContractViolation("BitGrid: zero-sized array");
}

void BitGrid::check_row(std::size_t row) const {
  if (row >= rows_) {
    throw AddressError("row " + std::to_string(row) + " outside [0, " + std::to_string(rows_) + ")");
  }
}

void BitGrid::check_cols(ColRange cols) const {
  if (cols.is_empty) return;
  if (cols.lo > cols.hi || cols.hi >= cols_) {
    throw AddressError("column range [" + std::to_string(cols.lo) + ", " + std::to_string(cols.hi) +
                       "] outside [0, " + std::to_string(cols_) + ")");
  }
}

void BitGrid::write_row(std::size_t row, ColRange cols, std::span<const Bit> bits) {
  check_row(row);
  check_cols(cols);
  if (bits.size() != cols.width()) throw ContractViolation("write_row: bit count does not match range width");
  for (std::size_t i = 0; i < bits.size(); ++i) data_[row * cols_ + cols.lo + i] = bits[i] ? 1 : 0;
}

std::vector<Bit> BitGrid::read_row(std::size_t row, ColRange cols) const {
  check_row(row);
  check_cols(cols);
  std::vector<Bit> out(cols.width());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = data_[row * cols_ + cols.lo + i];
  return out;
}

Bit BitGrid::get(std::size_t row, std::size_t col) const {
  check_row(row);
  if (col >= cols_) throw AddressError("column " + std::to_string(col) + " out of range");
  return data_[row * cols_ + col];
}

std::vector<BitlinePair> BitGrid::read_bitlines(std::size_t row_a, RowSel row_b, ColRange cols) const {
  check_row(row_a);
  check_cols(cols);
  if (!row_b.is_emu()) {
    check_row(*row_b.row);
    if (*row_b.row == row_a) throw ContractViolation("read_bitlines: both wordlines address the same row");
  }
  std::vector<BitlinePair> out(cols.width());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::size_t c = cols.lo + i;
    const Bit a = data_[row_a * cols_ + c];
    Bit b;
    if (row_b.is_emu()) {
      if (!emu_valid_[c]) throw BroadcastError("emulation bit of column " + std::to_string(c) + " is not valid");
      b = emu_[c];
    } else {
      b = data_[*row_b.row * cols_ + c];
    }
    out[i] = {static_cast<Bit>(a & b), static_cast<Bit>(!(a | b))};
  }
  return out;
}

void BitGrid::write_back(std::size_t row, std::span<const Bit> col_mask, std::span<const Bit> bits) {
  check_row(row);
  if (col_mask.size() != cols_ || bits.size() != cols_) {
    throw ContractViolation("write_back: mask and bits must span every column");
  }
  for (std::size_t c = 0; c < cols_; ++c) {
    if (col_mask[c]) data_[row * cols_ + c] = bits[c] ? 1 : 0;
  }
}

void BitGrid::set_emulation(ColRange cols, std::span<const Bit> bits) {
  check_cols(cols);
  if (bits.size() != cols.width()) throw ContractViolation("set_emulation: bit count does not match range width");
  for (std::size_t i = 0; i < bits.size(); ++i) {
    emu_[cols.lo + i] = bits[i] ? 1 : 0;
    emu_valid_[cols.lo + i] = 1;
  }
}

void BitGrid::clear_emulation() {
  std::fill(emu_valid_.begin(), emu_valid_.end(), 0);
}

bool BitGrid::emulation_valid(std::size_t col) const {
  if (col >= cols_) throw AddressError("column " + std::to_string(col) + " out of range");
  return emu_valid_[col] != 0;
}

void BitGrid::bad_ctrl(std::size_t col, std::uint8_t code) const {
  if (col >= cols_) throw AddressError("column " + std::to_string(col) + " out of range");
  throw ContractViolation("control bitcells hold 2 bits, got " + std::to_string(code));
}

std::uint64_t BitGrid::checksum() const {
  std::uint64_t h = 1469598103934665603ull;
  for (Bit b : data_) {
    h ^= b;
    h *= 1099511628211ull;
  }
  return h;
}

std::string BitGrid::hex_dump(std::size_t row_lo, std::size_t row_count) const {
  if (row_count == 0) row_count = rows_ - std::min(row_lo, rows_);
  check_row(row_lo);
  const std::size_t row_end = std::min(rows_, row_lo + row_count);
  static constexpr char kHex[] = "0123456789abcdef";
  std::ostringstream os;
  const std::size_t nibbles = (cols_ + 3) / 4;
  for (std::size_t r = row_lo; r < row_end; ++r) {
    os.width(3);
    os << r << ": ";
    for (std::size_t n = nibbles; n-- > 0;) {
      unsigned v = 0;
      for (std::size_t k = 4; k-- > 0;) {
        const std::size_t c = n * 4 + k;
        v = (v << 1) | (c < cols_ ? data_[r * cols_ + c] : 0);
      }
      os << kHex[v];
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace flexspim

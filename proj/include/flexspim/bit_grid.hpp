#pragma once

// 6T SRAM bit array with two-wordline CIM readout, masked write-back,
// per-column control bitcells and one row of emulation bits.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace flexspim {

using Bit = std::uint8_t;

inline constexpr std::size_t kMacroRows = 512;
inline constexpr std::size_t kMacroCols = 256;

/// Raised for any row/column outside the array.
class AddressError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Raised when an operation is invoked outside its documented contract
/// (same-row activation, impossible adder inputs, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Raised when the emulation row is read on a column with no valid bit.
class BroadcastError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inclusive column bounds. An empty range is represented by `empty()`.
struct ColRange {
  std::size_t lo = 0;
  std::size_t hi = 0;
  bool is_empty = false;

  static ColRange empty() { return {0, 0, true}; }
  static ColRange span_of(std::size_t lo, std::size_t width) {
    if (width == 0) return empty();
    return {lo, lo + width - 1, false};
  }
  std::size_t width() const { return is_empty ? 0 : hi - lo + 1; }
};

/// Second wordline of a readout: either a stored row or the emulation row.
struct RowSel {
  std::optional<std::size_t> row;  // nullopt selects the emulation bits

  static RowSel emu() { return {}; }
  static RowSel at(std::size_t r) { return {r}; }
  bool is_emu() const { return !row.has_value(); }
};

struct BitlinePair {
  Bit and_bit;  // BL
  Bit nor_bit;  // BLB
};

/// Logical phase counters. Precharge phases have no data effect and only
/// advance these counts.
struct PhaseCounters {
  std::uint64_t precharge = 0;
  std::uint64_t readout = 0;
  std::uint64_t compute = 0;
  std::uint64_t writeback = 0;
  std::uint64_t total() const { return precharge + readout + compute + writeback; }
};

class BitGrid {
 public:
  explicit BitGrid(std::size_t rows = kMacroRows, std::size_t cols = kMacroCols);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t capacity_bits() const { return rows_ * cols_; }

  void write_row(std::size_t row, ColRange cols, std::span<const Bit> bits);
  std::vector<Bit> read_row(std::size_t row, ColRange cols) const;
  Bit get(std::size_t row, std::size_t col) const;

  /// Activates two wordlines. For each column returns (A & B, ~(A | B)).
  std::vector<BitlinePair> read_bitlines(std::size_t row_a, RowSel row_b, ColRange cols) const;

  /// cell(row, c) <- bits[c] where mask[c] is set; both spans have length cols().
  void write_back(std::size_t row, std::span<const Bit> col_mask, std::span<const Bit> bits);

  /// Loads the broadcast row and marks those columns valid. The 6T array is untouched.
  void set_emulation(ColRange cols, std::span<const Bit> bits);
  void clear_emulation();
  bool emulation_valid(std::size_t col) const;

  /// Control bitcells; each value is the 2-bit code in [0, 3].
  std::uint8_t ctrl(std::size_t col) const {
    if (col >= cols_) bad_ctrl(col, 0);
    return ctrl_[col];
  }
  void set_ctrl(std::size_t col, std::uint8_t code) {
    if (col >= cols_ || code > 3) bad_ctrl(col, code);
    ctrl_[col] = code;
  }

  PhaseCounters& phases() { return phases_; }
  const PhaseCounters& phases() const { return phases_; }

  /// FNV-1a over the main array only.
  std::uint64_t checksum() const;

  /// One line per row, MSB (highest column) on the left, hex digits.
  std::string hex_dump(std::size_t row_lo = 0, std::size_t row_count = 0) const;

 private:
  [[noreturn]] void bad_ctrl(std::size_t col, std::uint8_t code) const;
  void check_row(std::size_t row) const;
  void check_cols(ColRange cols) const;

  std::size_t rows_;
  std::size_t cols_;
  std::vector<Bit> data_;
  std::vector<std::uint8_t> ctrl_;
  std::vector<Bit> emu_;
  std::vector<Bit> emu_valid_;
  PhaseCounters phases_;
};

}  // namespace flexspim

#pragma once

// Per-column peripheral circuits: AND/NOR sense outputs feeding a 1-bit
// full adder, carry-in selection between neighbours, standby gating, and
// the adder-based threshold comparison.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "flexspim/bit_grid.hpp"

namespace flexspim {

/// Control-bitcell encoding: 00 standby, 01 boundary, 10 chain-from-left,
/// 11 chain-from-right.
enum class PcMode : std::uint8_t {
  Standby = 0,
  Boundary = 1,
  ChainFromLeft = 2,
  ChainFromRight = 3,
};

enum class CycleDirection : std::uint8_t {
  LeftToRight,  // LSB at the leftmost column of each group, carry moves right
  RightToLeft,
};

inline CycleDirection flip(CycleDirection d) {
  return d == CycleDirection::LeftToRight ? CycleDirection::RightToLeft : CycleDirection::LeftToRight;
}

/// Raised for malformed PC configurations and unrepresentable thresholds.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Test hook for mutation checks of the verification suite.
enum class AdderFault : std::uint8_t {
  None,
  CarryStuckAtZero,  // carry_out forced to 0 in every column
  SumInverted,       // sum output inverted in every column
};

struct AdderOut {
  Bit sum;
  Bit carry_out;
};

AdderOut full_add(Bit and_bit, Bit nor_bit, Bit carry_in, AdderFault fault = AdderFault::None);

/// A chained run of columns, lo <= hi. The boundary column is `lo` for
/// LeftToRight and `hi` for RightToLeft.
struct PcGroup {
  std::size_t lo;
  std::size_t hi;
  std::size_t width() const { return hi - lo + 1; }
};

/// Splits a mode vector into groups for the given direction. Groups are
/// returned ordered by column. Throws ConfigError on a group without a
/// boundary or with a chain orientation that contradicts `direction`.
std::vector<PcGroup> parse_groups(std::span<const PcMode> modes, CycleDirection direction);

struct ChainResult {
  std::vector<Bit> sums;           // one per column, 0 on standby columns
  std::vector<Bit> active;         // 1 where the column is not standby
  std::vector<Bit> latched_carry;  // one per group
};

/// Ripples carries inside each group starting from the boundary column,
/// whose carry-in is the group's latched carry.
ChainResult resolve_chain(std::span<const PcMode> modes, std::span<const BitlinePair> lines,
                          CycleDirection direction, std::span<const Bit> latched_carries,
                          AdderFault fault = AdderFault::None);

struct CycleResult {
  std::vector<Bit> latched_carry;
  unsigned phase_count = 5;
  std::size_t active_cols = 0;
  std::size_t standby_cols = 0;
};

inline PcMode mode_from_ctrl(std::uint8_t code) {
  if (code > 3) throw ConfigError("control code must fit in 2 bits");
  return static_cast<PcMode>(code);
}
inline std::uint8_t ctrl_from_mode(PcMode mode) { return static_cast<std::uint8_t>(mode); }

/// Reads the PC modes for `cols` from the control bitcells of `grid`.
std::vector<PcMode> read_modes(const BitGrid& grid, ColRange cols);

/// One macro-wide CIM operation: precharge, AND/NOR readout, sum/carry,
/// precharge, masked write-back of the sums into `writeback_row`.
CycleResult cim_cycle(BitGrid& grid, std::size_t row_a, RowSel row_b, ColRange cols, CycleDirection direction,
                      std::span<const Bit> latched_carries, std::size_t writeback_row,
                      AdderFault fault = AdderFault::None);

/// Grid location of one operand bit.
struct CellRef {
  std::size_t row;
  std::size_t col;
};

/// Placement of a signed operand: cells[i] holds bit significance i,
/// cells.size() >= resolution; bit resolution-1 is the sign.
struct OperandPlacement {
  std::vector<CellRef> cells;
  std::size_t resolution = 0;
};

/// Returns 1 per operand iff value >= threshold. Evaluates value + (-threshold)
/// through the full-adder ripple at resolution+1 bits and reads the sign;
/// a pure-integer shadow comparison must agree or ContractViolation is thrown.
std::vector<Bit> compare_ge(const BitGrid& grid, std::span<const OperandPlacement> values, std::int64_t threshold,
                            AdderFault fault = AdderFault::None);

}  // namespace flexspim

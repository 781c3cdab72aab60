#pragma once

// Operand shaping and multi-cycle arithmetic on one CIM macro.
//
// A neuron slot owns n_cols adjacent columns. An operand of resolution r
// occupies ceil(r / n_cols) consecutive rows of its slot, with bit
// significance laid out boustrophedon: row 0 left-to-right starting at the
// slot's leftmost column, row 1 right-to-left, and so on. Each accumulate
// runs one CIM cycle per row, LSB row first, flipping the ripple direction
// every cycle so the group carry latch always hands off between adjacent
// columns. Unused cells of an operand's last row hold the sign extension.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "flexspim/bit_grid.hpp"
#include "flexspim/pc_array.hpp"

namespace flexspim {

class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ResetRule : std::uint8_t { SubtractThreshold, ToZero };

enum class OperandKind : std::uint8_t { Weights, Potentials };

struct OperandShape {
  std::size_t n_rows = 1;
  std::size_t n_cols = 1;
  std::size_t resolution = 1;

  static OperandShape for_resolution(std::size_t resolution, std::size_t n_cols);
  std::size_t cells() const { return n_rows * n_cols; }
};

/// Position of one operand bit relative to its slot's base row and first column.
struct BitCell {
  std::size_t row_offset;
  std::size_t col_offset;
};

struct MacroLayout {
  std::size_t res_w = 0;
  std::size_t res_v = 0;
  std::size_t n_cols = 0;
  OperandShape weight_shape;
  OperandShape potential_shape;
  std::size_t parallelism = 0;   // neuron slots P
  std::size_t standby_cols = 0;  // leftover columns, always standby
  std::size_t cycles = 0;        // CIM cycles per accumulate
  std::size_t macro_cols = kMacroCols;

  ColRange slot_cols(std::size_t slot) const;
  BitCell bit_cell(std::size_t significance) const;
  static CycleDirection direction_for_row(std::size_t row_offset) {
    return row_offset % 2 == 0 ? CycleDirection::LeftToRight : CycleDirection::RightToLeft;
  }
  /// Modes across the whole macro for one cycle direction with every slot active.
  std::vector<PcMode> modes(CycleDirection direction) const;
  /// Same, with only the slots flagged in `selected` active.
  std::vector<PcMode> modes(CycleDirection direction, std::span<const Bit> selected) const;
  /// Placement of an operand of `resolution` bits stored at `base_row` in `slot`.
  OperandPlacement placement(std::size_t slot, std::size_t base_row, std::size_t resolution) const;
  std::size_t rows_for(OperandKind kind) const {
    return kind == OperandKind::Weights ? weight_shape.n_rows : potential_shape.n_rows;
  }
  std::size_t res_for(OperandKind kind) const { return kind == OperandKind::Weights ? res_w : res_v; }
};

MacroLayout plan_layout(std::size_t res_w, std::size_t res_v, std::size_t n_cols,
                        std::size_t macro_rows = kMacroRows, std::size_t macro_cols = kMacroCols);

/// Two's complement bits of `value` at `cells` bits (sign-extended past `resolution`).
std::vector<Bit> encode_operand(std::int64_t value, std::size_t resolution, std::size_t cells);
std::int64_t decode_operand(std::span<const Bit> bits, std::size_t resolution);

/// Integer views of a resolution; defined for resolution <= 63 (wider
/// operands cover all of int64 and never saturate from an int64 addend).
std::int64_t min_signed(std::size_t resolution);
std::int64_t max_signed(std::size_t resolution);
bool fits_signed(std::int64_t value, std::size_t resolution);
std::int64_t saturate(std::int64_t value, std::size_t resolution);

/// Addend resident in the array at `base_row` of every selected slot.
struct ResidentAddend {
  std::size_t base_row;
};
/// Addend streamed through the emulation bits, one value per selected slot
/// (in the order the slots were given).
struct BroadcastAddend {
  std::vector<std::int64_t> values;
  std::size_t resolution;
};
using AddendSource = std::variant<ResidentAddend, BroadcastAddend>;

struct MacroCounters {
  std::uint64_t cim_cycles = 0;
  std::uint64_t compare_ops = 0;
  std::uint64_t saturations = 0;
  std::uint64_t broadcast_bits = 0;
  std::uint64_t loaded_bits = 0;
  std::uint64_t active_col_cycles = 0;
  std::uint64_t standby_col_cycles = 0;
};

struct AccumulateResult {
  std::size_t cycles = 0;
  std::vector<Bit> saturated;  // per given slot
};

class Macro {
 public:
  explicit Macro(std::size_t rows = kMacroRows, std::size_t cols = kMacroCols);

  /// Installs a layout. Replaces any previous one; array contents are kept.
  void configure(const MacroLayout& layout);
  bool planned() const { return layout_.has_value(); }
  const MacroLayout& layout() const;

  void set_reset_rule(ResetRule rule) { reset_rule_ = rule; }
  ResetRule reset_rule() const { return reset_rule_; }
  void set_fault(AdderFault fault) { fault_ = fault; }
  /// Rows at the top of the array kept free for working operands.
  void set_reserved_rows(std::size_t rows) { reserved_rows_ = rows; }
  std::size_t reserved_rows() const { return reserved_rows_; }

  void write_operand(std::size_t slot, std::size_t base_row, std::size_t resolution, std::int64_t value);
  std::int64_t read_operand(std::size_t slot, std::size_t base_row, std::size_t resolution) const;
  /// Raw two's complement access for operands wider than 64 bits; `bits`
  /// holds `resolution` bits LSB first.
  void write_operand_bits(std::size_t slot, std::size_t base_row, std::size_t resolution, std::span<const Bit> bits);
  std::vector<Bit> read_operand_bits(std::size_t slot, std::size_t base_row, std::size_t resolution) const;

  /// V[slot] += addend for every slot in `slots`, saturating at res_v.
  /// The potential of each slot lives at `potential_row`.
  AccumulateResult accumulate(std::span<const std::size_t> slots, std::size_t potential_row,
                              const AddendSource& addend);

  /// Spikes where V >= threshold, then resets the spiking slots.
  std::vector<Bit> fire_and_reset(std::span<const std::size_t> slots, std::size_t potential_row,
                                  std::int64_t threshold);

  /// Writes `values` slot-major into bands of rows starting at `base_row`:
  /// value i goes to slot i % P of band i / P. Returns the number of rows used.
  std::size_t load_stationary(OperandKind kind, std::span<const std::int64_t> values, std::size_t base_row = 0);
  std::vector<std::int64_t> read_stationary(OperandKind kind, std::size_t count, std::size_t base_row = 0) const;

  BitGrid& grid() { return grid_; }
  const BitGrid& grid() const { return grid_; }
  MacroCounters& counters() { return counters_; }
  const MacroCounters& counters() const { return counters_; }

 private:
  void check_slots(std::span<const std::size_t> slots) const;
  void apply_modes(CycleDirection direction, std::span<const Bit> selected);

  BitGrid grid_;
  std::optional<MacroLayout> layout_;
  ResetRule reset_rule_ = ResetRule::SubtractThreshold;
  AdderFault fault_ = AdderFault::None;
  std::size_t reserved_rows_ = 0;
  MacroCounters counters_;
};

}  // namespace flexspim

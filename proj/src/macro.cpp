#include "flexspim/macro.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace flexspim {

namespace {

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

void check_resolution(std::size_t r) {
  if (r == 0 || r > 63) throw ConfigError("integer view needs a resolution in [1, 63], got " + std::to_string(r));
}

// Saturation pattern: sign bit then its complement, sign-extended over `cells`.
std::vector<Bit> saturation_bits(Bit negative, std::size_t resolution, std::size_t cells) {
  std::vector<Bit> bits(cells, negative);
  for (std::size_t i = 0; i + 1 < resolution; ++i) bits[i] = negative ? 0 : 1;
  return bits;
}

}  // namespace

std::int64_t min_signed(std::size_t resolution) {
  check_resolution(resolution);
  return -(std::int64_t{1} << (resolution - 1));
}

std::int64_t max_signed(std::size_t resolution) {
  check_resolution(resolution);
  return (std::int64_t{1} << (resolution - 1)) - 1;
}

bool fits_signed(std::int64_t value, std::size_t resolution) {
  if (resolution == 0) return false;
  if (resolution >= 64) return true;
  return value >= min_signed(resolution) && value <= max_signed(resolution);
}

std::int64_t saturate(std::int64_t value, std::size_t resolution) {
  return std::clamp(value, min_signed(resolution), max_signed(resolution));
}

OperandShape OperandShape::for_resolution(std::size_t resolution, std::size_t n_cols) {
  if (n_cols == 0) throw ConfigError("operand shape needs at least one column");
  return {ceil_div(resolution, n_cols), n_cols, resolution};
}

ColRange MacroLayout::slot_cols(std::size_t slot) const {
  if (slot >= parallelism) throw AddressError("slot " + std::to_string(slot) + " beyond parallelism");
  return ColRange::span_of(slot * n_cols, n_cols);
}

BitCell MacroLayout::bit_cell(std::size_t significance) const {
  const std::size_t row = significance / n_cols;
  const std::size_t idx = significance % n_cols;
  return {row, row % 2 == 0 ? idx : n_cols - 1 - idx};
}

std::vector<PcMode> MacroLayout::modes(CycleDirection direction) const {
  std::vector<Bit> all(parallelism, 1);
  return modes(direction, all);
}

std::vector<PcMode> MacroLayout::modes(CycleDirection direction, std::span<const Bit> selected) const {
  std::vector<PcMode> m(macro_cols, PcMode::Standby);
  const bool l2r = direction == CycleDirection::LeftToRight;
  for (std::size_t s = 0; s < parallelism; ++s) {
    if (s < selected.size() && !selected[s]) continue;
    const std::size_t lo = s * n_cols;
    const std::size_t hi = lo + n_cols - 1;
    for (std::size_t c = lo; c <= hi; ++c) m[c] = l2r ? PcMode::ChainFromLeft : PcMode::ChainFromRight;
    m[l2r ? lo : hi] = PcMode::Boundary;
  }
  return m;
}

OperandPlacement MacroLayout::placement(std::size_t slot, std::size_t base_row, std::size_t resolution) const {
  const ColRange cols = slot_cols(slot);
  OperandPlacement p;
  p.resolution = resolution;
  const std::size_t cells = ceil_div(resolution, n_cols) * n_cols;
  p.cells.reserve(cells);
  for (std::size_t k = 0; k < cells; ++k) {
    const BitCell bc = bit_cell(k);
    p.cells.push_back({base_row + bc.row_offset, cols.lo + bc.col_offset});
  }
  return p;
}

MacroLayout plan_layout(std::size_t res_w, std::size_t res_v, std::size_t n_cols, std::size_t macro_rows,
                        std::size_t macro_cols) {
  if (n_cols == 0 || n_cols > macro_cols) {
    throw ConfigError("n_cols must be in [1, " + std::to_string(macro_cols) + "], got " + std::to_string(n_cols));
  }
  if (res_w == 0 || res_v == 0) throw ConfigError("resolutions must be at least 1 bit");
  if (res_w > macro_rows * macro_cols || res_v > macro_rows * macro_cols) {
    throw CapacityError("operand resolution exceeds the macro capacity");
  }
  MacroLayout l;
  l.res_w = res_w;
  l.res_v = res_v;
  l.n_cols = n_cols;
  l.macro_cols = macro_cols;
  l.weight_shape = OperandShape::for_resolution(res_w, n_cols);
  l.potential_shape = OperandShape::for_resolution(res_v, n_cols);
  if (l.weight_shape.n_rows > macro_rows || l.potential_shape.n_rows > macro_rows) {
    throw CapacityError("operand shape needs more rows than the macro has");
  }
  l.parallelism = macro_cols / n_cols;
  l.standby_cols = macro_cols - l.parallelism * n_cols;
  l.cycles = ceil_div(std::max(res_w, res_v), n_cols);
  return l;
}

std::vector<Bit> encode_operand(std::int64_t value, std::size_t resolution, std::size_t cells) {
  if (!fits_signed(value, resolution)) {
    throw std::out_of_range("value " + std::to_string(value) + " does not fit in " + std::to_string(resolution) +
                            " bits");
  }
  if (cells < resolution) throw ContractViolation("encode_operand: fewer cells than bits");
  std::vector<Bit> bits(cells);
  const auto u = static_cast<std::uint64_t>(value);
  for (std::size_t i = 0; i < cells; ++i) bits[i] = static_cast<Bit>((u >> std::min<std::size_t>(i, 63)) & 1u);
  return bits;
}

std::int64_t decode_operand(std::span<const Bit> bits, std::size_t resolution) {
  if (resolution == 0 || resolution > 64) throw ConfigError("decode_operand: resolution must be in [1, 64]");
  if (bits.size() < resolution) throw ContractViolation("decode_operand: fewer bits than resolution");
  std::uint64_t u = 0;
  for (std::size_t i = 0; i < resolution; ++i) {
    if (bits[i]) u |= std::uint64_t{1} << i;
  }
  if (bits[resolution - 1]) {
    for (std::size_t i = resolution; i < 64; ++i) u |= std::uint64_t{1} << i;
  }
  return static_cast<std::int64_t>(u);
}

Macro::Macro(std::size_t rows, std::size_t cols) : grid_(rows, cols) {}

void Macro::configure(const MacroLayout& layout) {
  if (layout.macro_cols != grid_.cols()) throw ConfigError("layout planned for a different column count");
  layout_ = layout;
  apply_modes(CycleDirection::LeftToRight, {});
}

const MacroLayout& Macro::layout() const {
  if (!layout_) throw ContractViolation("macro has no planned layout");
  return *layout_;
}

void Macro::apply_modes(CycleDirection direction, std::span<const Bit> selected) {
  const auto m = layout_->modes(direction, selected);
  // most cycles reuse the previous configuration; only rewrite cells that change
  for (std::size_t c = 0; c < m.size(); ++c) {
    const std::uint8_t code = ctrl_from_mode(m[c]);
    if (grid_.ctrl(c) != code) grid_.set_ctrl(c, code);
  }
}

void Macro::check_slots(std::span<const std::size_t> slots) const {
  const auto& l = layout();
  std::vector<Bit> seen(l.parallelism, 0);
  for (std::size_t s : slots) {
    if (s >= l.parallelism) throw AddressError("slot " + std::to_string(s) + " beyond parallelism");
    if (seen[s]) throw ContractViolation("slot " + std::to_string(s) + " selected twice");
    seen[s] = 1;
  }
}

void Macro::write_operand(std::size_t slot, std::size_t base_row, std::size_t resolution, std::int64_t value) {
  const auto p = layout().placement(slot, base_row, resolution);
  const auto bits = encode_operand(value, resolution, p.cells.size());
  for (std::size_t k = 0; k < bits.size(); ++k) {
    const Bit b = bits[k];
    grid_.write_row(p.cells[k].row, ColRange{p.cells[k].col, p.cells[k].col, false}, std::span<const Bit>(&b, 1));
  }
}

std::int64_t Macro::read_operand(std::size_t slot, std::size_t base_row, std::size_t resolution) const {
  return decode_operand(read_operand_bits(slot, base_row, resolution), resolution);
}

void Macro::write_operand_bits(std::size_t slot, std::size_t base_row, std::size_t resolution,
                               std::span<const Bit> bits) {
  if (bits.size() != resolution) throw ContractViolation("write_operand_bits: need exactly resolution bits");
  const auto p = layout().placement(slot, base_row, resolution);
  for (std::size_t k = 0; k < p.cells.size(); ++k) {
    const Bit b = bits[std::min(k, resolution - 1)];
    grid_.write_row(p.cells[k].row, ColRange{p.cells[k].col, p.cells[k].col, false}, std::span<const Bit>(&b, 1));
  }
}

std::vector<Bit> Macro::read_operand_bits(std::size_t slot, std::size_t base_row, std::size_t resolution) const {
  const auto p = layout().placement(slot, base_row, resolution);
  std::vector<Bit> bits(resolution);
  for (std::size_t k = 0; k < resolution; ++k) bits[k] = grid_.get(p.cells[k].row, p.cells[k].col);
  return bits;
}

AccumulateResult Macro::accumulate(std::span<const std::size_t> slots, std::size_t potential_row,
                                   const AddendSource& addend) {
  const MacroLayout& l = layout();
  check_slots(slots);
  const auto* resident = std::get_if<ResidentAddend>(&addend);
  const auto* broadcast = std::get_if<BroadcastAddend>(&addend);
  const std::size_t add_res = resident ? l.res_w : broadcast->resolution;
  if (add_res > l.res_v) throw ConfigError("addend resolution exceeds the potential resolution");
  if (broadcast && broadcast->values.size() != slots.size()) {
    throw ContractViolation("broadcast addend needs one value per selected slot");
  }
  const std::size_t add_rows = ceil_div(add_res, l.n_cols);
  const std::size_t v_rows = l.potential_shape.n_rows;

  AccumulateResult result;
  result.saturated.assign(slots.size(), 0);
  if (slots.empty()) return result;

  std::vector<Bit> selected(l.parallelism, 0);
  for (std::size_t s : slots) selected[s] = 1;

  // Sign bits before the update, for overflow detection.
  std::vector<Bit> v_sign(slots.size());
  std::vector<Bit> a_sign(slots.size());
  std::vector<std::vector<Bit>> streamed(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const auto vp = l.placement(slots[i], potential_row, l.res_v);
    v_sign[i] = grid_.get(vp.cells[l.res_v - 1].row, vp.cells[l.res_v - 1].col);
    if (resident) {
      const auto wp = l.placement(slots[i], resident->base_row, l.res_w);
      a_sign[i] = grid_.get(wp.cells[l.res_w - 1].row, wp.cells[l.res_w - 1].col);
    } else {
      streamed[i] = encode_operand(broadcast->values[i], add_res, v_rows * l.n_cols);
      a_sign[i] = streamed[i][add_res - 1];
      counters_.broadcast_bits += add_res;
    }
  }

  // Slot order within the group vector follows column order.
  std::vector<std::size_t> order(slots.begin(), slots.end());
  std::sort(order.begin(), order.end());
  std::vector<Bit> latches(order.size(), 0);

  for (std::size_t k = 0; k < v_rows; ++k) {
    const CycleDirection dir = MacroLayout::direction_for_row(k);
    apply_modes(dir, selected);
    RowSel rb = RowSel::emu();
    grid_.clear_emulation();
    if (resident && k < add_rows) {
      rb = RowSel::at(resident->base_row + k);
    } else {
      for (std::size_t i = 0; i < slots.size(); ++i) {
        const ColRange cols = l.slot_cols(slots[i]);
        std::vector<Bit> emu(l.n_cols);
        for (std::size_t c = 0; c < l.n_cols; ++c) {
          if (resident) {
            emu[c] = a_sign[i];  // sign extension past the resident rows
          } else {
            const std::size_t sig = k * l.n_cols + (k % 2 == 0 ? c : l.n_cols - 1 - c);
            emu[c] = streamed[i][sig];
          }
        }
        grid_.set_emulation(cols, emu);
      }
    }
    const auto cyc = cim_cycle(grid_, potential_row + k, rb, ColRange::span_of(0, grid_.cols()), dir, latches,
                               potential_row + k, fault_);
    latches = cyc.latched_carry;
    counters_.cim_cycles += 1;
    counters_.active_col_cycles += cyc.active_cols;
    counters_.standby_col_cycles += cyc.standby_cols;
  }
  grid_.clear_emulation();
  apply_modes(CycleDirection::LeftToRight, {});
  result.cycles = v_rows;

  for (std::size_t i = 0; i < slots.size(); ++i) {
    const auto vp = l.placement(slots[i], potential_row, l.res_v);
    const Bit r_sign = grid_.get(vp.cells[l.res_v - 1].row, vp.cells[l.res_v - 1].col);
    if (v_sign[i] == a_sign[i] && r_sign != v_sign[i]) {
      const auto sat = saturation_bits(v_sign[i], l.res_v, l.res_v);
      write_operand_bits(slots[i], potential_row, l.res_v, sat);
      result.saturated[i] = 1;
      counters_.saturations += 1;
    }
  }
  return result;
}

std::vector<Bit> Macro::fire_and_reset(std::span<const std::size_t> slots, std::size_t potential_row,
                                       std::int64_t threshold) {
  const MacroLayout& l = layout();
  check_slots(slots);
  if (!fits_signed(threshold, l.res_v)) {
    throw ConfigError("threshold " + std::to_string(threshold) + " outside the potential range");
  }
  if (reset_rule_ == ResetRule::SubtractThreshold && (threshold == std::numeric_limits<std::int64_t>::min() ||
                                                      (l.res_v <= 63 && threshold == min_signed(l.res_v)))) {
    throw ConfigError("subtract-threshold reset needs -threshold to be representable");
  }
  std::vector<OperandPlacement> places;
  places.reserve(slots.size());
  for (std::size_t s : slots) places.push_back(l.placement(s, potential_row, l.res_v));
  auto spikes = compare_ge(grid_, places, threshold, fault_);
  counters_.compare_ops += slots.size();

  std::vector<std::size_t> firing;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (spikes[i]) firing.push_back(slots[i]);
  }
  if (firing.empty()) return spikes;
  if (reset_rule_ == ResetRule::SubtractThreshold) {
    BroadcastAddend neg{std::vector<std::int64_t>(firing.size(), -threshold), l.res_v};
    const auto before = counters_.broadcast_bits;
    accumulate(firing, potential_row, neg);
    counters_.broadcast_bits = before;  // threshold is a local constant, not streamed data
  } else {
    for (std::size_t s : firing) write_operand(s, potential_row, l.res_v, 0);
  }
  return spikes;
}

std::size_t Macro::load_stationary(OperandKind kind, std::span<const std::int64_t> values, std::size_t base_row) {
  const MacroLayout& l = layout();
  const std::size_t rows_each = l.rows_for(kind);
  const std::size_t res = l.res_for(kind);
  const std::size_t bands = ceil_div(values.size(), l.parallelism);
  const std::size_t rows_needed = bands * rows_each;
  const std::size_t usable = grid_.rows() > reserved_rows_ ? grid_.rows() - reserved_rows_ : 0;
  if (base_row + rows_needed > usable) {
    throw CapacityError("stationary operands need " + std::to_string(rows_needed) + " rows from row " +
                        std::to_string(base_row) + " but only " + std::to_string(usable) + " are usable");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    write_operand(i % l.parallelism, base_row + (i / l.parallelism) * rows_each, res, values[i]);
  }
  counters_.loaded_bits += values.size() * res;
  return rows_needed;
}

std::vector<std::int64_t> Macro::read_stationary(OperandKind kind, std::size_t count, std::size_t base_row) const {
  const MacroLayout& l = layout();
  const std::size_t rows_each = l.rows_for(kind);
  std::vector<std::int64_t> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = read_operand(i % l.parallelism, base_row + (i / l.parallelism) * rows_each, l.res_for(kind));
  }
  return out;
}

}  // namespace flexspim

#include "flexspim/pc_array.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace flexspim {

AdderOut full_add(Bit and_bit, Bit nor_bit, Bit carry_in, AdderFault fault) {
  if (and_bit && nor_bit) throw ContractViolation("full_add: AND and NOR cannot both be 1");
  const Bit x = !(and_bit || nor_bit);  // A xor B
  Bit sum = x ^ (carry_in & 1);
  Bit carry = and_bit | (x & carry_in);
  switch (fault) {
    case AdderFault::None: break;
    case AdderFault::CarryStuckAtZero: carry = 0; break;
    case AdderFault::SumInverted: sum ^= 1; break;
  }
  return {sum, carry};
}

std::vector<PcGroup> parse_groups(std::span<const PcMode> modes, CycleDirection direction) {
  std::vector<PcGroup> groups;
  const bool l2r = direction == CycleDirection::LeftToRight;
  const PcMode chain = l2r ? PcMode::ChainFromLeft : PcMode::ChainFromRight;
  const PcMode wrong = l2r ? PcMode::ChainFromRight : PcMode::ChainFromLeft;

  bool open = false;  // a group is being built
  std::size_t start = 0;
  for (std::size_t c = 0; c < modes.size(); ++c) {
    const PcMode m = modes[c];
    if (m == wrong) {
      throw ConfigError("column " + std::to_string(c) + " chains against the cycle direction");
    }
    if (l2r) {
      if (m == PcMode::Boundary) {
        if (open) groups.push_back({start, c - 1});
        open = true;
        start = c;
      } else if (m == chain) {
        if (!open) throw ConfigError("column " + std::to_string(c) + " chains from a group with no boundary");
      } else {  // standby
        if (open) groups.push_back({start, c - 1});
        open = false;
      }
    } else {
      if (m == chain) {
        if (!open) {
          open = true;
          start = c;
        }
      } else if (m == PcMode::Boundary) {
        groups.push_back({open ? start : c, c});
        open = false;
      } else {  // standby
        if (open) throw ConfigError("group ending at column " + std::to_string(c - 1) + " has no boundary");
      }
    }
  }
  if (open) {
    if (l2r) {
      groups.push_back({start, modes.size() - 1});
    } else {
      throw ConfigError("trailing group has no boundary");
    }
  }
  return groups;
}

ChainResult resolve_chain(std::span<const PcMode> modes, std::span<const BitlinePair> lines,
                          CycleDirection direction, std::span<const Bit> latched_carries, AdderFault fault) {
  if (modes.size() != lines.size()) throw ContractViolation("resolve_chain: modes and bitlines differ in length");
  const auto groups = parse_groups(modes, direction);
  if (latched_carries.size() != groups.size()) {
    throw ContractViolation("resolve_chain: expected " + std::to_string(groups.size()) + " latched carries, got " +
                            std::to_string(latched_carries.size()));
  }
  ChainResult out;
  out.sums.assign(modes.size(), 0);
  out.active.assign(modes.size(), 0);
  out.latched_carry.resize(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& grp = groups[g];
    Bit carry = latched_carries[g];
    const std::size_t w = grp.width();
    for (std::size_t k = 0; k < w; ++k) {
      const std::size_t c = direction == CycleDirection::LeftToRight ? grp.lo + k : grp.hi - k;
      const auto r = full_add(lines[c].and_bit, lines[c].nor_bit, carry, fault);
      out.sums[c] = r.sum;
      out.active[c] = 1;
      carry = r.carry_out;
    }
    out.latched_carry[g] = carry;
  }
  return out;
}

std::vector<PcMode> read_modes(const BitGrid& grid, ColRange cols) {
  std::vector<PcMode> modes(cols.width());
  for (std::size_t i = 0; i < modes.size(); ++i) modes[i] = mode_from_ctrl(grid.ctrl(cols.lo + i));
  return modes;
}

CycleResult cim_cycle(BitGrid& grid, std::size_t row_a, RowSel row_b, ColRange cols, CycleDirection direction,
                      std::span<const Bit> latched_carries, std::size_t writeback_row, AdderFault fault) {
  const auto modes = read_modes(grid, cols);

  // Columns in standby are not sensed; give them a neutral bitline pair so
  // an invalid emulation bit there does not fault the readout.
  std::vector<BitlinePair> lines(cols.width(), BitlinePair{0, 1});
  std::size_t run_lo = 0;
  bool in_run = false;
  auto flush = [&](std::size_t end) {
    if (!in_run) return;
    const auto sensed = grid.read_bitlines(row_a, row_b, ColRange{cols.lo + run_lo, cols.lo + end - 1, false});
    std::copy(sensed.begin(), sensed.end(), lines.begin() + static_cast<std::ptrdiff_t>(run_lo));
    in_run = false;
  };
  for (std::size_t i = 0; i < modes.size(); ++i) {
    if (modes[i] == PcMode::Standby) {
      flush(i);
    } else if (!in_run) {
      in_run = true;
      run_lo = i;
    }
  }
  flush(modes.size());

  grid.phases().precharge += 1;
  grid.phases().readout += 1;
  auto chain = resolve_chain(modes, lines, direction, latched_carries, fault);
  grid.phases().compute += 1;
  grid.phases().precharge += 1;

  std::vector<Bit> mask(grid.cols(), 0);
  std::vector<Bit> bits(grid.cols(), 0);
  CycleResult res;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    if (chain.active[i]) {
      mask[cols.lo + i] = 1;
      bits[cols.lo + i] = chain.sums[i];
      ++res.active_cols;
    } else {
      ++res.standby_cols;
    }
  }
  grid.write_back(writeback_row, mask, bits);
  grid.phases().writeback += 1;
  res.latched_carry = std::move(chain.latched_carry);
  return res;
}

std::vector<Bit> compare_ge(const BitGrid& grid, std::span<const OperandPlacement> values, std::int64_t threshold,
                            AdderFault fault) {
  if (threshold == std::numeric_limits<std::int64_t>::min()) throw ConfigError("compare_ge: threshold too small");
  std::vector<Bit> out;
  out.reserve(values.size());
  const auto theta_u = static_cast<std::uint64_t>(threshold);
  const auto neg_theta = static_cast<std::uint64_t>(-threshold);
  auto bit_at = [](std::uint64_t u, std::size_t i) { return static_cast<Bit>((u >> std::min<std::size_t>(i, 63)) & 1u); };
  for (const auto& v : values) {
    const std::size_t r = v.resolution;
    if (r == 0 || v.cells.size() < r) throw ConfigError("compare_ge: bad operand placement");
    if (r < 64) {
      const std::int64_t lo = -(std::int64_t{1} << (r - 1));
      const std::int64_t hi = (std::int64_t{1} << (r - 1)) - 1;
      if (threshold < lo || threshold > hi) {
        throw ConfigError("threshold " + std::to_string(threshold) + " not representable in " + std::to_string(r) +
                          " bits");
      }
    }
    std::vector<Bit> value(r);
    for (std::size_t i = 0; i < r; ++i) value[i] = grid.get(v.cells[i].row, v.cells[i].col);

    // value + (-threshold), both sign-extended to r+1 bits; the sum cannot overflow.
    Bit carry = 0;
    Bit sum = 0;
    for (std::size_t i = 0; i <= r; ++i) {
      const Bit a = value[std::min(i, r - 1)];
      const Bit b = bit_at(neg_theta, i);
      const auto add = full_add(a & b, !(a | b), carry, fault);
      sum = add.sum;
      carry = add.carry_out;
    }
    const Bit ge = sum ? 0 : 1;

    // Shadow: signed magnitude comparison on the raw bits.
    bool shadow_ge = true;
    const Bit vs = value[r - 1];
    const Bit ts = bit_at(theta_u, r - 1);
    if (vs != ts) {
      shadow_ge = vs == 0;
    } else {
      for (std::size_t i = r - 1; i-- > 0;) {
        const Bit tb = bit_at(theta_u, i);
        if (value[i] != tb) {
          shadow_ge = value[i] > tb;
          break;
        }
      }
    }
    if (ge != static_cast<Bit>(shadow_ge)) {
      throw ContractViolation("compare_ge: adder comparison disagrees with the shadow comparison at threshold " +
                              std::to_string(threshold));
    }
    out.push_back(ge);
  }
  return out;
}

}  // namespace flexspim

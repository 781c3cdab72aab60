#include <gtest/gtest.h>

#include <random>

#include "flexspim/bit_grid.hpp"

using namespace flexspim;

namespace {

std::vector<Bit> random_bits(std::mt19937_64& rng, std::size_t n) {
  std::vector<Bit> v(n);
  for (auto& b : v) b = static_cast<Bit>(rng() & 1u);
  return v;
}

std::vector<Bit> snapshot(const BitGrid& g) {
  std::vector<Bit> all;
  for (std::size_t r = 0; r < g.rows(); ++r) {
    auto row = g.read_row(r, ColRange::span_of(0, g.cols()));
    all.insert(all.end(), row.begin(), row.end());
  }
  return all;
}

}  // namespace

TEST(BitGrid, DefaultCapacityIs16kB) {
  BitGrid g;
  EXPECT_EQ(g.rows(), 512u);
  EXPECT_EQ(g.cols(), 256u);
  EXPECT_EQ(g.capacity_bits(), 131072u);
  EXPECT_EQ(g.capacity_bits() / 8, 16u * 1024u);
}

TEST(BitGrid, WriteRowIsolation) {
  BitGrid g;
  std::vector<Bit> ones(8, 1);
  g.write_row(3, ColRange::span_of(0, 8), ones);
  EXPECT_EQ(g.read_row(3, ColRange::span_of(0, 8)), ones);
  const std::vector<Bit> zeros(g.cols(), 0);
  EXPECT_EQ(g.read_row(2, ColRange::span_of(0, g.cols())), zeros);
  EXPECT_EQ(g.read_row(4, ColRange::span_of(0, g.cols())), zeros);
  auto row3 = g.read_row(3, ColRange::span_of(8, g.cols() - 8));
  EXPECT_TRUE(std::all_of(row3.begin(), row3.end(), [](Bit b) { return b == 0; }));
}

TEST(BitGrid, RandomRowRoundTrip) {
  BitGrid g;
  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t row = rng() % g.rows();
    const std::size_t lo = rng() % g.cols();
    const std::size_t w = 1 + rng() % (g.cols() - lo);
    auto bits = random_bits(rng, w);
    g.write_row(row, ColRange::span_of(lo, w), bits);
    ASSERT_EQ(g.read_row(row, ColRange::span_of(lo, w)), bits);
  }
}

TEST(BitGrid, EmptyWriteLeavesGridUnchanged) {
  BitGrid g;
  const auto before = g.checksum();
  g.write_row(10, ColRange::empty(), {});
  EXPECT_EQ(g.checksum(), before);
}

TEST(BitGrid, AddressingErrors) {
  BitGrid g;
  std::vector<Bit> one{1};
  EXPECT_THROW(g.write_row(512, ColRange::span_of(0, 1), one), AddressError);
  EXPECT_THROW(g.write_row(0, ColRange::span_of(256, 1), one), AddressError);
  EXPECT_THROW(g.write_row(0, ColRange::span_of(0, 2), one), ContractViolation);
  EXPECT_THROW(g.read_bitlines(0, RowSel::at(512), ColRange::span_of(0, 1)), AddressError);
}

TEST(BitGrid, ReadBitlinesTruthTable) {
  BitGrid g(2, 4);
  // column c holds (A, B) = (c >> 1, c & 1)
  std::vector<Bit> a{0, 0, 1, 1};
  std::vector<Bit> b{0, 1, 0, 1};
  g.write_row(0, ColRange::span_of(0, 4), a);
  g.write_row(1, ColRange::span_of(0, 4), b);
  const auto lines = g.read_bitlines(0, RowSel::at(1), ColRange::span_of(0, 4));
  for (std::size_t c = 0; c < 4; ++c) {
    EXPECT_EQ(lines[c].and_bit, a[c] & b[c]) << c;
    EXPECT_EQ(lines[c].nor_bit, !(a[c] | b[c])) << c;
  }
  // A=1, B=0
  EXPECT_EQ(lines[2].and_bit, 0);
  EXPECT_EQ(lines[2].nor_bit, 0);
  // A=0, B=0
  EXPECT_EQ(lines[0].and_bit, 0);
  EXPECT_EQ(lines[0].nor_bit, 1);
}

TEST(BitGrid, SameRowActivationRejected) {
  BitGrid g;
  EXPECT_THROW(g.read_bitlines(5, RowSel::at(5), ColRange::span_of(0, 4)), ContractViolation);
}

TEST(BitGrid, ReadoutIsPure) {
  BitGrid g;
  std::mt19937_64 rng(11);
  g.write_row(0, ColRange::span_of(0, 256), random_bits(rng, 256));
  g.write_row(1, ColRange::span_of(0, 256), random_bits(rng, 256));
  const auto before = g.checksum();
  const auto x = g.read_bitlines(0, RowSel::at(1), ColRange::span_of(0, 256));
  const auto y = g.read_bitlines(0, RowSel::at(1), ColRange::span_of(0, 256));
  EXPECT_EQ(g.checksum(), before);
  for (std::size_t c = 0; c < 256; ++c) {
    EXPECT_EQ(x[c].and_bit, y[c].and_bit);
    EXPECT_EQ(x[c].nor_bit, y[c].nor_bit);
  }
}

TEST(BitGrid, WriteBackZeroMaskIsIdentity) {
  BitGrid g;
  std::mt19937_64 rng(3);
  g.write_row(9, ColRange::span_of(0, 256), random_bits(rng, 256));
  const auto before = g.checksum();
  g.write_back(9, std::vector<Bit>(256, 0), std::vector<Bit>(256, 1));
  EXPECT_EQ(g.checksum(), before);
}

TEST(BitGrid, WriteBackMasksColumns) {
  BitGrid g;
  std::vector<Bit> mask(256, 0);
  std::vector<Bit> bits(256, 1);
  for (std::size_t c = 0; c < 16; ++c) {
    mask[c] = 1;
    bits[c] = c % 2;
  }
  g.write_back(0, mask, bits);
  const auto row = g.read_row(0, ColRange::span_of(0, 256));
  for (std::size_t c = 0; c < 16; ++c) EXPECT_EQ(row[c], c % 2);
  for (std::size_t c = 16; c < 256; ++c) EXPECT_EQ(row[c], 0) << c;
}

TEST(BitGrid, WriteBackHalfSelectSafetyFullDiff) {
  BitGrid g(16, 64);
  std::mt19937_64 rng(99);
  for (std::size_t r = 0; r < g.rows(); ++r) g.write_row(r, ColRange::span_of(0, 64), random_bits(rng, 64));
  for (int t = 0; t < 1000; ++t) {
    const auto before = snapshot(g);
    const std::size_t row = rng() % g.rows();
    const auto mask = random_bits(rng, 64);
    const auto bits = random_bits(rng, 64);
    g.write_back(row, mask, bits);
    const auto after = snapshot(g);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      for (std::size_t c = 0; c < 64; ++c) {
        const std::size_t i = r * 64 + c;
        if (r == row && mask[c]) {
          ASSERT_EQ(after[i], bits[c]);
        } else {
          ASSERT_EQ(after[i], before[i]) << "cell " << r << "," << c << " changed outside the mask";
        }
      }
    }
  }
}

TEST(BitGrid, EmulationIsWriteFree) {
  BitGrid g;
  std::mt19937_64 rng(5);
  const auto v = random_bits(rng, 256);
  g.write_row(7, ColRange::span_of(0, 256), v);
  const auto before = g.checksum();
  const auto w = random_bits(rng, 256);
  g.set_emulation(ColRange::span_of(0, 256), w);
  EXPECT_EQ(g.checksum(), before);
  const auto lines = g.read_bitlines(7, RowSel::emu(), ColRange::span_of(0, 256));
  for (std::size_t c = 0; c < 256; ++c) {
    EXPECT_EQ(lines[c].and_bit, v[c] & w[c]);
    EXPECT_EQ(lines[c].nor_bit, !(v[c] | w[c]));
  }
}

TEST(BitGrid, EmulationAllOnesAgainstAllOnes) {
  BitGrid g;
  std::vector<Bit> ones(256, 1);
  g.write_row(0, ColRange::span_of(0, 256), ones);
  g.set_emulation(ColRange::span_of(0, 256), ones);
  for (const auto& l : g.read_bitlines(0, RowSel::emu(), ColRange::span_of(0, 256))) {
    EXPECT_EQ(l.and_bit, 1);
    EXPECT_EQ(l.nor_bit, 0);
  }
}

TEST(BitGrid, InvalidEmulationIsBroadcastError) {
  BitGrid g;
  g.set_emulation(ColRange::span_of(0, 4), std::vector<Bit>(4, 1));
  EXPECT_NO_THROW(g.read_bitlines(0, RowSel::emu(), ColRange::span_of(0, 4)));
  EXPECT_THROW(g.read_bitlines(0, RowSel::emu(), ColRange::span_of(0, 5)), BroadcastError);
  g.clear_emulation();
  EXPECT_THROW(g.read_bitlines(0, RowSel::emu(), ColRange::span_of(0, 1)), BroadcastError);
}

TEST(BitGrid, ControlBitcellsHoldTwoBits) {
  BitGrid g;
  for (std::uint8_t code = 0; code < 4; ++code) {
    g.set_ctrl(17, code);
    EXPECT_EQ(g.ctrl(17), code);
  }
  EXPECT_THROW(g.set_ctrl(17, 4), ContractViolation);
  EXPECT_EQ(g.capacity_bits(), 131072u);  // control bits are not part of the main array
}

TEST(BitGrid, HexDumpMsbLeft) {
  BitGrid g(2, 8);
  std::vector<Bit> bits{1, 0, 0, 0, 0, 0, 0, 1};  // col 0 and col 7 set
  g.write_row(0, ColRange::span_of(0, 8), bits);
  EXPECT_EQ(g.hex_dump(0, 2), "  0: 81\n  1: 00\n");
}

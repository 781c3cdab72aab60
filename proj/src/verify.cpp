#include "flexspim/verify.hpp"

#include <exception>
#include <random>
#include <sstream>

#include "flexspim/cost_model.hpp"
#include "flexspim/macro.hpp"
#include "flexspim/mapper.hpp"
#include "flexspim/random_model.hpp"
#include "flexspim/runtime.hpp"

namespace flexspim {

namespace {

BitlinePair pair_of(Bit a, Bit b) { return {static_cast<Bit>(a & b), static_cast<Bit>(!(a | b))}; }

std::string bits_str(const std::vector<Bit>& b) {
  std::string s;
  for (std::size_t i = b.size(); i-- > 0;) s += b[i] ? '1' : '0';
  return s;
}

// One chained group of width w driven through resolve_chain; a and b are
// indexed by significance. Returns sum bits by significance plus carry out.
std::vector<Bit> chain_add(const std::vector<Bit>& a, const std::vector<Bit>& b, Bit cin, CycleDirection dir,
                           AdderFault fault, Bit& cout) {
  const std::size_t w = a.size();
  const bool ltr = dir == CycleDirection::LeftToRight;
  std::vector<PcMode> modes(w, ltr ? PcMode::ChainFromLeft : PcMode::ChainFromRight);
  modes[ltr ? 0 : w - 1] = PcMode::Boundary;
  std::vector<BitlinePair> lines(w);
  for (std::size_t k = 0; k < w; ++k) lines[ltr ? k : w - 1 - k] = pair_of(a[k], b[k]);
  std::vector<Bit> latch{cin};
  auto r = resolve_chain(modes, lines, dir, latch, fault);
  std::vector<Bit> sums(w);
  for (std::size_t k = 0; k < w; ++k) sums[k] = r.sums[ltr ? k : w - 1 - k];
  cout = r.latched_carry.at(0);
  return sums;
}

// Limb-wise oracle, independent of the bit-level path.
std::vector<Bit> limb_add(const std::vector<Bit>& a, const std::vector<Bit>& b, Bit cin, Bit& cout) {
  const std::size_t w = a.size();
  const std::size_t limbs = (w + 63) / 64;
  std::vector<std::uint64_t> la(limbs, 0), lb(limbs, 0), ls(limbs, 0);
  for (std::size_t i = 0; i < w; ++i) {
    la[i / 64] |= std::uint64_t{a[i]} << (i % 64);
    lb[i / 64] |= std::uint64_t{b[i]} << (i % 64);
  }
  unsigned __int128 carry = cin;
  for (std::size_t i = 0; i < limbs; ++i) {
    unsigned __int128 s = static_cast<unsigned __int128>(la[i]) + lb[i] + carry;
    ls[i] = static_cast<std::uint64_t>(s);
    carry = s >> 64;
  }
  std::vector<Bit> out(w);
  for (std::size_t i = 0; i < w; ++i) out[i] = (ls[i / 64] >> (i % 64)) & 1u;
  // carry out of bit w-1
  const std::size_t top = w % 64;
  cout = top == 0 ? static_cast<Bit>(carry) : static_cast<Bit>((ls[limbs - 1] >> top) & 1u);
  return out;
}

template <typename F>
CheckResult guarded(std::string name, F&& body) {
  CheckResult r;
  r.name = std::move(name);
  try {
    body(r);
  } catch (const std::exception& e) {
    r.passed = false;
    if (r.counterexample.empty()) r.counterexample = std::string("exception: ") + e.what();
    else r.counterexample += std::string(" (exception: ") + e.what() + ")";
  }
  return r;
}

const char* dir_name(CycleDirection d) { return d == CycleDirection::LeftToRight ? "ltr" : "rtl"; }

}  // namespace

CheckResult check_full_adder(AdderFault fault) {
  return guarded("full-adder", [&](CheckResult& r) {
    for (Bit a = 0; a < 2; ++a)
      for (Bit b = 0; b < 2; ++b)
        for (Bit c = 0; c < 2; ++c) {
          ++r.cases;
          auto o = full_add(a & b, !(a | b), c, fault);
          const unsigned t = a + b + c;
          if (o.sum != (t & 1u) || o.carry_out != (t >> 1)) {
            std::ostringstream os;
            os << "a=" << int(a) << " b=" << int(b) << " cin=" << int(c) << ": got sum=" << int(o.sum)
               << " cout=" << int(o.carry_out) << ", want sum=" << (t & 1u) << " cout=" << (t >> 1);
            r.passed = false;
            r.counterexample = os.str();
            return;
          }
        }
  });
}

CheckResult check_chain_exhaustive(std::size_t max_width, AdderFault fault) {
  return guarded("chain-exhaustive", [&](CheckResult& r) {
    for (std::size_t w = 1; w <= max_width; ++w) {
      const std::uint64_t n = std::uint64_t{1} << w;
      for (CycleDirection dir : {CycleDirection::LeftToRight, CycleDirection::RightToLeft})
        for (std::uint64_t x = 0; x < n; ++x)
          for (std::uint64_t y = 0; y < n; ++y)
            for (Bit cin = 0; cin < 2; ++cin) {
              ++r.cases;
              std::vector<Bit> a(w), b(w);
              for (std::size_t i = 0; i < w; ++i) {
                a[i] = (x >> i) & 1u;
                b[i] = (y >> i) & 1u;
              }
              Bit cout = 0;
              auto s = chain_add(a, b, cin, dir, fault, cout);
              const std::uint64_t total = x + y + cin;
              std::uint64_t got = 0;
              for (std::size_t i = 0; i < w; ++i) got |= std::uint64_t{s[i]} << i;
              if (got != (total & (n - 1)) || cout != (total >> w)) {
                std::ostringstream os;
                os << "width " << w << " " << dir_name(dir) << ": " << x << " + " << y << " + " << int(cin)
                   << " gave sum " << got << " carry " << int(cout) << ", want " << (total & (n - 1)) << " carry "
                   << (total >> w);
                r.passed = false;
                r.counterexample = os.str();
                return;
              }
            }
    }
  });
}

CheckResult check_chain_random(std::uint64_t cases, std::size_t max_width, std::uint64_t seed, AdderFault fault) {
  return guarded("chain-random", [&](CheckResult& r) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(0.5);
    for (std::uint64_t i = 0; i < cases; ++i) {
      ++r.cases;
      const std::size_t w = gen::pick(rng, 1, max_width);
      std::vector<Bit> a(w), b(w);
      // all-ones runs stress long carry propagation
      const int style = static_cast<int>(gen::pick(rng, 0, 3));
      for (std::size_t k = 0; k < w; ++k) {
        a[k] = style == 0 ? 1 : coin(rng);
        b[k] = style == 1 ? static_cast<Bit>(!a[k]) : coin(rng);
      }
      const Bit cin = coin(rng);
      const auto dir = coin(rng) ? CycleDirection::LeftToRight : CycleDirection::RightToLeft;
      Bit got_c = 0, want_c = 0;
      auto got = chain_add(a, b, cin, dir, fault, got_c);
      auto want = limb_add(a, b, cin, want_c);
      if (got != want || got_c != want_c) {
        std::ostringstream os;
        os << "width " << w << " " << dir_name(dir) << " cin=" << int(cin) << "\n  a=" << bits_str(a)
           << "\n  b=" << bits_str(b) << "\n  got  " << bits_str(got) << " carry " << int(got_c) << "\n  want "
           << bits_str(want) << " carry " << int(want_c);
        r.passed = false;
        r.counterexample = os.str();
        return;
      }
    }
  });
}

CheckResult check_shape_oracle(std::uint64_t pairs_per_shape, std::uint64_t seed, AdderFault fault) {
  return guarded("shape-oracle", [&](CheckResult& r) {
    std::mt19937_64 rng(seed);
    for (std::size_t rv = 1; rv <= 24; ++rv)
      for (std::size_t rw = 1; rw <= rv; ++rw) {
        auto shapes = divisor_shapes(rv);
        shapes.push_back(gen::pick(rng, 1, rv));  // a non-divisor shape too
        for (std::size_t nc : shapes) {
          const MacroLayout lay = plan_layout(rw, rv, nc);
          Macro m;
          m.configure(lay);
          m.set_fault(fault);
          const std::size_t w_row = lay.potential_shape.n_rows;
          std::vector<std::size_t> slots(lay.parallelism);
          for (std::size_t s = 0; s < slots.size(); ++s) slots[s] = s;
          for (std::uint64_t t = 0; t < pairs_per_shape; ++t) {
            std::vector<std::int64_t> v(slots.size()), w(slots.size());
            for (std::size_t s = 0; s < slots.size(); ++s) {
              v[s] = std::uniform_int_distribution<std::int64_t>(min_signed(rv), max_signed(rv))(rng);
              w[s] = std::uniform_int_distribution<std::int64_t>(min_signed(rw), max_signed(rw))(rng);
              m.write_operand(s, 0, rv, v[s]);
              m.write_operand(s, w_row, rw, w[s]);
            }
            const bool broadcast = t % 2 == 1;
            if (broadcast)
              m.accumulate(slots, 0, BroadcastAddend{w, rw});
            else
              m.accumulate(slots, 0, ResidentAddend{w_row});
            for (std::size_t s = 0; s < slots.size(); ++s) {
              ++r.cases;
              const std::int64_t got = m.read_operand(s, 0, rv);
              const std::int64_t want = saturate(v[s] + w[s], rv);
              if (got != want) {
                std::ostringstream os;
                os << "res_w=" << rw << " res_v=" << rv << " n_cols=" << nc << " slot " << s
                   << (broadcast ? " broadcast" : " resident") << ": " << v[s] << " + " << w[s] << " gave " << got
                   << ", want " << want;
                r.passed = false;
                r.counterexample = os.str();
                return;
              }
            }
          }
        }
      }
  });
}

CheckResult check_snn_shapes(const SnnCheckOptions& opt) {
  return guarded("snn-equivalence", [&](CheckResult& r) {
    std::mt19937_64 rng(opt.seed);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    // always cover the corners, then sample
    pairs.push_back({1, 1});
    pairs.push_back({opt.max_res, opt.max_res});
    while (pairs.size() < opt.res_pairs) {
      const std::size_t rv = gen::pick(rng, 1, opt.max_res);
      pairs.push_back({gen::pick(rng, 1, rv), rv});
    }
    RunOptions ro;
    ro.fault = opt.fault;
    for (auto [rw, rv] : pairs)
      for (std::size_t nc : divisor_shapes(rv)) {
        gen::RandomModelOptions o;
        o.conv_layers = 2;
        o.fc_layers = 1;
        o.timesteps = opt.timesteps;
        o.fixed_res = std::make_pair(rw, rv);
        o.n_cols = nc;
        const ModelSpec m = gen::random_model(rng, o);
        const EventStream ev = gen::random_events(rng, m);
        const RunResult ref = reference_run(m, ev);
        std::vector<Footprint> fp;
        for (const auto& l : m.layers) fp.push_back(footprint(l));
        MapperConfig cfg;
        cfg.n_macros = m.layers.size();
        std::vector<std::optional<std::size_t>> macros;
        for (std::size_t i = 0; i < m.layers.size(); ++i) macros.push_back(i);
        for (OperandKind k : {OperandKind::Weights, OperandKind::Potentials}) {
          ++r.cases;
          std::vector<OperandKind> kinds(m.layers.size(), k);
          // layers that overflow one macro fall back to tiling
          std::vector<std::optional<std::size_t>> mac = macros;
          for (std::size_t i = 0; i < m.layers.size(); ++i) {
            const auto bits = k == OperandKind::Weights ? fp[i].bits_w : fp[i].bits_v;
            if (bits > cfg.usable_bits()) mac[i].reset();
          }
          const auto p = make_plan(fp, Policy::HsOpt, cfg, kinds, mac);
          const RunResult got = run_on_macros(m, ev, p, ro);
          const std::string diff = compare_runs(ref, got);
          if (!diff.empty()) {
            std::ostringstream os;
            os << "res_w=" << rw << " res_v=" << rv << " n_cols=" << nc << " "
               << (k == OperandKind::Weights ? "weight" : "output") << "-stationary: " << diff;
            r.passed = false;
            r.counterexample = os.str();
            return;
          }
        }
      }
  });
}

CheckResult check_dataflow_invariance(std::size_t models, std::uint64_t seed, AdderFault fault) {
  return guarded("dataflow-invariance", [&](CheckResult& r) {
    std::mt19937_64 rng(seed);
    RunOptions ro;
    ro.fault = fault;
    for (std::size_t i = 0; i < models; ++i) {
      gen::RandomModelOptions o;
      o.conv_layers = gen::pick(rng, 1, 3);
      o.fc_layers = gen::pick(rng, 1, 2);
      o.timesteps = 10;
      const ModelSpec m = gen::random_model(rng, o);
      const EventStream ev = gen::random_events(rng, m);
      // a tight budget so the policies disagree on placement and tiling
      std::uint64_t total = 0;
      for (const auto& l : m.layers) total += footprint(l).total();
      MapperConfig cfg;
      cfg.n_macros = 2;
      cfg.capacity_bits = std::max<std::uint64_t>(total / 3, 64);
      std::optional<RunResult> first;
      std::string first_name;
      for (Policy pol : {Policy::WsOnly, Policy::HsMin, Policy::HsMax, Policy::HsOpt}) {
        ++r.cases;
        const auto p = plan(m, pol, cfg);
        RunResult got = run_on_macros(m, ev, p, ro);
        if (!first) {
          first = std::move(got);
          first_name = policy_name(pol);
          continue;
        }
        const std::string diff = compare_runs(*first, got);
        if (!diff.empty()) {
          std::ostringstream os;
          os << "model " << i << ": " << first_name << " vs " << policy_name(pol) << ": " << diff;
          r.passed = false;
          r.counterexample = os.str();
          return;
        }
      }
    }
  });
}

std::vector<CheckResult> run_verify(const VerifyOptions& opt) {
  std::vector<CheckResult> out;
  out.push_back(check_full_adder(opt.fault));
  out.push_back(check_chain_exhaustive(opt.full ? 10 : 6, opt.fault));
  out.push_back(check_chain_random(opt.full ? 100000 : 5000, 256, opt.seed, opt.fault));
  out.push_back(check_shape_oracle(opt.full ? 4 : 1, opt.seed, opt.fault));
  SnnCheckOptions so;
  so.seed = opt.seed;
  so.fault = opt.fault;
  so.res_pairs = opt.full ? 12 : 4;
  so.timesteps = opt.full ? 20 : 8;
  out.push_back(check_snn_shapes(so));
  out.push_back(check_dataflow_invariance(opt.full ? 20 : 5, opt.seed, opt.fault));
  return out;
}

}  // namespace flexspim

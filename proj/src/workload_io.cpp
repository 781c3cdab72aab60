#include "flexspim/workload_io.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

namespace flexspim {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(std::string line) {
  auto h = line.find('#');
  if (h != std::string::npos) line.erase(h);
  return trim(line);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

class LineError {
 public:
  LineError(std::string source, std::size_t line) : where_(std::move(source) + ":" + std::to_string(line) + ": ") {}
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(where_ + msg); }

  template <typename T>
  T integer(const std::string& tok, const std::string& what) const {
    T v{};
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size()) fail("bad " + what + " '" + tok + "'");
    return v;
  }

 private:
  std::string where_;
};

struct Defaults {
  std::size_t res_w = 8;
  std::size_t res_v = 16;
  std::int64_t theta = 1;
  std::optional<std::size_t> n_cols;
  ResetRule reset = ResetRule::SubtractThreshold;
};

bool apply_default(Defaults& d, const std::string& key, const std::string& val, const LineError& err) {
  if (key == "res_w") {
    d.res_w = err.integer<std::size_t>(val, "res_w");
  } else if (key == "res_v") {
    d.res_v = err.integer<std::size_t>(val, "res_v");
  } else if (key == "theta") {
    d.theta = err.integer<std::int64_t>(val, "theta");
  } else if (key == "n_cols") {
    if (val == "auto") {
      d.n_cols.reset();
    } else {
      d.n_cols = err.integer<std::size_t>(val, "n_cols");
    }
  } else if (key == "reset_rule") {
    if (val == "subtract") {
      d.reset = ResetRule::SubtractThreshold;
    } else if (val == "zero") {
      d.reset = ResetRule::ToZero;
    } else {
      err.fail("reset_rule must be subtract or zero");
    }
  } else {
    return false;
  }
  return true;
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::int64_t> parse_weights(const std::string& text, const std::string& source) {
  std::vector<std::int64_t> out;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    LineError err(source, ++n);
    for (const auto& tok : split_ws(strip_comment(line))) out.push_back(err.integer<std::int64_t>(tok, "weight"));
  }
  return out;
}

Workload parse_workload(const std::string& text, const std::string& source, const std::string& base_dir) {
  Workload w;
  ModelSpec& m = w.model;
  Defaults d;
  bool have_input = false;
  std::size_t c = 0, h = 0, wd = 0;
  std::istringstream in(text);
  std::string raw;
  std::size_t n = 0;
  while (std::getline(in, raw)) {
    LineError err(source, ++n);
    std::string line = strip_comment(raw);
    if (line.empty()) continue;
    if (line.rfind("layer", 0) == 0 && (line.size() == 5 || line[5] == ' ' || line[5] == '\t')) {
      if (!have_input) err.fail("input = C H W must come before the first layer");
      auto toks = split_ws(line);
      if (toks.size() < 2) err.fail("layer needs a kind (conv or fc)");
      LayerSpec l;
      if (toks[1] == "conv") {
        l.kind = LayerKind::Conv;
      } else if (toks[1] == "fc") {
        l.kind = LayerKind::Fc;
      } else {
        err.fail("unknown layer kind '" + toks[1] + "'");
      }
      Defaults ld = d;
      std::map<std::string, std::size_t> shape;
      for (std::size_t i = 2; i < toks.size(); ++i) {
        auto eq = toks[i].find('=');
        if (eq == std::string::npos) err.fail("expected key=value, got '" + toks[i] + "'");
        std::string key = toks[i].substr(0, eq), val = toks[i].substr(eq + 1);
        if (apply_default(ld, key, val, err)) continue;
        if (key == "c_out" || key == "k" || key == "stride" || key == "pad") {
          if (shape.count(key)) err.fail("duplicate " + key);
          shape[key] = err.integer<std::size_t>(val, key);
        } else {
          err.fail("unknown layer field '" + key + "'");
        }
      }
      if (!shape.count("c_out")) err.fail("layer needs c_out");
      l.c_out = shape["c_out"];
      if (l.kind == LayerKind::Conv) {
        if (!shape.count("k")) err.fail("conv layer needs k");
        l.kernel = shape["k"];
        l.stride = shape.count("stride") ? shape["stride"] : 1;
        l.padding = shape.count("pad") ? shape["pad"] : 0;
        l.c_in = c;
        l.h_in = h;
        l.w_in = wd;
        try {
          l.derive_output_dims();
        } catch (const ModelError& e) {
          err.fail(e.what());
        }
      } else {
        if (shape.count("k") || shape.count("stride") || shape.count("pad")) err.fail("fc layers take no k/stride/pad");
        l.c_in = c * h * wd;
      }
      l.res_w = ld.res_w;
      l.res_v = ld.res_v;
      l.theta = ld.theta;
      l.n_cols = ld.n_cols;
      l.reset = ld.reset;
      if (l.c_out == 0) err.fail("c_out must be positive");
      c = l.c_out;
      h = l.h_out;
      wd = l.w_out;
      m.layers.push_back(std::move(l));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) err.fail("expected key = value or a layer line");
    std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
    if (apply_default(d, key, val, err)) continue;
    if (key == "name") {
      if (val.empty()) err.fail("empty name");
      m.name = val;
    } else if (key == "timesteps") {
      m.timesteps = err.integer<std::size_t>(val, "timesteps");
    } else if (key == "input") {
      if (!m.layers.empty()) err.fail("input must come before the first layer");
      auto t = split_ws(val);
      if (t.size() != 3) err.fail("input needs C H W");
      m.in_c = err.integer<std::size_t>(t[0], "C");
      m.in_h = err.integer<std::size_t>(t[1], "H");
      m.in_w = err.integer<std::size_t>(t[2], "W");
      c = m.in_c;
      h = m.in_h;
      wd = m.in_w;
      have_input = true;
    } else if (key == "weight_seed") {
      w.weight_seed = err.integer<std::uint64_t>(val, "weight_seed");
    } else if (key == "weights_file") {
      w.weights_file = val;
    } else {
      err.fail("unknown key '" + key + "'");
    }
  }
  if (m.layers.empty()) throw ParseError(source + ": no layers defined");
  if (w.weights_file.empty()) {
    fill_random_weights(m, w.weight_seed);
  } else {
    std::filesystem::path p(w.weights_file);
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    auto all = parse_weights(read_file(p.string()), p.string());
    std::size_t need = 0;
    for (const auto& l : m.layers) need += l.weight_count();
    if (all.size() != need)
      throw ParseError(p.string() + ": expected " + std::to_string(need) + " weights, got " + std::to_string(all.size()));
    std::size_t at = 0;
    for (auto& l : m.layers) {
      l.weights.assign(all.begin() + static_cast<std::ptrdiff_t>(at),
                       all.begin() + static_cast<std::ptrdiff_t>(at + l.weight_count()));
      at += l.weight_count();
    }
  }
  try {
    m.validate();
  } catch (const ModelError& e) {
    throw ParseError(source + ": " + e.what());
  }
  return w;
}

Workload load_workload(const std::string& path) {
  auto dir = std::filesystem::path(path).parent_path().string();
  return parse_workload(read_file(path), path, dir.empty() ? "." : dir);
}

EventStream parse_events(const std::string& text, const std::string& source) {
  EventStream e;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  bool header = false;
  while (std::getline(in, line)) {
    LineError err(source, ++n);
    line = trim(line);
    if (line.empty()) continue;
    if (!header) {
      std::string compact;
      for (char ch : line)
        if (ch != ' ') compact += ch;
      if (compact != "t,c,x,y") err.fail("header must be t,c,x,y");
      header = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string tok; std::getline(ss, tok, ',');) f.push_back(trim(tok));
    if (f.size() != 4) err.fail("expected 4 fields t,c,x,y");
    e.events.push_back({err.integer<std::size_t>(f[0], "t"), err.integer<std::size_t>(f[1], "c"),
                        err.integer<std::size_t>(f[2], "x"), err.integer<std::size_t>(f[3], "y")});
    if (e.events.size() > 1 && e.events.back().t < e.events[e.events.size() - 2].t)
      err.fail("timestamps must be non-decreasing");
  }
  if (!header) throw ParseError(source + ": missing t,c,x,y header");
  return e;
}

EventStream load_events(const std::string& path) { return parse_events(read_file(path), path); }

void write_events(std::ostream& os, const EventStream& events) {
  os << "t,c,x,y\n";
  for (const auto& e : events.events) os << e.t << ',' << e.c << ',' << e.x << ',' << e.y << '\n';
}

void write_spikes_csv(std::ostream& os, const std::vector<SpikeRecord>& spikes) {
  os << "t,layer,c,x,y\n";
  for (const auto& s : spikes) os << s.t << ',' << s.layer << ',' << s.c << ',' << s.x << ',' << s.y << '\n';
}

void write_stats_csv(std::ostream& os, const RunStats& stats) {
  os << "layer,t,cim_cycles,compare_ops,sops,broadcast_bits,stationary_load_bits,streamed_bits,reload_events,"
        "saturations,input_spikes,output_spikes,active_col_cycles,standby_col_cycles\n";
  for (std::size_t l = 0; l < stats.layers; ++l)
    for (std::size_t t = 0; t < stats.timesteps; ++t) {
      const StepStats& s = stats.at(l, t);
      os << l << ',' << t << ',' << s.cim_cycles << ',' << s.compare_ops << ',' << s.sops << ',' << s.broadcast_bits
         << ',' << s.stationary_load_bits << ',' << s.streamed_bits << ',' << s.reload_events << ',' << s.saturations
         << ',' << s.input_spikes << ',' << s.output_spikes << ',' << s.active_col_cycles << ','
         << s.standby_col_cycles << '\n';
    }
}

}  // namespace flexspim

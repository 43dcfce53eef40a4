#include "torusot/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace torusot {

namespace {

struct Value {
  enum class Kind { number, string, array };
  Kind kind = Kind::number;
  double num = 0.0;
  std::string str;
  std::vector<Value> items;
};

[[noreturn]] void fail(int line, const std::string& what) {
  throw std::invalid_argument("config line " + std::to_string(line) + ": " + what);
}

void skip_ws(const std::string& s, std::size_t& i) {
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
}

Value parse_value(const std::string& s, std::size_t& i, int line);

Value parse_array(const std::string& s, std::size_t& i, int line) {
  Value v;
  v.kind = Value::Kind::array;
  ++i;
  skip_ws(s, i);
  if (i < s.size() && s[i] == ']') {
    ++i;
    return v;
  }
  while (true) {
    v.items.push_back(parse_value(s, i, line));
    skip_ws(s, i);
    if (i >= s.size()) fail(line, "unterminated array");
    if (s[i] == ',') {
      ++i;
      skip_ws(s, i);
      continue;
    }
    if (s[i] == ']') {
      ++i;
      return v;
    }
    fail(line, "expected ',' or ']' in array");
  }
}

Value parse_value(const std::string& s, std::size_t& i, int line) {
  skip_ws(s, i);
  if (i >= s.size()) fail(line, "missing value");
  if (s[i] == '[') return parse_array(s, i, line);
  if (s[i] == '"') {
    Value v;
    v.kind = Value::Kind::string;
    ++i;
    while (i < s.size() && s[i] != '"') v.str += s[i++];
    if (i >= s.size()) fail(line, "unterminated string");
    ++i;
    return v;
  }
  std::size_t start = i;
  while (i < s.size() && s[i] != ',' && s[i] != ']' && s[i] != ' ' && s[i] != '\t') ++i;
  std::string tok = s.substr(start, i - start);
  char* end = nullptr;
  double num = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size() || tok.empty()) {
    fail(line, "cannot parse value '" + tok + "' (strings need quotes)");
  }
  Value v;
  v.kind = Value::Kind::number;
  v.num = num;
  return v;
}

double want_number(const Value& v, int line, const std::string& key) {
  if (v.kind != Value::Kind::number) fail(line, key + " must be a number");
  return v.num;
}

std::int64_t want_int(const Value& v, int line, const std::string& key) {
  double num = want_number(v, line, key);
  if (std::abs(num) > 9.0e15 || num != std::floor(num)) fail(line, key + " must be an integer");
  return static_cast<std::int64_t>(num);
}

std::string want_string(const Value& v, int line, const std::string& key) {
  if (v.kind != Value::Kind::string) fail(line, key + " must be a quoted string");
  return v.str;
}

const std::vector<Value>& want_array(const Value& v, int line, const std::string& key) {
  if (v.kind != Value::Kind::array) fail(line, key + " must be an array");
  return v.items;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  std::map<std::string, std::pair<int, Value>> kv;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    // strip comments, respecting quotes
    std::string s;
    bool quoted = false;
    for (char c : raw) {
      if (c == '"') quoted = !quoted;
      if (c == '#' && !quoted) break;
      if (c == '\r') continue;
      s += c;
    }
    std::size_t i = 0;
    skip_ws(s, i);
    if (i >= s.size()) continue;
    if (s[i] == '[') fail(line, "sections are not supported; use flat keys");
    std::size_t key_start = i;
    while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
    std::string key = s.substr(key_start, i - key_start);
    if (key.empty()) fail(line, "expected a key");
    skip_ws(s, i);
    if (i >= s.size() || s[i] != '=') fail(line, "expected '=' after key '" + key + "'");
    ++i;
    Value v = parse_value(s, i, line);
    skip_ws(s, i);
    if (i < s.size()) fail(line, "trailing characters after value for '" + key + "'");
    if (kv.count(key)) fail(line, "duplicate key '" + key + "'");
    kv.emplace(key, std::make_pair(line, std::move(v)));
  }

  std::set<std::string> used;
  auto find = [&](const char* key) -> const std::pair<int, Value>* {
    auto it = kv.find(key);
    if (it == kv.end()) return nullptr;
    used.insert(key);
    return &it->second;
  };

  int d = 1;
  if (const auto* e = find("d")) {
    std::int64_t v = want_int(e->second, e->first, "d");
    if (v < 1 || v > kMaxDim) fail(e->first, "d must be 1, 2, or 3");
    d = static_cast<int>(v);
  }

  ExperimentConfig cfg;
  cfg.d = d;
  cfg.h_rule.c = d == 1 ? 0.4 : 0.49;
  cfg.h_rule.exponent = 1.0 / d;

  std::string density_kind = "uniform";
  if (const auto* e = find("density")) density_kind = want_string(e->second, e->first, "density");
  if (density_kind == "uniform") {
    cfg.density = uniform_density(d);
    if (kv.count("modes")) fail(kv.at("modes").first, "modes requires density = \"cosine\"");
  } else if (density_kind == "cosine") {
    const auto* e = find("modes");
    if (!e) fail(kv.at("density").first, "density = \"cosine\" needs modes");
    std::vector<DensityMode> modes;
    for (const Value& row : want_array(e->second, e->first, "modes")) {
      const auto& cells = want_array(row, e->first, "modes entry");
      if (cells.size() != static_cast<std::size_t>(d) + 2) {
        fail(e->first, "each mode needs d frequencies plus alpha and theta");
      }
      DensityMode mode;
      for (int k = 0; k < d; ++k) {
        mode.m[k] = static_cast<int>(want_int(cells[static_cast<std::size_t>(k)], e->first,
                                              "mode frequency"));
      }
      mode.alpha = want_number(cells[static_cast<std::size_t>(d)], e->first, "mode alpha");
      mode.theta = want_number(cells[static_cast<std::size_t>(d) + 1], e->first, "mode theta");
      modes.push_back(mode);
    }
    cfg.density = cosine_mixture_density(d, modes);
  } else {
    fail(kv.at("density").first, "density must be \"uniform\" or \"cosine\"");
  }

  if (const auto* e = find("name")) cfg.name = want_string(e->second, e->first, "name");
  if (const auto* e = find("p")) cfg.p = want_number(e->second, e->first, "p");
  if (const auto* e = find("n_ladder")) {
    cfg.n_ladder.clear();
    for (const Value& v : want_array(e->second, e->first, "n_ladder")) {
      cfg.n_ladder.push_back(want_int(v, e->first, "n_ladder entry"));
    }
  }
  if (const auto* e = find("h_rule")) {
    const auto& cells = want_array(e->second, e->first, "h_rule");
    if (cells.empty() || cells.size() > 2) fail(e->first, "h_rule is [c] or [c, exponent]");
    cfg.h_rule.c = want_number(cells[0], e->first, "h_rule c");
    if (cells.size() == 2) cfg.h_rule.exponent = want_number(cells[1], e->first, "h_rule exponent");
  }
  if (const auto* e = find("reps")) {
    cfg.reps = static_cast<int>(want_int(e->second, e->first, "reps"));
  }
  if (const auto* e = find("grid_n")) {
    cfg.grid_n = static_cast<int>(want_int(e->second, e->first, "grid_n"));
  }
  if (const auto* e = find("solver")) {
    std::string s = want_string(e->second, e->first, "solver");
    if (s == "exact") {
      cfg.solver = SolverKind::exact;
    } else if (s == "entropic") {
      cfg.solver = SolverKind::entropic;
    } else {
      fail(e->first, "solver must be \"exact\" or \"entropic\"");
    }
  }
  if (const auto* e = find("epsilon")) cfg.epsilon = want_number(e->second, e->first, "epsilon");
  if (const auto* e = find("seed")) {
    std::int64_t v = want_int(e->second, e->first, "seed");
    if (v < 0) fail(e->first, "seed must be nonnegative");
    cfg.seed = static_cast<std::uint64_t>(v);
  }
  if (const auto* e = find("jobs")) {
    cfg.jobs = static_cast<int>(want_int(e->second, e->first, "jobs"));
  }
  if (const auto* e = find("h_ladder")) {
    cfg.h_ladder.clear();
    for (const Value& v : want_array(e->second, e->first, "h_ladder")) {
      cfg.h_ladder.push_back(want_number(v, e->first, "h_ladder entry"));
    }
  }
  if (const auto* e = find("rosenthal_n")) {
    cfg.rosenthal_n.clear();
    for (const Value& v : want_array(e->second, e->first, "rosenthal_n")) {
      cfg.rosenthal_n.push_back(want_int(v, e->first, "rosenthal_n entry"));
    }
  }
  if (const auto* e = find("suite_instances")) {
    cfg.suite_instances = static_cast<int>(want_int(e->second, e->first, "suite_instances"));
  }

  for (const auto& [key, entry] : kv) {
    if (!used.count(key)) fail(entry.first, "unknown key '" + key + "'");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("config: cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace torusot

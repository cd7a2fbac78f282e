#include "coclab/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "coclab/error.hpp"

namespace coclab {

namespace {

using Cfg = ExperimentConfig;

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorCode::ConfigParse, what); }

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

template <class T>
T parse_number(std::string_view s, const std::string& key) {
  T v{};
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size())
    fail("key " + key + ": '" + std::string(s) + "' is not a valid number");
  return v;
}

template <class T>
std::string format_number(T v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

// One entry of the schema: how to read and write a key of the struct.
struct Field {
  std::string section;
  std::string key;
  bool required;
  std::function<void(Cfg&, std::string_view, const std::string&)> set;
  std::function<std::string(const Cfg&)> get;
  std::string dotted() const { return section + "." + key; }
};

template <class T>
Field scalar(std::string section, std::string key, T Cfg::*member, bool required = false) {
  return {std::move(section), std::move(key), required,
          [member](Cfg& c, std::string_view v, const std::string& name) {
            c.*member = parse_number<T>(trim(v), name);
          },
          [member](const Cfg& c) { return format_number(c.*member); }};
}

Field text(std::string section, std::string key, std::string Cfg::*member, std::vector<std::string> allowed,
           bool required = false) {
  return {std::move(section), std::move(key), required,
          [member, allowed](Cfg& c, std::string_view v, const std::string& name) {
            const std::string s(trim(v));
            if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), s) == allowed.end()) {
              std::string list;
              for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
              fail("key " + name + ": '" + s + "' is not one of " + list);
            }
            c.*member = s;
          },
          [member](const Cfg& c) { return c.*member; }};
}

template <class T>
Field list(std::string section, std::string key, std::vector<T> Cfg::*member, bool required = false) {
  return {std::move(section), std::move(key), required,
          [member](Cfg& c, std::string_view v, const std::string& name) {
            std::vector<T> out;
            for (auto tok : split_ws(v)) out.push_back(parse_number<T>(tok, name));
            c.*member = std::move(out);
          },
          [member](const Cfg& c) {
            std::string s;
            for (const auto& x : c.*member) s += (s.empty() ? "" : " ") + format_number(x);
            return s;
          }};
}

Field expressions(std::string section, std::string key, std::vector<std::string> Cfg::*member) {
  return {std::move(section), std::move(key), false,
          [member](Cfg& c, std::string_view v, const std::string&) {
            std::vector<std::string> out;
            std::size_t start = 0;
            v = trim(v);
            while (!v.empty()) {
              const std::size_t semi = v.find(';', start);
              out.emplace_back(trim(v.substr(start, semi == std::string_view::npos ? semi : semi - start)));
              if (semi == std::string_view::npos) break;
              start = semi + 1;
            }
            c.*member = std::move(out);
          },
          [member](const Cfg& c) {
            std::string s;
            for (const auto& x : c.*member) s += (s.empty() ? "" : "; ") + x;
            return s;
          }};
}

const std::vector<Field>& schema() {
  static const std::vector<Field> fields = {
      list("base", "matrix", &Cfg::base_matrix, true),
      list("base", "lattice", &Cfg::lattice),
      scalar("base", "leaf_radius", &Cfg::leaf_radius),

      text("cocycle", "kind", &Cfg::kind, {"constant", "conformal", "expression", "example46"}, true),
      text("cocycle", "lift", &Cfg::lift, {"torus", "cover2", "cover4"}),
      scalar("cocycle", "epsilon", &Cfg::epsilon),
      list("cocycle", "matrix", &Cfg::matrix),
      expressions("cocycle", "entries", &Cfg::entries),
      scalar("cocycle", "beta", &Cfg::beta),
      scalar("cocycle", "scale_amplitude", &Cfg::scale_amplitude),
      scalar("cocycle", "rotation_offset", &Cfg::rotation_offset),
      list("cocycle", "frame", &Cfg::frame),

      scalar("run", "seed", &Cfg::seed),
      scalar("run", "threads", &Cfg::threads),
      scalar("run", "grid", &Cfg::grid),
      scalar("run", "orbit_length", &Cfg::orbit_length),
      scalar("run", "samples", &Cfg::samples),
      scalar("run", "tol", &Cfg::tol),
      scalar("run", "max_period", &Cfg::max_period),
      scalar("run", "periodic_cap", &Cfg::periodic_cap),
      scalar("run", "n_max", &Cfg::n_max),
      scalar("run", "xi", &Cfg::xi),
      scalar("run", "eps", &Cfg::eps),
      scalar("run", "level_rate", &Cfg::level_rate),
      scalar("run", "level_max", &Cfg::level_max),
      scalar("run", "window", &Cfg::window),
      scalar("run", "distortion_cap", &Cfg::distortion_cap),
      text("run", "barycenter", &Cfg::barycenter, {"ball", "karcher"}),
      scalar("run", "n_lo", &Cfg::n_lo),
      scalar("run", "n_hi", &Cfg::n_hi),
      scalar("run", "triples", &Cfg::triples),
      scalar("run", "leaf_distance", &Cfg::leaf_distance),
      scalar("run", "monodromy_steps", &Cfg::monodromy_steps),
      scalar("run", "pair_max_steps", &Cfg::pair_max_steps),
  };
  return fields;
}

const Field& find_field(const std::string& section, const std::string& key) {
  for (const auto& f : schema())
    if (f.section == section && f.key == key) return f;
  fail("unknown key " + section + "." + key);
}

const Field& find_dotted(const std::string& dotted) {
  const auto dot = dotted.find('.');
  if (dot == std::string::npos) fail("key '" + dotted + "' lacks a section");
  return find_field(dotted.substr(0, dot), dotted.substr(dot + 1));
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') fail(where + "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section != "base" && section != "cocycle" && section != "run") fail(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(where + "expected 'key = value'");
    if (section.empty()) fail(where + "key outside of any section");
    const std::string key(trim(line.substr(0, eq)));
    const Field& f = find_field(section, key);
    if (!seen.insert(f.dotted()).second) fail(where + "duplicate key " + f.dotted());
    f.set(cfg, line.substr(eq + 1), f.dotted());
  }
  for (const auto& f : schema()) {
    if (f.required && (!seen.count(f.dotted()) || f.get(cfg).empty()))
      fail("missing required key " + f.dotted());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::string out, section;
  for (const auto& f : schema()) {
    if (f.section != section) {
      if (!section.empty()) out += "\n";
      section = f.section;
      out += "[" + section + "]\n";
    }
    const std::string v = f.get(cfg);
    out += f.key + " =" + (v.empty() ? "" : " " + v) + "\n";
  }
  return out;
}

std::vector<std::string> apply_env_overrides(
    ExperimentConfig& cfg, const std::string& prefix,
    const std::function<std::optional<std::string>(const std::string&)>& lookup) {
  auto get = [&](const std::string& name) -> std::optional<std::string> {
    if (lookup) return lookup(name);
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
  };
  std::vector<std::string> applied;
  for (const auto& f : schema()) {
    std::string name = prefix + f.section + "_" + f.key;
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char ch) { return std::toupper(ch); });
    if (auto v = get(name)) {
      f.set(cfg, *v, f.dotted());
      applied.push_back(f.dotted());
    }
  }
  return applied;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& f : schema()) out.push_back(f.dotted());
  return out;
}

void set_config_value(ExperimentConfig& cfg, const std::string& dotted_key, std::string_view value) {
  const Field& f = find_dotted(dotted_key);
  f.set(cfg, value, f.dotted());
}

std::string get_config_value(const ExperimentConfig& cfg, const std::string& dotted_key) {
  return find_dotted(dotted_key).get(cfg);
}

}  // namespace coclab

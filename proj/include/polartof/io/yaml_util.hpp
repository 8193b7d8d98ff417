#pragma once

// Strict YAML helpers: every lookup carries its dotted key path so errors
// name the offending key, unknown keys are rejected, and angles/times must
// carry a unit suffix.

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "polartof/brdf/tempol_brdf.hpp"
#include "polartof/error.hpp"

namespace polartof::yaml {

inline std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

[[noreturn]] inline void fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::Config, "'" + path + "': " + what);
}

inline void expect_map(const YAML::Node& node, const std::string& path) {
  if (!node.IsMap()) fail(path.empty() ? "<root>" : path, "expected a mapping");
}

inline void check_keys(const YAML::Node& node, const std::string& path, std::initializer_list<const char*> allowed) {
  expect_map(node, path);
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      fail(join(path, key), "unknown key");
  }
}

inline YAML::Node require(const YAML::Node& node, const std::string& path, const std::string& key) {
  const YAML::Node child = node[key];
  if (!child) fail(join(path, key), "missing required key");
  return child;
}

template <typename T>
T scalar(const YAML::Node& node, const std::string& path) {
  if (!node.IsScalar()) fail(path, "expected a scalar");
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    fail(path, "cannot convert '" + node.Scalar() + "'");
  }
}

template <typename T>
T get(const YAML::Node& node, const std::string& path, const std::string& key, T fallback) {
  const YAML::Node child = node[key];
  if (!child) return fallback;
  return scalar<T>(child, join(path, key));
}

// "<number> <unit>" with unit from `units` (name, factor).
inline double with_unit(const YAML::Node& node, const std::string& path,
                        std::initializer_list<std::pair<const char*, double>> units, const char* kind) {
  if (!node.IsScalar()) fail(path, std::string("expected a ") + kind + " with unit suffix");
  static const std::regex re(R"(^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z]+)\s*$)");
  std::smatch m;
  const std::string text = node.Scalar();
  if (!std::regex_match(text, m, re)) fail(path, std::string(kind) + " needs a unit suffix, got '" + text + "'");
  for (const auto& [name, factor] : units)
    if (m[2] == name) return std::stod(m[1]) * factor;
  fail(path, "unknown " + std::string(kind) + " unit '" + std::string(m[2]) + "'");
}

inline double angle(const YAML::Node& node, const std::string& path) {
  return with_unit(node, path, {{"deg", 3.14159265358979323846 / 180.0}, {"rad", 1.0}}, "angle");
}
inline double time(const YAML::Node& node, const std::string& path) {
  return with_unit(node, path, {{"ps", 1e-12}, {"ns", 1e-9}, {"s", 1.0}}, "time");
}

inline std::string format(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}
inline std::string seconds(double v) { return format(v) + " s"; }

// Four values, or one value broadcast to all four.
template <typename F>
std::array<double, 4> four(const YAML::Node& node, const std::string& path, F parse) {
  std::array<double, 4> out{};
  if (node.IsSequence()) {
    if (node.size() != 4) fail(path, "expected 4 values");
    for (std::size_t i = 0; i < 4; ++i) out[i] = parse(node[i], path + "[" + std::to_string(i) + "]");
  } else {
    out.fill(parse(node, path));
  }
  return out;
}

inline TimeGaussBank bank(const YAML::Node& node, const std::string& path) {
  check_keys(node, path, {"a", "mu", "sigma"});
  TimeGaussBank b;
  b.a = four(require(node, path, "a"), join(path, "a"), [](const YAML::Node& n, const std::string& p) { return scalar<double>(n, p); });
  b.mu = four(require(node, path, "mu"), join(path, "mu"), time);
  b.sigma = four(require(node, path, "sigma"), join(path, "sigma"), time);
  return b;
}

inline Material material(const YAML::Node& node, const std::string& path) {
  check_keys(node, path, {"eta", "m", "surface", "subsurface"});
  Material mat;
  mat.eta = scalar<double>(require(node, path, "eta"), join(path, "eta"));
  mat.m = scalar<double>(require(node, path, "m"), join(path, "m"));
  mat.surface = bank(require(node, path, "surface"), join(path, "surface"));
  mat.subsurface = bank(require(node, path, "subsurface"), join(path, "subsurface"));
  try {
    validate(mat);
  } catch (const Error& e) {
    fail(path, e.what());
  }
  return mat;
}

inline std::vector<Material> materials(const YAML::Node& node, const std::string& path) {
  if (!node.IsSequence()) fail(path, "expected a list of materials");
  std::vector<Material> out;
  for (std::size_t i = 0; i < node.size(); ++i) out.push_back(material(node[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline void emit_bank(YAML::Emitter& out, const TimeGaussBank& b) {
  out << YAML::BeginMap;
  out << YAML::Key << "a" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (double v : b.a) out << format(v);
  out << YAML::EndSeq;
  out << YAML::Key << "mu" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (double v : b.mu) out << seconds(v);
  out << YAML::EndSeq;
  out << YAML::Key << "sigma" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (double v : b.sigma) out << seconds(v);
  out << YAML::EndSeq;
  out << YAML::EndMap;
}

inline void emit_material(YAML::Emitter& out, const Material& m) {
  out << YAML::BeginMap;
  out << YAML::Key << "eta" << YAML::Value << format(m.eta);
  out << YAML::Key << "m" << YAML::Value << format(m.m);
  out << YAML::Key << "surface" << YAML::Value;
  emit_bank(out, m.surface);
  out << YAML::Key << "subsurface" << YAML::Value;
  emit_bank(out, m.subsurface);
  out << YAML::EndMap;
}

}  // namespace polartof::yaml

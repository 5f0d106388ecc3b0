#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "scadscope/hierarchy.hpp"

namespace scadscope::testing {

inline std::filesystem::path fixture_dir() { return SCADSCOPE_FIXTURE_DIR; }

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string fixture(const std::string& name) { return read_file(fixture_dir() / name); }

/// All .scad fixtures, sorted by name.
inline std::vector<std::string> fixture_names() {
  std::vector<std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(fixture_dir()))
    if (e.path().extension() == ".scad") out.push_back(e.path().filename().string());
  std::sort(out.begin(), out.end());
  return out;
}

inline ComponentTree tree_of(std::string_view source, BuildOptions options = {}) {
  return build_hierarchy(parse(source), options);
}

/// Full expansion, used where every component should be reachable.
inline BuildOptions deep() {
  BuildOptions o;
  o.expand_depth = 32;
  return o;
}

/// Structural signature: kinds, names and child counts in preorder.
inline void shape_of(const ComponentNode& n, std::string& out) {
  out += std::string(to_string(n.kind)) + ":" + n.name + "(";
  for (const auto& c : n.children) shape_of(c, out);
  out += ")";
}

inline std::string shape_of(const ComponentTree& t) {
  std::string s;
  shape_of(t.root(), s);
  return s;
}

/// Random programs drawn from the supported grammar subset.
class ProgramGenerator {
 public:
  explicit ProgramGenerator(std::uint32_t seed) : rng_(seed) {}

  std::string program() {
    std::string out;
    modules_.clear();
    const int defs = pick(0, 3);
    for (int i = 0; i < defs; ++i) {
      const std::string name = "part" + std::to_string(i);
      out += comment_line(0);
      out += "module " + name + "(s = " + std::to_string(pick(1, 9)) + ") {\n";
      const int n = pick(1, 3);
      for (int k = 0; k < n; ++k) out += statement(1, 2);
      out += "}\n";
      modules_.push_back(name);
    }
    if (pick(0, 1)) out += "size = " + std::to_string(pick(1, 20)) + ";\n";
    const int n = pick(1, 5);
    for (int k = 0; k < n; ++k) out += statement(0, 3);
    return out;
  }

  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

 private:
  std::string indent(int d) { return std::string(static_cast<std::size_t>(d) * 2, ' '); }

  std::string comment_line(int d) {
    static const char* texts[] = {"left part", "support", "hub", "blade", "base plate"};
    if (pick(0, 3) != 0) return "";
    const std::string text = texts[pick(0, 4)];
    return indent(d) + (pick(0, 1) ? "// " + text : "/* " + text + " */") + "\n";
  }

  std::string vec3() {
    return "[" + std::to_string(pick(-9, 9)) + ", " + std::to_string(pick(-9, 9)) + ", " +
           std::to_string(pick(-9, 9)) + "]";
  }

  std::string primitive() {
    switch (pick(0, 3)) {
      case 0: return "cube(" + std::to_string(pick(1, 9)) + ");";
      case 1: return "sphere(r = " + std::to_string(pick(1, 9)) + ");";
      case 2: return "cylinder(h = " + std::to_string(pick(1, 9)) + ", d = 2);";
      default: return "cube([" + std::to_string(pick(1, 5)) + ", 2, 3], center = true);";
    }
  }

  std::string statement(int d, int budget) {
    std::string out = comment_line(d);
    const int choice = budget <= 0 ? 0 : pick(0, 6);
    switch (choice) {
      case 0:
      case 1:
        out += indent(d) + primitive();
        break;
      case 2: {
        const char* tr[] = {"translate", "rotate", "scale", "mirror"};
        out += indent(d) + tr[pick(0, 3)] + "(" + vec3() + ")";
        if (pick(0, 1)) {
          out += "\n" + statement(d + 1, budget - 1);
          return out;
        }
        out += " {\n";
        for (int k = pick(1, 2); k > 0; --k) out += statement(d + 1, budget - 1);
        out += indent(d) + "}";
        break;
      }
      case 3: {
        const char* ops[] = {"union", "difference", "intersection"};
        out += indent(d) + ops[pick(0, 2)] + "() {\n";
        for (int k = pick(1, 3); k > 0; --k) out += statement(d + 1, budget - 1);
        out += indent(d) + "}";
        break;
      }
      case 4: {
        out += indent(d) + "for (i = [0:" + std::to_string(pick(0, 3)) + "]) {\n";
        out += indent(d + 1) + "translate([i * 5, 0, 0]) " + primitive() + "\n";
        if (pick(0, 1)) out += statement(d + 1, budget - 1);
        out += indent(d) + "}";
        break;
      }
      case 5: {
        out += indent(d) + "if (" + (pick(0, 1) ? "true" : "1 > 2") + ") ";
        out += primitive();
        if (pick(0, 1)) out += " else " + primitive();
        break;
      }
      default: {
        if (modules_.empty() || d > 0) {
          out += indent(d) + primitive();
        } else {
          out += indent(d) + modules_[static_cast<std::size_t>(pick(0, static_cast<int>(modules_.size()) - 1))] +
                 "(" + (pick(0, 1) ? std::to_string(pick(1, 5)) : "") + ");";
        }
        break;
      }
    }
    if (pick(0, 4) == 0) out += "  // trailing note";
    return out + "\n";
  }

  std::mt19937 rng_;
  std::vector<std::string> modules_;
};

}  // namespace scadscope::testing

// Command-line stand-in for openscad used by the process backend tests.
// Accepts the same arguments the renderer passes, checks the input with the
// scadscope parser and writes a flat PNG of the requested size.
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "scadscope/renderer.hpp"
#include "scadscope/syntax.hpp"

int main(int argc, char** argv) {
  std::string output, input;
  int width = 1024, height = 768;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "-o" && i + 1 < argc) {
      output = argv[++i];
    } else if (arg.rfind("--imgsize=", 0) == 0) {
      if (std::sscanf(arg.c_str() + 10, "%d,%d", &width, &height) != 2) {
        std::cerr << "ERROR: bad --imgsize\n";
        return 2;
      }
    } else if (arg.rfind("--", 0) != 0) {
      input = arg;
    }
  }
  if (const char* log = std::getenv("SCADSCOPE_STUB_LOG")) {
    std::ofstream out(log, std::ios::app);
    for (int i = 1; i < argc; ++i) out << (i > 1 ? " " : "") << argv[i];
    out << "\n";
  }
  if (input.empty() || output.empty()) {
    std::cerr << "ERROR: usage: stub_renderer -o out.png [options] input.scad\n";
    return 2;
  }
  std::ifstream in(input, std::ios::binary);
  if (!in) {
    std::cerr << "ERROR: cannot open \"" << input << "\"\n";
    return 1;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  const auto parsed = scadscope::parse(ss.str());
  for (const auto& d : parsed->diagnostics)
    std::cerr << (d.severity == scadscope::Severity::kError ? "ERROR" : "WARNING")
              << ": Parser error in file \"" << input << "\", line " << d.span.start_line << ": "
              << d.message << "\n";
  if (!parsed->ok()) return 1;

  scadscope::Image img;
  img.width = width;
  img.height = height;
  img.rgba.assign(4 * static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0xe0);
  std::ofstream out(output, std::ios::binary);
  out << scadscope::encode_png(img);
  return out ? 0 : 1;
}

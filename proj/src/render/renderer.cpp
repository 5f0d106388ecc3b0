#include "scadscope/renderer.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

#include "scadscope/error.hpp"
#include "scadscope/source_span.hpp"
#include "scadscope/syntax.hpp"

namespace scadscope {

namespace {

constexpr std::array<std::pair<NamedView, std::string_view>, 7> kViewNames = {{
    {NamedView::kDefault, "default"},
    {NamedView::kTop, "top"},
    {NamedView::kBottom, "bottom"},
    {NamedView::kFront, "front"},
    {NamedView::kRear, "rear"},
    {NamedView::kLeft, "left"},
    {NamedView::kRight, "right"},
}};

std::string number(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

std::string_view to_string(NamedView view) {
  for (const auto& [v, name] : kViewNames)
    if (v == view) return name;
  return "default";
}

NamedView named_view_from_string(std::string_view name) {
  for (const auto& [v, n] : kViewNames)
    if (n == name) return v;
  throw Error(ErrorCode::kPrecondition, "unknown view '" + std::string(name) + "'");
}

const std::array<NamedView, 6>& six_views() {
  static const std::array<NamedView, 6> kSix = {NamedView::kTop,  NamedView::kBottom,
                                                NamedView::kFront, NamedView::kRear,
                                                NamedView::kLeft,  NamedView::kRight};
  return kSix;
}

std::string_view to_string(Projection p) {
  return p == Projection::kOrthographic ? "orthographic" : "perspective";
}

Camera camera_for(NamedView view) {
  constexpr auto kOrtho = Projection::kOrthographic;
  switch (view) {
    case NamedView::kDefault: return {{55, 0, 25}, 500, Projection::kPerspective};
    case NamedView::kTop: return {{0, 0, 0}, 500, kOrtho};
    case NamedView::kBottom: return {{180, 0, 0}, 500, kOrtho};
    case NamedView::kFront: return {{90, 0, 0}, 500, kOrtho};
    case NamedView::kRear: return {{90, 0, 180}, 500, kOrtho};
    case NamedView::kLeft: return {{90, 0, 90}, 500, kOrtho};
    case NamedView::kRight: return {{90, 0, 270}, 500, kOrtho};
  }
  return {};
}

std::string ViewSpec::key() const {
  std::string out;
  if (named) {
    out = std::string(to_string(*named));
  } else {
    const auto& c = explicit_camera;
    out = "camera(" + number(c.rotation[0]) + "," + number(c.rotation[1]) + "," +
          number(c.rotation[2]) + "," + number(c.distance) + "," +
          std::string(to_string(c.projection)) + ")";
  }
  return out + "@" + std::to_string(width) + "x" + std::to_string(height);
}

void ViewSpec::validate() const {
  if (width <= 0 || height <= 0)
    throw Error(ErrorCode::kPrecondition, "image size must be positive", key());
  if (!named && explicit_camera.distance <= 0)
    throw Error(ErrorCode::kPrecondition, "camera distance must be positive", key());
}

void to_json(nlohmann::json& j, const ViewSpec& v) {
  const auto c = v.camera();
  j = nlohmann::json{{"rotation", c.rotation},
                     {"distance", c.distance},
                     {"projection", to_string(c.projection)},
                     {"width", v.width},
                     {"height", v.height}};
  if (v.named) j["named"] = to_string(*v.named);
}

void from_json(const nlohmann::json& j, ViewSpec& v) {
  if (!j.is_object()) throw Error(ErrorCode::kPrecondition, "view must be an object");
  try {
    v = ViewSpec{};
    if (j.contains("named")) {
      v.named = named_view_from_string(j.at("named").get<std::string>());
    } else if (j.contains("rotation")) {
      v.named.reset();
      v.explicit_camera.rotation = j.at("rotation").get<std::array<double, 3>>();
      v.explicit_camera.distance = j.value("distance", 500.0);
      const auto p = j.value("projection", std::string("perspective"));
      if (p != "perspective" && p != "orthographic")
        throw Error(ErrorCode::kPrecondition, "unknown projection '" + p + "'");
      v.explicit_camera.projection = p == "orthographic" ? Projection::kOrthographic : Projection::kPerspective;
    }
    v.width = j.value("width", v.width);
    v.height = j.value("height", v.height);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kPrecondition, "invalid view", e.what());
  }
  v.validate();
}

void to_json(nlohmann::json& j, const RendererConfig& c) {
  j = nlohmann::json{{"executable", c.executable},
                     {"timeout_seconds", c.timeout_seconds},
                     {"cache_dir", c.cache_dir.string()},
                     {"autocenter", c.autocenter},
                     {"max_concurrent", c.max_concurrent}};
}

void from_json(const nlohmann::json& j, RendererConfig& c) {
  if (!j.is_object()) throw Error(ErrorCode::kConfiguration, "renderer config must be an object");
  try {
    c.executable = j.value("executable", c.executable);
    c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
    c.cache_dir = j.value("cache_dir", c.cache_dir.string());
    c.autocenter = j.value("autocenter", c.autocenter);
    c.max_concurrent = j.value("max_concurrent", c.max_concurrent);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfiguration, "invalid renderer config", e.what());
  }
  if (c.timeout_seconds <= 0) throw Error(ErrorCode::kConfiguration, "renderer timeout must be positive");
}

std::vector<std::string> renderer_arguments(const ViewSpec& view, const std::string& input,
                                            const std::string& output, bool autocenter) {
  const auto c = view.camera();
  std::vector<std::string> args = {
      "-o", output, "--preview",
      "--camera=0,0,0," + number(c.rotation[0]) + "," + number(c.rotation[1]) + "," +
          number(c.rotation[2]) + "," + number(c.distance),
      "--imgsize=" + std::to_string(view.width) + "," + std::to_string(view.height),
      std::string("--projection=") + (c.projection == Projection::kOrthographic ? "o" : "p")};
  if (autocenter) {
    args.push_back("--autocenter");
    args.push_back("--viewall");
  }
  args.push_back(input);
  return args;
}

std::vector<RenderLogEntry> parse_render_log(std::string_view log, int source_line_count) {
  static const std::regex kEntry(R"(^\s*(ERROR|WARNING|DEPRECATED):\s*(.*?)\s*$)");
  static const std::regex kLine(R"(\bline\s+(\d+))");
  std::vector<RenderLogEntry> out;
  std::istringstream in{std::string(log)};
  std::string line;
  while (std::getline(in, line)) {
    std::smatch m;
    if (!std::regex_match(line, m, kEntry)) continue;
    RenderLogEntry e;
    e.severity = m[1].str() == "ERROR" ? Severity::kError : Severity::kWarning;
    e.message = m[2].str();
    std::smatch l;
    if (std::regex_search(e.message, l, kLine)) {
      long n = 0;
      try {
        n = std::stol(l[1].str());
      } catch (const std::exception&) {
        n = source_line_count;
      }
      e.line = static_cast<int>(std::clamp<long>(n, 1, std::max(1, source_line_count)));
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 15];
  }
  return out;
}

RawRender StubBackend::run(const std::string& source, const ViewSpec& view) {
  {
    std::lock_guard lock(mutex_);
    requests_.push_back({source, view});
  }
  RawRender raw;
  raw.command = renderer_arguments(view, "input.scad", "output.png", true);
  raw.command.insert(raw.command.begin(), "stub");
  const auto parsed = parse(source);
  if (!parsed->ok()) {
    for (const auto& d : parsed->diagnostics)
      raw.log += std::string(d.severity == Severity::kError ? "ERROR" : "WARNING") +
                 ": Parser error in file \"input.scad\", line " +
                 std::to_string(d.span.start_line) + ": " + d.message + "\n";
    raw.exit_code = 1;
    return raw;
  }
  Image img;
  img.width = view.width;
  img.height = view.height;
  img.rgba.assign(4 * static_cast<std::size_t>(view.width) * static_cast<std::size_t>(view.height), 0xe0);
  raw.png = encode_png(img);
  return raw;
}

std::vector<StubBackend::Request> StubBackend::requests() const {
  std::lock_guard lock(mutex_);
  return requests_;
}

Renderer::Renderer(RendererConfig config, std::unique_ptr<RenderBackend> backend)
    : config_(std::move(config)), backend_(std::move(backend)) {
  slots_free_ = config_.max_concurrent > 0
                    ? config_.max_concurrent
                    : std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
  if (!config_.cache_dir.empty()) std::filesystem::create_directories(config_.cache_dir);
}

std::optional<RenderResult> Renderer::cached(const std::string& key) const {
  std::lock_guard lock(cache_mutex_);
  auto it = cache_.find(key);
  if (it == cache_.end()) return std::nullopt;
  return it->second;
}

void Renderer::store(const std::string& key, const RenderResult& result) {
  std::lock_guard lock(cache_mutex_);
  cache_[key] = result;
}

RenderResult Renderer::render(const std::string& source, const ViewSpec& view) {
  view.validate();
  const std::string hash = sha256_hex(source);
  const std::string key = hash + "|" + view.key();

  std::filesystem::path disk;
  if (!config_.cache_dir.empty()) {
    std::string name = hash + "-" + view.key() + ".png";
    for (auto& c : name)
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '.') c = '_';
    disk = config_.cache_dir / name;
  }
  auto hit = cached(key);
  if (!hit && !disk.empty() && std::filesystem::exists(disk)) {
    std::ifstream in(disk, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    RenderResult r;
    r.image = ss.str();
    r.view = view;
    r.source_hash = hash;
    store(key, r);
    hit = r;
  }
  if (hit) {
    ++hits_;
    hit->from_cache = true;
    hit->duration_ms = 0;
    return *hit;
  }
  ++misses_;

  {
    std::unique_lock lock(slots_mutex_);
    slots_cv_.wait(lock, [&] { return slots_free_ > 0; });
    --slots_free_;
  }
  struct Release {
    Renderer* self;
    ~Release() {
      {
        std::lock_guard lock(self->slots_mutex_);
        ++self->slots_free_;
      }
      self->slots_cv_.notify_one();
    }
  } release{this};

  const auto start = std::chrono::steady_clock::now();
  RawRender raw = backend_->run(source, view);
  RenderResult r;
  r.duration_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  r.view = view;
  r.source_hash = hash;
  r.command = std::move(raw.command);
  r.error_log = parse_render_log(raw.log, LineIndex(source).line_count());
  if (raw.exit_code == 0 && !raw.png.empty()) {
    r.image = std::move(raw.png);
    store(key, r);
    if (!disk.empty()) {
      std::ofstream out(disk, std::ios::binary);
      out << *r.image;
    }
  } else {
    r.error = "renderer exited with status " + std::to_string(raw.exit_code);
    if (raw.exit_code == 0) r.error = "renderer produced no image";
    if (r.error_log.empty()) r.error_log.push_back({Severity::kError, 0, r.error});
  }
  return r;
}

std::vector<RenderResult> Renderer::render_six_views(const std::string& source, int width, int height) {
  std::vector<RenderResult> out;
  for (auto v : six_views()) {
    ViewSpec spec{v, {}, width, height};
    try {
      out.push_back(render(source, spec));
    } catch (const Error& e) {
      RenderResult r;
      r.view = spec;
      r.source_hash = sha256_hex(source);
      r.error = e.what();
      r.error_log.push_back({Severity::kError, 0, e.what()});
      out.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace scadscope

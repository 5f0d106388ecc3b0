#pragma once

#include <array>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "scadscope/diagnostic.hpp"

namespace scadscope {

enum class NamedView { kDefault, kTop, kBottom, kFront, kRear, kLeft, kRight };
std::string_view to_string(NamedView view);
/// Throws Error(kPrecondition).
NamedView named_view_from_string(std::string_view name);
/// top, bottom, front, rear, left, right.
const std::array<NamedView, 6>& six_views();

enum class Projection { kPerspective, kOrthographic };
std::string_view to_string(Projection projection);

struct Camera {
  std::array<double, 3> rotation{55, 0, 25};  // degrees about x, y, z
  double distance = 500;
  Projection projection = Projection::kPerspective;

  friend bool operator==(const Camera&, const Camera&) = default;
};

Camera camera_for(NamedView view);

struct ViewSpec {
  std::optional<NamedView> named = NamedView::kDefault;
  Camera explicit_camera;  // used when `named` is empty
  int width = 1024;
  int height = 768;

  static ViewSpec of(NamedView view) { return ViewSpec{view, {}, 1024, 768}; }
  static ViewSpec thumbnail(NamedView view) { return ViewSpec{view, {}, 512, 384}; }
  static ViewSpec custom(const Camera& camera, int width = 1024, int height = 768) {
    return ViewSpec{std::nullopt, camera, width, height};
  }

  Camera camera() const { return named ? camera_for(*named) : explicit_camera; }
  /// Stable text identifying the view for cache keys.
  std::string key() const;
  /// Throws Error(kPrecondition) for non-positive sizes.
  void validate() const;

  friend bool operator==(const ViewSpec&, const ViewSpec&) = default;
};

void to_json(nlohmann::json& j, const ViewSpec& view);
/// Accepts {"named": "top"} or {"rotation": [..], "distance": d,
/// "projection": "orthographic"}, plus optional width/height.
void from_json(const nlohmann::json& j, ViewSpec& view);

struct RenderLogEntry {
  Severity severity = Severity::kError;
  int line = 0;  // 1-based line of the submitted source, 0 when unknown
  std::string message;

  friend bool operator==(const RenderLogEntry&, const RenderLogEntry&) = default;
};

struct RenderResult {
  std::optional<std::string> image;  // PNG bytes
  std::string error;                 // set exactly when `image` is empty
  ViewSpec view;
  std::string source_hash;  // sha256 hex of the rendered source
  double duration_ms = 0;
  std::vector<RenderLogEntry> error_log;
  std::vector<std::string> command;  // arguments passed to the renderer
  bool from_cache = false;

  bool ok() const { return image.has_value(); }
};

/// What a backend hands back for one invocation.
struct RawRender {
  int exit_code = 0;
  std::string png;
  std::string log;  // renderer stderr
  std::vector<std::string> command;
};

struct RendererConfig {
  std::string executable;  // empty: $SCADSCOPE_OPENSCAD, then "openscad" on PATH
  int timeout_seconds = 30;
  std::filesystem::path cache_dir;  // empty: memory cache only
  bool autocenter = true;
  int max_concurrent = 0;  // 0: hardware concurrency
};

void to_json(nlohmann::json& j, const RendererConfig& config);
void from_json(const nlohmann::json& j, RendererConfig& config);

class RenderBackend {
 public:
  virtual ~RenderBackend() = default;
  /// Throws Error(kConfiguration) when the renderer cannot be started and
  /// Error(kTimeout) when it overruns.
  virtual RawRender run(const std::string& source, const ViewSpec& view) = 0;
};

/// Arguments for an OpenSCAD-compatible CLI, without the executable.
std::vector<std::string> renderer_arguments(const ViewSpec& view, const std::string& input,
                                            const std::string& output, bool autocenter);

/// Runs an external OpenSCAD-compatible executable.
class ProcessBackend : public RenderBackend {
 public:
  explicit ProcessBackend(RendererConfig config);
  RawRender run(const std::string& source, const ViewSpec& view) override;
  /// Resolved path of the executable, or nullopt when none is usable.
  static std::optional<std::string> locate(const std::string& configured);

 private:
  RendererConfig config_;
};

/// In-process stand-in: records every request and returns a fixed PNG of
/// the requested size. Sources that fail to parse produce the parser's
/// diagnostics in renderer log format and no image.
class StubBackend : public RenderBackend {
 public:
  RawRender run(const std::string& source, const ViewSpec& view) override;
  struct Request {
    std::string source;
    ViewSpec view;
  };
  std::vector<Request> requests() const;

 private:
  mutable std::mutex mutex_;
  std::vector<Request> requests_;
};

/// Extracts ERROR/WARNING lines with their line numbers, clamped to the
/// source's line range.
std::vector<RenderLogEntry> parse_render_log(std::string_view log, int source_line_count);

std::string sha256_hex(std::string_view data);

class Renderer {
 public:
  Renderer(RendererConfig config, std::unique_ptr<RenderBackend> backend);

  /// Cached by (source hash, view). Renderer failures come back as a
  /// result with `error` and `error_log`; a missing executable raises
  /// Error(kConfiguration) and an overrun Error(kTimeout).
  RenderResult render(const std::string& source, const ViewSpec& view);
  /// Ordered top, bottom, front, rear, left, right; each view fails alone.
  std::vector<RenderResult> render_six_views(const std::string& source, int width = 1024,
                                             int height = 768);

  std::size_t cache_hits() const { return hits_.load(); }
  std::size_t cache_misses() const { return misses_.load(); }
  const RendererConfig& config() const { return config_; }

 private:
  std::optional<RenderResult> cached(const std::string& key) const;
  void store(const std::string& key, const RenderResult& result);

  RendererConfig config_;
  std::unique_ptr<RenderBackend> backend_;
  mutable std::mutex cache_mutex_;
  std::map<std::string, RenderResult> cache_;
  std::atomic<std::size_t> hits_{0}, misses_{0};
  std::mutex slots_mutex_;
  std::condition_variable slots_cv_;
  int slots_free_;
};

// PNG helpers (8-bit RGBA).
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgba;

  std::array<std::uint8_t, 4> at(int x, int y) const {
    const auto i = 4 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x));
    return {rgba[i], rgba[i + 1], rgba[i + 2], rgba[i + 3]};
  }
};

std::string encode_png(const Image& image);
/// Throws Error(kRenderFailed) on malformed data.
Image decode_png(std::string_view bytes);

}  // namespace scadscope

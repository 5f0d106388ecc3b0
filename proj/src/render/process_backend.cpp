#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "scadscope/error.hpp"
#include "scadscope/renderer.hpp"

extern char** environ;

namespace scadscope {

namespace {

bool is_executable(const std::filesystem::path& p) {
  std::error_code ec;
  return std::filesystem::is_regular_file(p, ec) && ::access(p.c_str(), X_OK) == 0;
}

std::optional<std::string> search_path(const std::string& name) {
  if (name.find('/') != std::string::npos)
    return is_executable(name) ? std::optional<std::string>(name) : std::nullopt;
  const char* path = std::getenv("PATH");
  if (!path) return std::nullopt;
  std::stringstream dirs(path);
  std::string dir;
  while (std::getline(dirs, dir, ':')) {
    if (dir.empty()) continue;
    const auto candidate = std::filesystem::path(dir) / name;
    if (is_executable(candidate)) return candidate.string();
  }
  return std::nullopt;
}

// Removes the scratch directory on every exit path.
struct ScratchDir {
  std::filesystem::path path;
  ScratchDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "scadscope-render-XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) throw Error(ErrorCode::kIo, "cannot create render scratch directory");
    path = tmpl;
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

}  // namespace

ProcessBackend::ProcessBackend(RendererConfig config) : config_(std::move(config)) {}

std::optional<std::string> ProcessBackend::locate(const std::string& configured) {
  if (!configured.empty()) return search_path(configured);
  if (const char* env = std::getenv("SCADSCOPE_OPENSCAD"); env && *env) return search_path(env);
  return search_path("openscad");
}

RawRender ProcessBackend::run(const std::string& source, const ViewSpec& view) {
  const auto exe = locate(config_.executable);
  if (!exe)
    throw Error(ErrorCode::kConfiguration, "renderer executable not found",
                config_.executable.empty() ? "openscad" : config_.executable);

  ScratchDir scratch;
  const auto input = scratch.path / "input.scad";
  const auto output = scratch.path / "output.png";
  {
    std::ofstream out(input, std::ios::binary);
    out << source;
    if (!out) throw Error(ErrorCode::kIo, "cannot write render input");
  }

  RawRender raw;
  raw.command = renderer_arguments(view, input.string(), output.string(), config_.autocenter);
  std::vector<std::string> argv_storage = raw.command;
  argv_storage.insert(argv_storage.begin(), *exe);
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());
  argv.push_back(nullptr);

  int pipe_fds[2];
  if (::pipe2(pipe_fds, O_CLOEXEC) != 0) throw Error(ErrorCode::kIo, "cannot create pipe");
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, pipe_fds[1], STDERR_FILENO);
  posix_spawn_file_actions_adddup2(&actions, pipe_fds[1], STDOUT_FILENO);
  posix_spawnattr_t attr;
  posix_spawnattr_init(&attr);
  posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
  posix_spawnattr_setpgroup(&attr, 0);
  pid_t pid = 0;
  const int rc = ::posix_spawn(&pid, exe->c_str(), &actions, &attr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  posix_spawnattr_destroy(&attr);
  ::close(pipe_fds[1]);
  if (rc != 0) {
    ::close(pipe_fds[0]);
    throw Error(ErrorCode::kConfiguration, "cannot start renderer", *exe);
  }

  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(config_.timeout_seconds);
  bool timed_out = false;
  char buf[4096];
  while (true) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                          deadline - std::chrono::steady_clock::now())
                          .count();
    if (left <= 0) {
      timed_out = true;
      break;
    }
    pollfd p{pipe_fds[0], POLLIN, 0};
    const int ready = ::poll(&p, 1, static_cast<int>(std::min<long long>(left, 1000)));
    if (ready < 0 && errno == EINTR) continue;
    if (ready <= 0) continue;
    const auto n = ::read(pipe_fds[0], buf, sizeof buf);
    if (n <= 0) break;
    raw.log.append(buf, static_cast<std::size_t>(n));
  }
  ::close(pipe_fds[0]);
  if (timed_out) {
    ::kill(-pid, SIGKILL);
    ::kill(pid, SIGKILL);
  }
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (timed_out)
    throw Error(ErrorCode::kTimeout,
                "renderer exceeded " + std::to_string(config_.timeout_seconds) + " s", view.key());

  raw.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  if (std::filesystem::exists(output)) {
    std::ifstream in(output, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    raw.png = ss.str();
  }
  return raw;
}

}  // namespace scadscope

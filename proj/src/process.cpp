#include "seqpipe/process.hpp"

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string_view>

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

extern char** environ;

#include "seqpipe/error.hpp"

namespace seqpipe::process {

namespace {

int open_sink(const std::optional<fs::path>& path, bool append) {
  if (!path) return ::open("/dev/null", O_WRONLY | O_CLOEXEC);
  if (path->has_parent_path()) fs::create_directories(path->parent_path());
  int flags = O_WRONLY | O_CREAT | O_CLOEXEC | (append ? O_APPEND : O_TRUNC);
  return ::open(path->c_str(), flags, 0644);
}

}  // namespace

Result run(const std::vector<std::string>& argv, const Options& options) {
  Result result;
  if (argv.empty()) {
    result.spawn_error = "empty argv";
    return result;
  }

  int out_fd = open_sink(options.stdout_path, options.append);
  int err_fd = options.stderr_path && options.stdout_path &&
                       *options.stderr_path == *options.stdout_path
                   ? ::fcntl(out_fd, F_DUPFD_CLOEXEC, 0)
                   : open_sink(options.stderr_path, options.append);
  if (out_fd < 0 || err_fd < 0) {
    if (out_fd >= 0) ::close(out_fd);
    if (err_fd >= 0) ::close(err_fd);
    result.spawn_error = std::string("cannot open output file: ") + std::strerror(errno);
    return result;
  }

  // Prepare everything that allocates before fork().
  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);
  // The child environment is assembled here too; setenv() after fork() is not
  // safe in a multi-threaded parent.
  std::vector<std::string> env_storage;
  for (char** e = environ; e && *e; ++e) {
    std::string_view entry(*e);
    auto eq = entry.find('=');
    std::string key(entry.substr(0, eq));
    if (!options.env.count(key)) env_storage.emplace_back(entry);
  }
  for (const auto& [k, v] : options.env) env_storage.push_back(k + "=" + v);
  std::vector<char*> envp;
  for (auto& e : env_storage) envp.push_back(e.data());
  envp.push_back(nullptr);
  std::string cwd = options.cwd ? options.cwd->string() : std::string();

  // Exec failures are reported through a close-on-exec pipe.
  int status_pipe[2];
  if (::pipe2(status_pipe, O_CLOEXEC) != 0) {
    ::close(out_fd);
    ::close(err_fd);
    result.spawn_error = std::string("pipe: ") + std::strerror(errno);
    return result;
  }

  pid_t pid = ::fork();
  if (pid < 0) {
    result.spawn_error = std::string("fork: ") + std::strerror(errno);
    ::close(out_fd);
    ::close(err_fd);
    ::close(status_pipe[0]);
    ::close(status_pipe[1]);
    return result;
  }
  if (pid == 0) {
    ::close(status_pipe[0]);
    int devnull = ::open("/dev/null", O_RDONLY | O_CLOEXEC);
    if (devnull >= 0) ::dup2(devnull, STDIN_FILENO);
    ::dup2(out_fd, STDOUT_FILENO);
    ::dup2(err_fd, STDERR_FILENO);
    if (!cwd.empty() && ::chdir(cwd.c_str()) != 0) {
      int e = errno;
      [[maybe_unused]] auto n = ::write(status_pipe[1], &e, sizeof e);
      ::_exit(127);
    }
    ::execvpe(args[0], args.data(), envp.data());
    int e = errno;
    [[maybe_unused]] auto n = ::write(status_pipe[1], &e, sizeof e);
    ::_exit(127);
  }

  ::close(status_pipe[1]);
  ::close(out_fd);
  ::close(err_fd);

  int child_errno = 0;
  ssize_t n = 0;
  do {
    n = ::read(status_pipe[0], &child_errno, sizeof child_errno);
  } while (n < 0 && errno == EINTR);
  ::close(status_pipe[0]);

  int status = 0;
  while (::waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR) {
      result.spawn_error = std::string("waitpid: ") + std::strerror(errno);
      return result;
    }
  }

  if (n == static_cast<ssize_t>(sizeof child_errno)) {
    result.spawn_error = "cannot execute " + argv[0] + ": " + std::strerror(child_errno);
    result.exit_code = 127;
    return result;
  }
  result.spawned = true;
  if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    result.exit_code = 128 + WTERMSIG(status);
  }
  return result;
}

std::string tail(const fs::path& path, std::size_t max_lines) {
  std::ifstream in(path);
  if (!in) return {};
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    lines.push_back(line);
    if (lines.size() > max_lines) lines.erase(lines.begin());
  }
  std::ostringstream out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out << '\n';
    out << lines[i];
  }
  return out.str();
}

}  // namespace seqpipe::process

#pragma once

// POSIX child runner used by the executor and the scanner adapters.
// One fresh process per call: pipes for stdio, a new process group so the
// whole tree can be killed, rlimits applied in the child between fork and
// exec, wall-clock deadline enforced by the parent with poll().

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>
#include <mutex>
#include <string>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <sched.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include "judgekit/errors.hpp"

namespace judgekit::detail {

struct SpawnSpec {
  std::vector<std::string> argv;  // argv[0] resolved via PATH
  std::string stdin_data;
  std::string cwd;                // empty: inherit
  std::vector<std::string> env;   // exact "KEY=value" environment
  long wall_ms = 0;               // 0: no deadline
  long mem_bytes = 0;             // 0: no RLIMIT_AS
  std::size_t max_capture_bytes = 1 << 20;  // per stream
  bool unshare_network = false;   // hardened mode, needs kernel support
};

struct SpawnResult {
  int exit_code = -1;
  bool signaled = false;
  int term_signal = 0;
  bool timed_out = false;   // parent killed the group at the deadline
  bool exec_failed = false; // child never reached exec
  int exec_errno = 0;
  char exec_stage = 0;      // 'x' exec, 'c' chdir, 'r' rlimit, 'n' netns
  std::string out;
  std::string err;
  bool out_truncated = false;
  bool err_truncated = false;
  long duration_ms = 0;
};

inline void ignore_sigpipe_once() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

inline void set_limit(int resource, rlim_t value) {
  rlimit rl{value, value};
  ::setrlimit(resource, &rl);  // failure reported via RLIMIT probe below
}

inline int make_pipe(int fds[2]) { return ::pipe2(fds, O_CLOEXEC); }

inline long elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now() - start)
      .count();
}

// Runs argv to completion (or the deadline). Throws infra_error only for
// failures on our side of the fork; everything about the child, including
// a failed exec, is reported in the result.
inline SpawnResult run_process(const SpawnSpec& spec) {
  if (spec.argv.empty()) throw infra_error("run_process: empty argv");
  ignore_sigpipe_once();

  int in_fds[2], out_fds[2], err_fds[2], exec_fds[2];
  if (make_pipe(in_fds) || make_pipe(out_fds) || make_pipe(err_fds) ||
      make_pipe(exec_fds)) {
    throw infra_error(std::string("pipe2: ") + std::strerror(errno));
  }

  std::vector<char*> argv;
  argv.reserve(spec.argv.size() + 1);
  for (const std::string& a : spec.argv) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);
  std::vector<char*> envp;
  envp.reserve(spec.env.size() + 1);
  for (const std::string& e : spec.env) envp.push_back(const_cast<char*>(e.c_str()));
  envp.push_back(nullptr);

  const auto start = std::chrono::steady_clock::now();
  const pid_t pid = ::fork();
  if (pid < 0) {
    int saved = errno;
    for (int* p : {in_fds, out_fds, err_fds, exec_fds}) {
      ::close(p[0]);
      ::close(p[1]);
    }
    throw infra_error(std::string("fork: ") + std::strerror(saved));
  }

  if (pid == 0) {
    // Child. Only async-signal-safe calls until exec.
    auto die = [&](char stage) {
      int e = errno;
      char buf[5];
      buf[0] = stage;
      std::memcpy(buf + 1, &e, sizeof(int));
      ssize_t ignored = ::write(exec_fds[1], buf, sizeof(buf));
      (void)ignored;
      ::_exit(127);
    };
    ::setpgid(0, 0);
    if (::dup2(in_fds[0], 0) < 0 || ::dup2(out_fds[1], 1) < 0 ||
        ::dup2(err_fds[1], 2) < 0) {
      die('x');
    }
    if (!spec.cwd.empty() && ::chdir(spec.cwd.c_str()) != 0) die('c');
    if (spec.unshare_network && ::unshare(CLONE_NEWNET) != 0) die('n');
    set_limit(RLIMIT_CORE, 0);
    if (spec.mem_bytes > 0) set_limit(RLIMIT_AS, static_cast<rlim_t>(spec.mem_bytes));
    if (spec.wall_ms > 0) {
      // CPU backstop well above the wall limit; the parent's deadline is
      // the real enforcement point.
      set_limit(RLIMIT_CPU, static_cast<rlim_t>(spec.wall_ms / 1000 * 2 + 4));
    }
    ::execvpe(argv[0], argv.data(), envp.data());
    die('x');
  }

  // Parent.
  ::close(in_fds[0]);
  ::close(out_fds[1]);
  ::close(err_fds[1]);
  ::close(exec_fds[1]);
  ::fcntl(in_fds[1], F_SETFL, O_NONBLOCK);
  ::fcntl(out_fds[0], F_SETFL, O_NONBLOCK);
  ::fcntl(err_fds[0], F_SETFL, O_NONBLOCK);
  ::fcntl(exec_fds[0], F_SETFL, O_NONBLOCK);

  SpawnResult res;
  std::size_t written = 0;
  int stdin_fd = in_fds[1];
  int out_fd = out_fds[0];
  int err_fd = err_fds[0];
  int exec_fd = exec_fds[0];
  std::string exec_msg;
  bool reaped = false;
  bool killed = false;
  int status = 0;

  if (spec.stdin_data.empty()) {
    ::close(stdin_fd);
    stdin_fd = -1;
  }

  auto drain = [&](int& fd, std::string& sink, bool& truncated) {
    char buf[8192];
    for (;;) {
      ssize_t n = ::read(fd, buf, sizeof(buf));
      if (n > 0) {
        std::size_t room =
            sink.size() < spec.max_capture_bytes ? spec.max_capture_bytes - sink.size() : 0;
        if (room > 0) {
          sink.append(buf, std::min<std::size_t>(room, static_cast<std::size_t>(n)));
        }
        if (static_cast<std::size_t>(n) > room) truncated = true;
        continue;
      }
      if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) return;
      if (n < 0 && errno == EINTR) continue;
      ::close(fd);  // EOF or hard error
      fd = -1;
      return;
    }
  };

  while (out_fd >= 0 || err_fd >= 0 || exec_fd >= 0 || !reaped) {
    if (!reaped) {
      pid_t w = ::waitpid(pid, &status, WNOHANG);
      if (w == pid) {
        reaped = true;
        res.duration_ms = elapsed_ms(start);
      }
    }
    if (reaped && out_fd < 0 && err_fd < 0 && exec_fd < 0) break;

    long remaining = -1;
    if (spec.wall_ms > 0 && !killed) {
      remaining = spec.wall_ms - elapsed_ms(start);
      if (remaining <= 0) {
        if (!reaped) res.timed_out = true;
        ::kill(-pid, SIGKILL);
        ::kill(pid, SIGKILL);
        killed = true;
        if (res.timed_out) res.duration_ms = elapsed_ms(start);
      }
    }

    pollfd fds[4];
    nfds_t n = 0;
    auto add = [&](int fd, short events) {
      if (fd >= 0) {
        fds[n].fd = fd;
        fds[n].events = events;
        ++n;
      }
    };
    add(stdin_fd, POLLOUT);
    add(out_fd, POLLIN);
    add(err_fd, POLLIN);
    add(exec_fd, POLLIN);

    int timeout = 50;
    if (remaining > 0 && remaining < timeout) timeout = static_cast<int>(remaining);
    if (n == 0) {
      // Child still running with all pipes closed: just wait for it.
      if (::poll(nullptr, 0, timeout) < 0 && errno != EINTR)
        throw infra_error(std::string("poll: ") + std::strerror(errno));
      continue;
    }
    if (::poll(fds, n, timeout) < 0) {
      if (errno == EINTR) continue;
      throw infra_error(std::string("poll: ") + std::strerror(errno));
    }

    for (nfds_t i = 0; i < n; ++i) {
      if (!fds[i].revents) continue;
      int fd = fds[i].fd;
      if (fd == stdin_fd) {
        if (fds[i].revents & (POLLERR | POLLHUP)) {
          ::close(stdin_fd);
          stdin_fd = -1;
          continue;
        }
        ssize_t w = ::write(stdin_fd, spec.stdin_data.data() + written,
                            spec.stdin_data.size() - written);
        if (w > 0) written += static_cast<std::size_t>(w);
        if ((w < 0 && errno != EAGAIN && errno != EINTR) ||
            written == spec.stdin_data.size()) {
          ::close(stdin_fd);
          stdin_fd = -1;
        }
      } else if (fd == out_fd) {
        drain(out_fd, res.out, res.out_truncated);
      } else if (fd == err_fd) {
        drain(err_fd, res.err, res.err_truncated);
      } else if (fd == exec_fd) {
        char buf[64];
        ssize_t r = ::read(exec_fd, buf, sizeof(buf));
        if (r > 0) {
          exec_msg.append(buf, static_cast<std::size_t>(r));
        } else if (r == 0 || (r < 0 && errno != EAGAIN && errno != EINTR)) {
          ::close(exec_fd);
          exec_fd = -1;
        }
      }
    }
  }

  if (stdin_fd >= 0) ::close(stdin_fd);
  ::kill(-pid, SIGKILL);  // reap any stragglers in the group

  if (exec_msg.size() >= 1 + sizeof(int)) {
    res.exec_failed = true;
    res.exec_stage = exec_msg[0];
    std::memcpy(&res.exec_errno, exec_msg.data() + 1, sizeof(int));
  }
  if (WIFEXITED(status)) {
    res.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    res.signaled = true;
    res.term_signal = WTERMSIG(status);
  }
  if (res.duration_ms == 0) res.duration_ms = elapsed_ms(start);
  return res;
}

}  // namespace judgekit::detail

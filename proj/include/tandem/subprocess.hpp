#pragma once

#include <chrono>
#include <csignal>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include "tandem/errors.hpp"

namespace tandem {

struct RunLimits {
    std::chrono::milliseconds wall{5000};
    std::size_t memory_bytes = 256ull << 20;
};

struct ExecResult {
    int exit_code = -1;
    int term_signal = 0;
    bool timed_out = false;
    std::string out;
    std::string err;
};

namespace detail {

inline void set_cloexec(int fd) { ::fcntl(fd, F_SETFD, FD_CLOEXEC); }

inline void make_pipe(int fds[2]) {
    if (::pipe(fds) != 0) throw SandboxError("pipe() failed: " + std::string(strerror(errno)));
}

} // namespace detail

// Runs argv inside `workdir` with `stdin_data` on stdin, capturing stdout and
// stderr. Enforced in/around the child: its own process group (killed whole
// on deadline), cwd/HOME/TMPDIR pinned to workdir, address-space and core
// rlimits, plus a CPU rlimit as a backstop behind the wall clock.
inline ExecResult run_child(const std::vector<std::string>& argv, const std::string& stdin_data,
                            const std::filesystem::path& workdir, const RunLimits& limits) {
    if (argv.empty()) throw SandboxError("empty argv");
    static const bool sigpipe_ignored = [] {
        ::signal(SIGPIPE, SIG_IGN);
        return true;
    }();
    (void)sigpipe_ignored;

    int in_fd[2], out_fd[2], err_fd[2];
    detail::make_pipe(in_fd);
    detail::make_pipe(out_fd);
    detail::make_pipe(err_fd);

    pid_t pid = ::fork();
    if (pid < 0) throw SandboxError("fork() failed: " + std::string(strerror(errno)));

    if (pid == 0) {
        ::setpgid(0, 0);
        ::dup2(in_fd[0], STDIN_FILENO);
        ::dup2(out_fd[1], STDOUT_FILENO);
        ::dup2(err_fd[1], STDERR_FILENO);
        for (int fd : {in_fd[0], in_fd[1], out_fd[0], out_fd[1], err_fd[0], err_fd[1]}) ::close(fd);

        if (::chdir(workdir.c_str()) != 0) _exit(126);
        ::setenv("HOME", workdir.c_str(), 1);
        ::setenv("TMPDIR", workdir.c_str(), 1);

        rlimit mem{limits.memory_bytes, limits.memory_bytes};
        ::setrlimit(RLIMIT_AS, &mem);
        rlimit core{0, 0};
        ::setrlimit(RLIMIT_CORE, &core);
        rlim_t cpu_secs = static_cast<rlim_t>(limits.wall.count() / 1000 + 2);
        rlimit cpu{cpu_secs, cpu_secs + 1};
        ::setrlimit(RLIMIT_CPU, &cpu);
        rlimit fsize{64ull << 20, 64ull << 20};
        ::setrlimit(RLIMIT_FSIZE, &fsize);

        std::vector<char*> cargv;
        cargv.reserve(argv.size() + 1);
        for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
        cargv.push_back(nullptr);
        ::execvp(cargv[0], cargv.data());
        _exit(127);
    }

    ::close(in_fd[0]);
    ::close(out_fd[1]);
    ::close(err_fd[1]);
    ::fcntl(in_fd[1], F_SETFL, O_NONBLOCK);

    ExecResult res;
    auto deadline = std::chrono::steady_clock::now() + limits.wall;
    size_t written = 0;
    bool stdin_open = true, out_open = true, err_open = true;
    bool killed = false;
    char buf[4096];

    while (out_open || err_open) {
        auto now = std::chrono::steady_clock::now();
        if (!killed && now >= deadline) {
            ::kill(-pid, SIGKILL);
            res.timed_out = true;
            killed = true;
        }
        int timeout_ms = killed
                             ? 100
                             : static_cast<int>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                                    deadline - now)
                                                    .count()) +
                                   1;

        pollfd fds[3];
        nfds_t nfds = 0;
        int out_slot = -1, err_slot = -1, in_slot = -1;
        if (out_open) { out_slot = static_cast<int>(nfds); fds[nfds++] = {out_fd[0], POLLIN, 0}; }
        if (err_open) { err_slot = static_cast<int>(nfds); fds[nfds++] = {err_fd[0], POLLIN, 0}; }
        if (stdin_open) { in_slot = static_cast<int>(nfds); fds[nfds++] = {in_fd[1], POLLOUT, 0}; }

        int rc = ::poll(fds, nfds, timeout_ms);
        if (rc < 0) {
            if (errno == EINTR) continue;
            break;
        }
        if (rc == 0 && killed) break; // child dead, pipes drained enough

        auto drain = [&](int slot, int fd, bool& open_flag, std::string& sink) {
            if (slot < 0) return;
            if (fds[slot].revents & (POLLIN | POLLHUP | POLLERR)) {
                ssize_t n = ::read(fd, buf, sizeof buf);
                if (n > 0)
                    sink.append(buf, static_cast<size_t>(n));
                else if (n == 0 || (n < 0 && errno != EAGAIN && errno != EINTR)) {
                    ::close(fd);
                    open_flag = false;
                }
            }
        };
        drain(out_slot, out_fd[0], out_open, res.out);
        drain(err_slot, err_fd[0], err_open, res.err);

        if (in_slot >= 0 && (fds[in_slot].revents & (POLLOUT | POLLERR | POLLHUP))) {
            bool close_stdin = fds[in_slot].revents & (POLLERR | POLLHUP);
            if (!close_stdin) {
                ssize_t n = ::write(in_fd[1], stdin_data.data() + written, stdin_data.size() - written);
                if (n > 0) written += static_cast<size_t>(n);
                else if (n < 0 && errno != EAGAIN && errno != EINTR) close_stdin = true;
            }
            if (close_stdin || written >= stdin_data.size()) {
                ::close(in_fd[1]);
                stdin_open = false;
            }
        }
    }
    if (stdin_open) ::close(in_fd[1]);
    if (out_open) ::close(out_fd[0]);
    if (err_open) ::close(err_fd[0]);

    if (!killed && std::chrono::steady_clock::now() >= deadline) {
        // pipes closed early (e.g. by a daemonizing child); still enforce the wall
        ::kill(-pid, SIGKILL);
    }

    int status = 0;
    while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {}
    if (WIFEXITED(status)) res.exit_code = WEXITSTATUS(status);
    if (WIFSIGNALED(status)) {
        res.term_signal = WTERMSIG(status);
        res.exit_code = 128 + res.term_signal;
    }
    return res;
}

// Self-deleting scratch directory for one sandboxed run.
class TempDir {
public:
    explicit TempDir(const std::string& prefix) {
        auto tmpl = (std::filesystem::temp_directory_path() / (prefix + "-XXXXXX")).string();
        std::vector<char> buf(tmpl.begin(), tmpl.end());
        buf.push_back('\0');
        if (::mkdtemp(buf.data()) == nullptr)
            throw SandboxError("mkdtemp failed: " + std::string(strerror(errno)));
        path_ = buf.data();
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

} // namespace tandem

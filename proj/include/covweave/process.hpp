#pragma once

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace covweave {

struct ProcessResult {
    int exit_code = -1;
    bool timed_out = false;
    std::string output;  // combined stdout
};

/// Runs a child process with stdin from /dev/null, capturing stdout, with a
/// hard timeout (SIGKILL on expiry). POSIX only.
inline ProcessResult run_process(const std::vector<std::string>& argv, int timeout_ms) {
    if (argv.empty()) throw std::runtime_error("run_process: empty argv");

    int out_pipe[2];
    if (pipe(out_pipe) != 0) throw std::runtime_error("run_process: pipe failed");

    pid_t pid = fork();
    if (pid < 0) {
        close(out_pipe[0]);
        close(out_pipe[1]);
        throw std::runtime_error("run_process: fork failed");
    }
    if (pid == 0) {
        int devnull = open("/dev/null", O_RDONLY);
        if (devnull >= 0) dup2(devnull, STDIN_FILENO);
        dup2(out_pipe[1], STDOUT_FILENO);
        int err_null = open("/dev/null", O_WRONLY);
        if (err_null >= 0) dup2(err_null, STDERR_FILENO);
        close(out_pipe[0]);
        close(out_pipe[1]);
        std::vector<char*> args;
        args.reserve(argv.size() + 1);
        for (const std::string& a : argv) args.push_back(const_cast<char*>(a.c_str()));
        args.push_back(nullptr);
        execvp(args[0], args.data());
        _exit(127);
    }

    close(out_pipe[1]);
    ProcessResult result;
    auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    char buf[4096];
    bool child_done = false;
    int status = 0;
    for (;;) {
        pollfd pfd{out_pipe[0], POLLIN, 0};
        int remaining = static_cast<int>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                             deadline - std::chrono::steady_clock::now())
                                             .count());
        if (remaining <= 0) {
            kill(pid, SIGKILL);
            result.timed_out = true;
            break;
        }
        int pr = poll(&pfd, 1, remaining < 50 ? remaining : 50);
        if (pr > 0 && (pfd.revents & (POLLIN | POLLHUP))) {
            ssize_t n = read(out_pipe[0], buf, sizeof(buf));
            if (n > 0) {
                result.output.append(buf, static_cast<std::size_t>(n));
                continue;
            }
            if (n == 0) break;  // EOF
        }
        pid_t w = waitpid(pid, &status, WNOHANG);
        if (w == pid) {
            child_done = true;
            // drain any remaining output
            ssize_t n;
            while ((n = read(out_pipe[0], buf, sizeof(buf))) > 0) {
                result.output.append(buf, static_cast<std::size_t>(n));
            }
            break;
        }
    }
    close(out_pipe[0]);
    if (!child_done) waitpid(pid, &status, 0);
    if (!result.timed_out && WIFEXITED(status)) {
        result.exit_code = WEXITSTATUS(status);
    }
    return result;
}

/// Writes source to a unique temp file, runs `interpreter file`, cleans up.
inline ProcessResult run_source_file(const std::string& interpreter, const std::string& source,
                                     int timeout_ms, const std::string& suffix = ".py") {
    static std::atomic<std::uint64_t> counter{0};
    auto dir = std::filesystem::temp_directory_path();
    std::string name = "covweave_" + std::to_string(::getpid()) + "_" +
                       std::to_string(counter.fetch_add(1)) + suffix;
    auto path = dir / name;
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write temp file: " + path.string());
        out << source;
    }
    ProcessResult result = run_process({interpreter, path.string()}, timeout_ms);
    std::error_code ec;
    std::filesystem::remove(path, ec);
    return result;
}

/// Interpreter binary discovered via config/env: COVWEAVE_PYTHON wins, then
/// plain "python3" on PATH.
inline std::string default_interpreter() {
    if (const char* env = std::getenv("COVWEAVE_PYTHON"); env && *env) return env;
    return "python3";
}

inline bool interpreter_available(const std::string& interpreter) {
    try {
        ProcessResult r = run_process({interpreter, "--version"}, 5000);
        return !r.timed_out && r.exit_code == 0;
    } catch (const std::exception&) {
        return false;
    }
}

}  // namespace covweave

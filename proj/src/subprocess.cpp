#include "tstar/subprocess.hpp"

#include <csignal>
#include <cstring>

#include <sys/wait.h>
#include <unistd.h>

#include "tstar/errors.hpp"

namespace tstar {

namespace {

// Writes to a dead child must surface as ScorerError, not SIGPIPE.
void ignore_sigpipe_once() {
    static const bool done = [] {
        std::signal(SIGPIPE, SIG_IGN);
        return true;
    }();
    (void)done;
}

} // namespace

LineProcess::LineProcess(const std::string& command) {
    ignore_sigpipe_once();

    int to_child[2];
    int from_child[2];
    if (pipe(to_child) != 0) throw ScorerError("pipe failed: " + std::string(strerror(errno)));
    if (pipe(from_child) != 0) {
        close(to_child[0]);
        close(to_child[1]);
        throw ScorerError("pipe failed: " + std::string(strerror(errno)));
    }

    pid_ = fork();
    if (pid_ < 0) {
        close(to_child[0]); close(to_child[1]);
        close(from_child[0]); close(from_child[1]);
        throw ScorerError("fork failed: " + std::string(strerror(errno)));
    }
    if (pid_ == 0) {
        dup2(to_child[0], STDIN_FILENO);
        dup2(from_child[1], STDOUT_FILENO);
        close(to_child[0]); close(to_child[1]);
        close(from_child[0]); close(from_child[1]);
        execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    in_fd_ = to_child[1];
    out_fd_ = from_child[0];
}

LineProcess::~LineProcess() {
    close_fd(in_fd_);
    close_fd(out_fd_);
    if (pid_ > 0) {
        int status = 0;
        waitpid(pid_, &status, 0);
        pid_ = -1;
    }
}

void LineProcess::close_fd(int& fd) {
    if (fd >= 0) {
        close(fd);
        fd = -1;
    }
}

void LineProcess::send_line(const std::string& line) {
    if (in_fd_ < 0) throw ScorerError("scorer process stdin closed");
    std::string payload = line;
    payload.push_back('\n');
    const char* p = payload.data();
    std::size_t remaining = payload.size();
    while (remaining > 0) {
        const ssize_t n = write(in_fd_, p, remaining);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw ScorerError("write to scorer failed: " + std::string(strerror(errno)));
        }
        p += n;
        remaining -= static_cast<std::size_t>(n);
    }
}

std::optional<std::string> LineProcess::read_line() {
    if (out_fd_ < 0) return std::nullopt;
    for (;;) {
        const auto nl = buffer_.find('\n');
        if (nl != std::string::npos) {
            std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            return line;
        }
        char chunk[4096];
        const ssize_t n = read(out_fd_, chunk, sizeof(chunk));
        if (n < 0) {
            if (errno == EINTR) continue;
            throw ScorerError("read from scorer failed: " + std::string(strerror(errno)));
        }
        if (n == 0) {
            if (buffer_.empty()) return std::nullopt;
            std::string line = std::move(buffer_);
            buffer_.clear();
            return line;
        }
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

} // namespace tstar

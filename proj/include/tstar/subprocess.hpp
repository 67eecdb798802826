#pragma once

#include <optional>
#include <string>

#include <sys/types.h>

namespace tstar {

// Child process with line-oriented stdin/stdout pipes. The command string is
// run through /bin/sh -c. Single-consumer: one object owns the pipe pair.
class LineProcess {
public:
    explicit LineProcess(const std::string& command);
    ~LineProcess();

    LineProcess(const LineProcess&) = delete;
    LineProcess& operator=(const LineProcess&) = delete;

    // Throws ScorerError when the child has gone away.
    void send_line(const std::string& line);

    // One line without the trailing newline; nullopt on EOF.
    std::optional<std::string> read_line();

    bool running() const { return pid_ > 0; }

private:
    void close_fd(int& fd);

    pid_t pid_ = -1;
    int in_fd_ = -1;  // child's stdin (we write)
    int out_fd_ = -1; // child's stdout (we read)
    std::string buffer_;
};

} // namespace tstar

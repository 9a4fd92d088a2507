#include <atomic>
#include <cerrno>
#include <csignal>
#include <filesystem>
#include <string>
#include <thread>

#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "emseg/emvol.hpp"
#include "emseg/postproc.hpp"

namespace emseg {

namespace {

namespace fs = std::filesystem;

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += "'\\''";
        else out += c;
    }
    return out + "'";
}

[[noreturn]] void failure(const std::string& what) { throw Error(ErrorCode::PredictorFailure, what); }

int run_shell(const std::string& command_line, std::chrono::milliseconds timeout) {
    const pid_t pid = ::fork();
    if (pid < 0) failure("fork failed");
    if (pid == 0) {
        ::setpgid(0, 0);
        ::execl("/bin/sh", "sh", "-c", command_line.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    auto nap = std::chrono::milliseconds(1);
    for (;;) {
        int status = 0;
        const pid_t r = ::waitpid(pid, &status, WNOHANG);
        if (r == pid) {
            if (WIFEXITED(status)) return WEXITSTATUS(status);
            failure("predictor terminated by signal " + std::to_string(WTERMSIG(status)));
        }
        if (r < 0 && errno != EINTR) failure("waitpid failed");
        if (std::chrono::steady_clock::now() >= deadline) {
            ::kill(-pid, SIGKILL);
            ::kill(pid, SIGKILL);
            ::waitpid(pid, &status, 0);
            failure("predictor timed out after " + std::to_string(timeout.count()) + " ms");
        }
        std::this_thread::sleep_for(nap);
        nap = std::min(nap * 2, std::chrono::milliseconds(50));
    }
}

}  // namespace

Predictor subprocess_predictor(std::string command, std::chrono::milliseconds timeout) {
    return [command = std::move(command), timeout](const Volume& input) {
        static std::atomic<unsigned> counter{0};
        const fs::path dir = fs::temp_directory_path() / ("emseg_predict_" + std::to_string(::getpid()) + "_" +
                                                         std::to_string(counter++));
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) failure("cannot create " + dir.string());
        struct Cleanup {
            fs::path p;
            ~Cleanup() {
                std::error_code e;
                fs::remove_all(p, e);
            }
        } cleanup{dir};

        const fs::path in = dir / "input.emvol";
        const fs::path out = dir / "output.emvol";
        save_volume(input, in);
        const int code = run_shell(command + " " + shell_quote(in.string()) + " " + shell_quote(out.string()), timeout);
        if (code != 0) failure("predictor exited with status " + std::to_string(code));
        try {
            return load_volume(out);
        } catch (const Error& e) {
            failure(std::string("cannot read predictor output: ") + e.what());
        }
    };
}

}  // namespace emseg

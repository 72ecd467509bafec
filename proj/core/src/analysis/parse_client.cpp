#include "revsim/analysis/parse_client.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

namespace revsim::analysis {

namespace {

[[noreturn]] void fail(ParseAdapterError::Kind kind, const std::string& msg) { throw ParseAdapterError(kind, msg); }

}  // namespace

ParseClient::ParseClient(std::vector<std::string> argv, std::chrono::milliseconds timeout) : timeout_(timeout) {
  if (argv.empty()) throw PreconditionError("parse adapter command is empty");
  int in_pipe[2], out_pipe[2];
  if (pipe(in_pipe) != 0) fail(ParseAdapterError::Kind::spawn_failed, std::string("pipe: ") + std::strerror(errno));
  if (pipe(out_pipe) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    fail(ParseAdapterError::Kind::spawn_failed, std::string("pipe: ") + std::strerror(errno));
  }
  // Reports exec failure back to the parent through a close-on-exec pipe.
  int err_pipe[2];
  if (pipe2(err_pipe, O_CLOEXEC) != 0) fail(ParseAdapterError::Kind::spawn_failed, "pipe2 failed");

  std::vector<char*> args;
  for (auto& a : argv) args.push_back(a.data());
  args.push_back(nullptr);

  pid_t pid = fork();
  if (pid < 0) fail(ParseAdapterError::Kind::spawn_failed, std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    close(err_pipe[0]);
    execvp(args[0], args.data());
    int e = errno;
    (void)!write(err_pipe[1], &e, sizeof e);
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  close(err_pipe[1]);
  int child_errno = 0;
  ssize_t got = read(err_pipe[0], &child_errno, sizeof child_errno);
  close(err_pipe[0]);
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  if (got == static_cast<ssize_t>(sizeof child_errno)) {
    close(to_child_);
    close(from_child_);
    waitpid(pid_, nullptr, 0);
    pid_ = to_child_ = from_child_ = -1;
    fail(ParseAdapterError::Kind::spawn_failed, "cannot start " + argv[0] + ": " + std::strerror(child_errno));
  }
  // A dead adapter must surface as an error, not kill the process.
  std::signal(SIGPIPE, SIG_IGN);
}

ParseClient::~ParseClient() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  if (pid_ <= 0) return;
  // Closing stdin ends a well-behaved adapter; give it a moment, then kill.
  for (int i = 0; i < 50; ++i) {
    if (waitpid(pid_, nullptr, WNOHANG) == pid_) return;
    usleep(10000);
  }
  kill(pid_, SIGKILL);
  waitpid(pid_, nullptr, 0);
}

void ParseClient::send_line(const std::string& line) {
  std::string data = line + "\n";
  std::size_t off = 0;
  while (off < data.size()) {
    ssize_t n = write(to_child_, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail(ParseAdapterError::Kind::exited, std::string("adapter closed its input: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

std::string ParseClient::read_line() {
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  for (;;) {
    if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) fail(ParseAdapterError::Kind::timeout, "adapter did not answer in time");
    pollfd pfd{from_child_, POLLIN, 0};
    int rc = poll(&pfd, 1, static_cast<int>(left.count()));
    if (rc < 0 && errno == EINTR) continue;
    if (rc == 0) fail(ParseAdapterError::Kind::timeout, "adapter did not answer in time");
    char chunk[4096];
    ssize_t n = read(from_child_, chunk, sizeof chunk);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) fail(ParseAdapterError::Kind::exited, "adapter exited");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

std::string ParseClient::roundtrip(const std::string& line) {
  send_line(line);
  return read_line();
}

std::string ParseClient::exchange_raw(const std::string& line) {
  std::lock_guard lock(mu_);
  return roundtrip(line);
}

std::string ParseClient::ping() {
  std::lock_guard lock(mu_);
  const long id = next_id_++;
  auto j = nlohmann::json::parse(roundtrip(nlohmann::json{{"op", "ping"}, {"id", id}}.dump()), nullptr, false);
  if (j.is_discarded() || !j.is_object()) fail(ParseAdapterError::Kind::protocol, "ping response is not JSON");
  if (!j.contains("id") || j["id"] != id) fail(ParseAdapterError::Kind::protocol, "ping response id mismatch");
  if (j.value("ok", false) != true) fail(ParseAdapterError::Kind::protocol, "adapter did not acknowledge ping");
  auto v = j.contains("version") ? j["version"] : nlohmann::json();
  return v.is_string() ? v.get<std::string>() : v.dump();
}

std::vector<ParsedSentence> ParseClient::parse(const std::vector<std::vector<std::string>>& sentences) {
  for (const auto& s : sentences)
    if (s.empty()) throw PreconditionError("cannot parse an empty sentence");
  if (sentences.empty()) return {};
  std::lock_guard lock(mu_);
  const long id = next_id_++;
  auto j = nlohmann::json::parse(
      roundtrip(nlohmann::json{{"op", "parse"}, {"id", id}, {"sentences", sentences}}.dump()), nullptr, false);
  if (j.is_discarded() || !j.is_object()) fail(ParseAdapterError::Kind::protocol, "parse response is not JSON");
  if (!j.contains("id") || j["id"] != id) fail(ParseAdapterError::Kind::protocol, "parse response id mismatch");
  if (j.contains("error")) fail(ParseAdapterError::Kind::adapter_error, "adapter error: " + j["error"].dump());
  if (!j.contains("parses") || !j["parses"].is_array() || j["parses"].size() != sentences.size())
    fail(ParseAdapterError::Kind::protocol, "parse response does not cover every sentence");
  std::vector<ParsedSentence> out;
  out.reserve(sentences.size());
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const auto& p = j["parses"][i];
    ParsedSentence s;
    s.tokens = sentences[i];
    try {
      p.at("heads").get_to(s.heads);
      p.at("labels").get_to(s.labels);
      validate(s);
    } catch (const nlohmann::json::exception& e) {
      fail(ParseAdapterError::Kind::protocol, std::string("bad parse record: ") + e.what());
    } catch (const AnalysisError& e) {
      fail(ParseAdapterError::Kind::protocol, e.what());
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace revsim::analysis

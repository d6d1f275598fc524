#pragma once

// Long-running reward service speaking newline-delimited JSON: an RL trainer
// writes one request per line and reads one response per request, matched by
// request_id. Judging fans out over a bounded pool, so responses may come
// back out of order.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <istream>
#include <memory>
#include <mutex>
#include <ostream>
#include <set>
#include <string>

#include <json.hpp>

#include <netinet/in.h>
#include <sys/socket.h>

#include "judgekit/detail/fdstream.hpp"
#include "judgekit/detail/thread_pool.hpp"
#include "judgekit/judge.hpp"
#include "judgekit/metrics.hpp"

namespace judgekit {

inline constexpr const char* kProtocolVersion = "judgekit/1";

class RewardServer {
 public:
  RewardServer(const ProblemSet* problems, JudgeConfig cfg, int workers = 0,
               int queue_capacity = 0)
      : problems_(problems),
        cfg_(std::move(cfg)),
        workers_(workers > 0 ? workers
                             : static_cast<int>(judgekit::detail::ThreadPool::default_workers())),
        queue_capacity_(queue_capacity > 0 ? queue_capacity : 2 * workers_),
        started_(std::chrono::steady_clock::now()) {}

  // Reads requests until end-of-input or a shutdown record; every in-flight
  // judgment is answered before this returns. Returns true when the client
  // asked for shutdown.
  bool serve(std::istream& in, std::ostream& out) {
    judgekit::detail::ThreadPool pool(static_cast<std::size_t>(workers_),
                                      static_cast<std::size_t>(queue_capacity_));
    pool_ = &pool;
    write_line(out, {{"type", "greeting"},
                     {"protocol", kProtocolVersion},
                     {"pool_size", workers_}});

    bool shutdown = false;
    std::string line;
    while (!shutdown && std::getline(in, line)) {
      if (normalizes_empty(line)) continue;
      nlohmann::json req = nlohmann::json::parse(line, nullptr, false);
      if (req.is_discarded() || !req.is_object()) {
        write_error(out, nullptr, "parse_error", "request line is not a JSON object");
        continue;
      }
      nlohmann::json id = req.contains("request_id") ? req["request_id"] : nullptr;
      if (req.value("shutdown", false)) {
        shutdown = true;
        shutdown_id_ = id;
        break;
      }
      if (req.value("healthcheck", false)) {
        nlohmann::json h = healthcheck();
        h["request_id"] = id;
        write_line(out, h);
        continue;
      }
      handle_judge_request(out, id, req);
    }
    drain();
    pool_ = nullptr;
    if (shutdown) {
      // Ack after the drain so the trainer can treat it as a barrier.
      write_line(out, {{"type", "shutdown"}, {"request_id", shutdown_id_}});
    }
    return shutdown;
  }

  nlohmann::json healthcheck() const {
    auto uptime = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - started_)
                      .count();
    return {{"type", "health"},
            {"uptime_ms", uptime},
            {"pool_size", workers_},
            {"queue_depth", pool_ ? static_cast<int>(pool_->queue_depth()) : 0},
            {"judged_count", judged_.load()},
            {"error_count", errors_.load()}};
  }

 private:
  void handle_judge_request(std::ostream& out, const nlohmann::json& id,
                            const nlohmann::json& req) {
    if (!id.is_string() || id.get<std::string>().empty()) {
      write_error(out, id, "invalid_request", "request_id must be a non-empty string");
      return;
    }
    std::string rid = id.get<std::string>();
    {
      std::unique_lock lock(state_mu_);
      if (!in_flight_.insert(rid).second) {
        lock.unlock();
        write_error(out, id, "invalid_request", "request_id already in flight");
        return;
      }
      ++pending_;
    }

    auto fail = [&](const std::string& type, const std::string& msg) {
      write_error(out, id, type, msg);
      finish(rid);
    };

    bool has_tests = req.contains("tests");
    bool has_ref = req.contains("problem_ref");
    if (has_tests == has_ref) {
      fail("invalid_request", "exactly one of tests / problem_ref is required");
      return;
    }
    if (!req.contains("code") || !req["code"].is_string()) {
      fail("invalid_request", "code must be a string");
      return;
    }

    auto problem = std::make_shared<Problem>();
    if (has_ref) {
      if (!problems_ || !req["problem_ref"].is_string()) {
        fail("unknown_problem", "no problem set is loaded");
        return;
      }
      const Problem* p = problems_->find(req["problem_ref"].get<std::string>());
      if (!p) {
        fail("unknown_problem",
             "problem_ref '" + req["problem_ref"].get<std::string>() + "' not found");
        return;
      }
      *problem = *p;
    } else {
      problem->id = "inline:" + rid;
      problem->statement = "(inline tests)";
      if (!req["tests"].is_array() || req["tests"].empty()) {
        fail("invalid_request", "tests must be a non-empty array");
        return;
      }
      for (const auto& t : req["tests"]) {
        if (!t.is_object() || !t.contains("input") || !t.contains("expected") ||
            !t["input"].is_string() || !t["expected"].is_string()) {
          fail("invalid_request", "each test needs string input and expected");
          return;
        }
        problem->tests.push_back({t["input"], t["expected"]});
      }
    }

    auto cfg = std::make_shared<JudgeConfig>(cfg_);
    if (req.contains("config_overrides")) {
      try {
        apply_config_json(*cfg, req["config_overrides"]);
      } catch (const std::exception& e) {
        fail("invalid_config", e.what());
        return;
      }
    }

    auto candidate = std::make_shared<CandidateProgram>();
    candidate->problem_id = problem->id;
    candidate->raw = req["code"].get<std::string>();
    candidate->source = candidate->raw;  // wire requests carry bare code

    pool_->submit([this, &out, rid, problem, candidate, cfg] {
      try {
        JudgeResult res = judge(*problem, *candidate, *cfg);
        nlohmann::json resp = to_json(res);
        resp["request_id"] = rid;
        write_line(out, resp);
        ++judged_;
      } catch (const std::exception& e) {
        write_error(out, rid, "judge_error", e.what());
      }
      finish(rid);
    });
  }

  void finish(const std::string& rid) {
    std::unique_lock lock(state_mu_);
    in_flight_.erase(rid);
    --pending_;
    if (pending_ == 0) drained_.notify_all();
  }

  void drain() {
    std::unique_lock lock(state_mu_);
    drained_.wait(lock, [this] { return pending_ == 0; });
  }

  void write_line(std::ostream& out, const nlohmann::json& msg) {
    std::unique_lock lock(write_mu_);
    out << msg.dump() << "\n";
    out.flush();
  }

  void write_error(std::ostream& out, const nlohmann::json& id, const std::string& type,
                   const std::string& message) {
    ++errors_;
    write_line(out, {{"request_id", id},
                     {"error", {{"type", type}, {"message", message}}}});
  }

  const ProblemSet* problems_;
  JudgeConfig cfg_;
  int workers_;
  int queue_capacity_;
  std::chrono::steady_clock::time_point started_;
  judgekit::detail::ThreadPool* pool_ = nullptr;

  std::mutex write_mu_;
  std::mutex state_mu_;
  std::condition_variable drained_;
  std::set<std::string> in_flight_;
  int pending_ = 0;
  nlohmann::json shutdown_id_ = nullptr;
  std::atomic<long> judged_{0};
  std::atomic<long> errors_{0};
};

// Accepts one client at a time and speaks the same protocol per connection.
// Returns once a client sends a shutdown record.
inline void serve_tcp(int port, const ProblemSet* problems, const JudgeConfig& cfg,
                      int workers = 0, int queue_capacity = 0) {
  int listener = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listener < 0) throw infra_error(std::string("socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<uint16_t>(port));
  if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    int e = errno;
    ::close(listener);
    throw config_error("cannot bind port " + std::to_string(port) + ": " +
                       std::strerror(e));
  }
  if (::listen(listener, 8) != 0) {
    int e = errno;
    ::close(listener);
    throw infra_error(std::string("listen: ") + std::strerror(e));
  }

  bool shutdown = false;
  while (!shutdown) {
    int conn = ::accept(listener, nullptr, nullptr);
    if (conn < 0) {
      if (errno == EINTR) continue;
      ::close(listener);
      throw infra_error(std::string("accept: ") + std::strerror(errno));
    }
    judgekit::detail::FdStreambuf rbuf(conn), wbuf(conn);
    std::istream in(&rbuf);
    std::ostream out(&wbuf);
    RewardServer server(problems, cfg, workers, queue_capacity);
    shutdown = server.serve(in, out);
    ::close(conn);
  }
  ::close(listener);
}

}  // namespace judgekit

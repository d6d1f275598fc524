#pragma once

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace judgekit::detail {

// Fixed-size worker pool with an optionally bounded queue. submit() blocks
// while the queue is full, which is the server's backpressure mechanism.
class ThreadPool {
 public:
  explicit ThreadPool(std::size_t workers = 0, std::size_t queue_capacity = 0)
      : capacity_(queue_capacity) {
    if (workers == 0) workers = default_workers();
    workers_.reserve(workers);
    for (std::size_t i = 0; i < workers; ++i) {
      workers_.emplace_back([this] { worker_loop(); });
    }
  }

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  ~ThreadPool() {
    {
      std::unique_lock lock(mu_);
      stopping_ = true;
    }
    cv_.notify_all();
    for (std::thread& t : workers_) t.join();
  }

  void submit(std::function<void()> task) {
    {
      std::unique_lock lock(mu_);
      if (capacity_ > 0) {
        space_cv_.wait(lock, [this] { return queue_.size() < capacity_ || stopping_; });
      }
      if (stopping_) return;
      queue_.push_back(std::move(task));
    }
    cv_.notify_one();
  }

  std::size_t worker_count() const { return workers_.size(); }

  std::size_t queue_depth() const {
    std::unique_lock lock(mu_);
    return queue_.size();
  }

  static std::size_t default_workers() {
    unsigned n = std::thread::hardware_concurrency();
    return n ? n : 2;
  }

 private:
  void worker_loop() {
    for (;;) {
      std::function<void()> task;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
        if (queue_.empty()) return;  // stopping
        task = std::move(queue_.front());
        queue_.pop_front();
      }
      space_cv_.notify_one();
      task();
    }
  }

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable space_cv_;
  std::deque<std::function<void()>> queue_;
  std::vector<std::thread> workers_;
  std::size_t capacity_;
  bool stopping_ = false;
};

}  // namespace judgekit::detail

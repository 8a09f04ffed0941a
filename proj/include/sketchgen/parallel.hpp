#pragma once

#include <condition_variable>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace sketchgen {

// Worker pool shared by all tensor primitives. Thread count defaults to the
// hardware concurrency and can be capped with SKETCHGEN_THREADS.
class ThreadPool {
 public:
  static ThreadPool& instance() {
    static ThreadPool pool;
    return pool;
  }

  int size() const { return int(workers_.size()) + 1; }

  // Runs fn(chunk_begin, chunk_end) over [0, n) split into contiguous chunks,
  // one per thread. Blocks until all chunks finish. Chunk boundaries depend
  // only on n and the thread count, so any per-chunk sequential reduction
  // order is reproducible for a fixed SKETCHGEN_THREADS.
  void run_chunks(long n, const std::function<void(long, long)>& fn) {
    const int t = size();
    if (n <= 0) return;
    if (t == 1 || n < 2 * t) {
      fn(0, n);
      return;
    }
    const long chunk = (n + t - 1) / t;
    {
      std::unique_lock<std::mutex> lock(m_);
      job_ = &fn;
      job_n_ = n;
      job_chunk_ = chunk;
      next_chunk_ = 1;  // chunk 0 runs on the calling thread
      pending_ = int((n + chunk - 1) / chunk) - 1;
      ++generation_;
    }
    cv_.notify_all();
    fn(0, std::min(chunk, n));
    std::unique_lock<std::mutex> lock(m_);
    done_cv_.wait(lock, [&] { return pending_ == 0; });
    job_ = nullptr;
  }

 private:
  ThreadPool() {
    int t = int(std::thread::hardware_concurrency());
    if (t < 1) t = 1;
    if (const char* env = std::getenv("SKETCHGEN_THREADS")) {
      const int cap = std::atoi(env);
      if (cap >= 1 && cap < t) t = cap;
    }
    for (int i = 1; i < t; ++i)
      workers_.emplace_back([this] { worker_loop(); });
  }

  ~ThreadPool() {
    {
      std::unique_lock<std::mutex> lock(m_);
      stop_ = true;
      ++generation_;
    }
    cv_.notify_all();
    for (auto& w : workers_) w.join();
  }

  void worker_loop() {
    std::uint64_t seen = 0;
    for (;;) {
      const std::function<void(long, long)>* job = nullptr;
      long n = 0, chunk = 0;
      {
        std::unique_lock<std::mutex> lock(m_);
        cv_.wait(lock, [&] { return stop_ || generation_ != seen; });
        seen = generation_;
        if (stop_) return;
        job = job_;
        n = job_n_;
        chunk = job_chunk_;
      }
      if (!job) continue;
      for (;;) {
        long c;
        {
          std::unique_lock<std::mutex> lock(m_);
          if (generation_ != seen || !job_) break;
          c = next_chunk_++;
        }
        const long begin = c * chunk;
        if (begin >= n) break;
        (*job)(begin, std::min(begin + chunk, n));
        std::unique_lock<std::mutex> lock(m_);
        if (--pending_ == 0) done_cv_.notify_all();
      }
    }
  }

  std::vector<std::thread> workers_;
  std::mutex m_;
  std::condition_variable cv_, done_cv_;
  const std::function<void(long, long)>* job_ = nullptr;
  long job_n_ = 0, job_chunk_ = 0, next_chunk_ = 0;
  int pending_ = 0;
  std::uint64_t generation_ = 0;
  bool stop_ = false;
};

inline void parallel_for(long n, const std::function<void(long, long)>& fn) {
  ThreadPool::instance().run_chunks(n, fn);
}

}  // namespace sketchgen

#pragma once

#include <ctime>

namespace caai::surrogates {

/// Processor time consumed by the calling thread.
class ThreadCpuTimer {
 public:
  ThreadCpuTimer() : start_(now()) {}

  double elapsed_seconds() const { return now() - start_; }

 private:
  static double now() {
    timespec ts{};
    clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
    return static_cast<double>(ts.tv_sec) + 1e-9 * static_cast<double>(ts.tv_nsec);
  }

  double start_;
};

}  // namespace caai::surrogates

#include "freeseed/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace freeseed::fft {

namespace {

// FFTW planning is not thread-safe; execution of an existing plan is.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(int rank, std::int64_t rows, std::int64_t cols, std::int64_t howmany, int sign) {
    const Key key{rank, rows, cols, howmany, sign};
    std::lock_guard lock(mutex_);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    const std::int64_t total = (rank == 2 ? rows * cols : cols) * howmany;
    auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * static_cast<std::size_t>(total)));
    fftw_plan plan = nullptr;
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    if (rank == 2) {
      plan = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), buf, buf, sign, flags);
    } else {
      int n = static_cast<int>(cols);
      plan = fftw_plan_many_dft(1, &n, static_cast<int>(howmany), buf, nullptr, 1, n, buf, nullptr, 1, n, sign, flags);
    }
    fftw_free(buf);
    if (!plan) throw std::runtime_error("FFTW planning failed");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  using Key = std::tuple<int, std::int64_t, std::int64_t, std::int64_t, int>;
  std::mutex mutex_;
  std::map<Key, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

void run(fftw_plan plan, std::span<cplx> data) {
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, p, p);
}

void check(std::span<cplx> data, std::int64_t a, std::int64_t b) {
  if (a < 1 || b < 1 || static_cast<std::int64_t>(data.size()) != a * b) {
    throw std::invalid_argument("fft: buffer size does not match dimensions");
  }
}

}  // namespace

void forward_2d(std::span<cplx> data, std::int64_t rows, std::int64_t cols) {
  check(data, rows, cols);
  run(cache().get(2, rows, cols, 1, FFTW_FORWARD), data);
}

void inverse_2d(std::span<cplx> data, std::int64_t rows, std::int64_t cols) {
  check(data, rows, cols);
  run(cache().get(2, rows, cols, 1, FFTW_BACKWARD), data);
}

void forward_rows(std::span<cplx> data, std::int64_t count, std::int64_t n) {
  check(data, count, n);
  run(cache().get(1, 1, n, count, FFTW_FORWARD), data);
}

void inverse_rows(std::span<cplx> data, std::int64_t count, std::int64_t n) {
  check(data, count, n);
  run(cache().get(1, 1, n, count, FFTW_BACKWARD), data);
}

void shift_to_center(std::span<const cplx> in, std::span<cplx> out, std::int64_t rows, std::int64_t cols) {
  for (std::int64_t u = 0; u < rows; ++u) {
    const std::int64_t ru = centered_to_raw(u, rows);
    for (std::int64_t v = 0; v < cols; ++v) out[u * cols + v] = in[ru * cols + centered_to_raw(v, cols)];
  }
}

void shift_from_center(std::span<const cplx> in, std::span<cplx> out, std::int64_t rows, std::int64_t cols) {
  for (std::int64_t u = 0; u < rows; ++u) {
    const std::int64_t ru = centered_to_raw(u, rows);
    for (std::int64_t v = 0; v < cols; ++v) out[ru * cols + centered_to_raw(v, cols)] = in[u * cols + v];
  }
}

}  // namespace freeseed::fft

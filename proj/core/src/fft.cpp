#include "mriq/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <map>
#include <mutex>
#include <tuple>

namespace mriq::fft {
namespace {

// The FFTW planner is not thread-safe; execution of an existing plan is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct Buffer {
  explicit Buffer(std::size_t n)
      : ptr(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n))) {}
  ~Buffer() { fftw_free(ptr); }
  Buffer(const Buffer&) = delete;
  Buffer& operator=(const Buffer&) = delete;
  fftw_complex* ptr;
};

fftw_plan get_plan(int rows, int cols, int sign) {
  static std::map<std::tuple<int, int, int>, fftw_plan> cache;
  std::lock_guard lock(planner_mutex());
  auto key = std::make_tuple(rows, cols, sign);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  Buffer in(static_cast<std::size_t>(rows) * cols);
  Buffer out(static_cast<std::size_t>(rows) * cols);
  fftw_plan plan = fftw_plan_dft_2d(rows, cols, in.ptr, out.ptr, sign, FFTW_ESTIMATE);
  cache.emplace(key, plan);
  return plan;
}

// out[(r + dr) % R][(c + dc) % C] = in[r][c]
void circshift(const ComplexImage& in, ComplexImage& out, int dr, int dc) {
  const int R = in.rows(), C = in.cols();
  for (int r = 0; r < R; ++r) {
    const int rr = (r + dr) % R;
    for (int c = 0; c < C; ++c) out(rr, (c + dc) % C) = in(r, c);
  }
}

void transform(ComplexImage& img, int sign) {
  const int R = img.rows(), C = img.cols();
  if (R == 0 || C == 0) return;
  const std::size_t n = img.size();
  fftw_plan plan = get_plan(R, C, sign);

  ComplexImage shifted(R, C);
  circshift(img, shifted, R - R / 2, C - C / 2);  // ifftshift

  Buffer in(n), out(n);
  std::memcpy(in.ptr, shifted.data(), sizeof(fftw_complex) * n);
  fftw_execute_dft(plan, in.ptr, out.ptr);
  std::memcpy(static_cast<void*>(shifted.data()), out.ptr, sizeof(fftw_complex) * n);

  circshift(shifted, img, R / 2, C / 2);  // fftshift
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (auto& v : img.values()) v *= scale;
}

}  // namespace

void fft2c(ComplexImage& img) { transform(img, FFTW_FORWARD); }
void ifft2c(ComplexImage& img) { transform(img, FFTW_BACKWARD); }

ComplexImage fft2c_copy(const ComplexImage& img) {
  ComplexImage out = img;
  fft2c(out);
  return out;
}

ComplexImage ifft2c_copy(const ComplexImage& img) {
  ComplexImage out = img;
  ifft2c(out);
  return out;
}

}  // namespace mriq::fft

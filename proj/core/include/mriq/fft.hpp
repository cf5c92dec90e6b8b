#pragma once

#include "mriq/grid.hpp"

namespace mriq::fft {

// Centered, unitary 2D transforms (DC at (rows/2, cols/2), 1/sqrt(N) on
// both directions so Parseval holds without rescaling).
void fft2c(ComplexImage& img);
void ifft2c(ComplexImage& img);

ComplexImage fft2c_copy(const ComplexImage& img);
ComplexImage ifft2c_copy(const ComplexImage& img);

}  // namespace mriq::fft

// Thin FFTW wrapper: unnormalized in-place n^d transforms, row-major.
#pragma once

#include "modnls/grid.hpp"

namespace modnls::detail {

enum class FftDir { forward, backward };

// forward: sum_x f e^{-2 pi i j.m/n}; backward: + sign. No scaling.
void dft(int d, int n, Complex* data, FftDir dir);

}  // namespace modnls::detail

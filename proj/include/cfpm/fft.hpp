#pragma once

#include "cfpm/image.hpp"

namespace cfpm::fft {

/// Unitary 2D DFT with the spectrum DC moved to (rows/2, cols/2).
ComplexImage forward_centered(const ComplexImage& field);

/// Inverse of forward_centered.
ComplexImage inverse_centered(const ComplexImage& spectrum);

/// Swaps quadrants so index 0 moves to the center (even sizes are self-inverse).
ComplexImage fftshift(const ComplexImage& in);
ComplexImage ifftshift(const ComplexImage& in);

}  // namespace cfpm::fft

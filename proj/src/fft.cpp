#include "cfpm/fft.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <vector>

namespace cfpm::fft {

namespace {

ComplexImage circshift(const ComplexImage& in, Eigen::Index dr, Eigen::Index dc) {
  const Eigen::Index rows = in.rows();
  const Eigen::Index cols = in.cols();
  ComplexImage out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Eigen::Index rr = (r + dr) % rows;
    for (Eigen::Index c = 0; c < cols; ++c) out(rr, (c + dc) % cols) = in(r, c);
  }
  return out;
}

// Eigen::FFT caches twiddles per size and is not safe to share between threads.
Eigen::FFT<double>& engine() {
  thread_local Eigen::FFT<double> fft;
  return fft;
}

void transform(ComplexImage& data, bool inverse) {
  auto& fft = engine();
  std::vector<std::complex<double>> in;
  std::vector<std::complex<double>> out;

  in.resize(static_cast<std::size_t>(data.cols()));
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.cols(); ++c) in[static_cast<std::size_t>(c)] = data(r, c);
    inverse ? fft.inv(out, in) : fft.fwd(out, in);
    for (Eigen::Index c = 0; c < data.cols(); ++c) data(r, c) = out[static_cast<std::size_t>(c)];
  }

  in.resize(static_cast<std::size_t>(data.rows()));
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    for (Eigen::Index r = 0; r < data.rows(); ++r) in[static_cast<std::size_t>(r)] = data(r, c);
    inverse ? fft.inv(out, in) : fft.fwd(out, in);
    for (Eigen::Index r = 0; r < data.rows(); ++r) data(r, c) = out[static_cast<std::size_t>(r)];
  }
}

}  // namespace

ComplexImage fftshift(const ComplexImage& in) { return circshift(in, in.rows() / 2, in.cols() / 2); }

ComplexImage ifftshift(const ComplexImage& in) {
  return circshift(in, (in.rows() + 1) / 2, (in.cols() + 1) / 2);
}

ComplexImage forward_centered(const ComplexImage& field) {
  ComplexImage data = field;
  transform(data, false);
  data /= std::sqrt(static_cast<double>(data.size()));
  return fftshift(data);
}

ComplexImage inverse_centered(const ComplexImage& spectrum) {
  ComplexImage data = ifftshift(spectrum);
  // Eigen's inverse already divides by the length of each axis.
  transform(data, true);
  data *= std::sqrt(static_cast<double>(data.size()));
  return data;
}

}  // namespace cfpm::fft

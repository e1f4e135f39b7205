#include "cfpm/error.hpp"
#include "cfpm/fft.hpp"
#include "cfpm/fpm.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace cfpm;
using cfpm::test::near;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

const fpm::Illumination& find_led(const fpm::IlluminationPlan& plan, int row, int col) {
  for (const auto& e : plan.entries)
    if (e.row == row && e.col == col) return e;
  throw std::runtime_error("led not in plan");
}

// Small grid used by most tests: 64 px high resolution, 16 px frames.
fpm::OpticalGrid small_grid() { return {64, 4, 0.40625}; }

ComplexField random_object(std::uint64_t seed, Eigen::Index n, double pixel_um) {
  test::Gen gen(seed);
  ComplexImage field(n, n);
  for (Eigen::Index i = 0; i < field.size(); ++i)
    field.data()[i] = std::polar(gen.uniform(0.2, 1.0), gen.uniform(0.0, 1.5));
  return {field, Plane::Sample, pixel_um};
}

ComplexField spectrum_of(const ComplexField& object) {
  const double dk = kTwoPi / (static_cast<double>(object.rows()) * object.pixel_size);
  return {fft::forward_centered(object.data), Plane::Fourier, dk};
}

ComplexField uniform_spectrum(Eigen::Index n, double amplitude, double dk) {
  ComplexImage field = ComplexImage::Constant(n, n, amplitude);
  return {fft::forward_centered(field), Plane::Fourier, dk};
}

}  // namespace

TEST_CASE("led wavevectors match right-triangle geometry") {
  const double lambda = 0.515;
  const auto plan = fpm::led_wavevectors({}, lambda);
  REQUIRE(plan.size() == 225);
  CHECK(plan[0].row == 7);
  CHECK(plan[0].col == 7);
  CHECK(plan[0].kx == 0.0);
  CHECK(plan[0].ky == 0.0);

  const double k0 = kTwoPi / lambda;
  const auto& right = find_led(plan, 7, 8);
  CHECK(near(right.kx / k0, 4.0 / std::sqrt(16.0 + 4900.0), 1e-12));
  CHECK(near(right.kx / k0, 0.05705, 1e-5));
  CHECK(right.ky == 0.0);

  const auto& corner = find_led(plan, 14, 14);
  CHECK(near(corner.kx / k0, 0.34815, 1e-5));
  CHECK(near(corner.ky / k0, 0.34815, 1e-5));

  for (std::size_t i = 0; i < plan.size(); ++i) {
    CHECK(plan[i].magnitude() < k0);
    if (i > 0) CHECK(plan[i - 1].magnitude() <= plan[i].magnitude());
  }
}

TEST_CASE("equal-magnitude leds are ordered by row then column") {
  const auto plan = fpm::led_wavevectors({}, 0.5);
  for (std::size_t i = 1; i < plan.size(); ++i)
    if (plan[i - 1].magnitude() == plan[i].magnitude())
      CHECK(std::pair(plan[i - 1].row, plan[i - 1].col) < std::pair(plan[i].row, plan[i].col));
}

TEST_CASE("invalid geometry is rejected") {
  fpm::LedGeometry even;
  even.rows = 4;
  CHECK_THROWS_AS(even.validate(), NumericalError);
  fpm::LedGeometry flat;
  flat.height_mm = 0.0;
  CHECK_THROWS_AS(flat.validate(), NumericalError);
}

TEST_CASE("pupil cutoff") {
  const fpm::OpticalGrid grid;
  const auto p = fpm::make_pupil(0.1, 0.515, grid.lr_size(), grid.dk());
  CHECK(near(p.cutoff, 1.2200, 1e-4));
  const auto half = fpm::make_pupil(0.05, 0.515, grid.lr_size(), grid.dk());
  CHECK(near(p.cutoff, 2.0 * half.cutoff, 1e-15));
  CHECK(p.mask.sum() > 3.5 * half.mask.sum());
  for (Eigen::Index i = 0; i < p.mask.size(); ++i) CHECK((p.mask.data()[i] == 0.0 || p.mask.data()[i] == 1.0));
}

TEST_CASE("pupil area fraction follows the disk area") {
  const Eigen::Index n = 256;
  const double dk = 0.01;
  const double k_max = dk * static_cast<double>(n) / 2.0;  // half-width of the grid
  for (double fraction : {0.2, 0.5, 0.9}) {
    const double na = fraction * k_max * 0.5 / kTwoPi;  // wavelength 0.5 µm
    const auto p = fpm::make_pupil(na, 0.5, n, dk);
    const double measured = p.mask.sum() / static_cast<double>(n * n);
    const double expect = std::numbers::pi * std::pow(p.cutoff / k_max, 2) / 4.0;
    CHECK(near(measured, expect, 0.02 * expect));
  }
  CHECK_THROWS_AS(fpm::make_pupil(0.9, 0.4, 64, 0.01), NumericalError);
}

TEST_CASE("uniform object through an all-pass pupil") {
  const Eigen::Index n = 32;
  const double dk = 0.3;
  const auto spec = uniform_spectrum(n, 0.7, dk);
  const auto img = fpm::simulate_capture(spec, fpm::all_pass_pupil(n, dk), {});
  CHECK((img - 0.49).abs().maxCoeff() <= 1e-12);
}

TEST_CASE("all-pass on-axis capture is the squared field") {
  const auto object = random_object(3, 32, 0.4);
  const auto spec = spectrum_of(object);
  const auto img = fpm::simulate_capture(spec, fpm::all_pass_pupil(32, spec.pixel_size), {});
  CHECK((img - object.data.abs2()).abs().maxCoeff() <= 1e-12);
}

TEST_CASE("dark field for illumination beyond the pupil") {
  const auto grid = small_grid();
  const auto pupil = fpm::make_pupil(0.1, 0.515, grid.lr_size(), grid.dk());
  const auto spec = uniform_spectrum(grid.hr_size, 0.8, grid.dk());
  fpm::Illumination led;
  led.kx = 2.0 * pupil.cutoff;
  const auto img = fpm::simulate_capture(spec, pupil, led);
  CHECK(img.mean() < 1e-6 * 0.64);
}

TEST_CASE("capture energy equals sub-spectrum energy") {
  const auto grid = small_grid();
  const auto pupil = fpm::make_pupil(0.1, 0.515, grid.lr_size(), grid.dk());
  const auto spec = spectrum_of(random_object(4, grid.hr_size, grid.hr_pixel_um));
  const auto plan = fpm::led_wavevectors({}, 0.515);
  for (std::size_t i : {0, 3, 40, 224}) {
    const auto sub = fpm::pupil_subspectrum(spec, pupil, plan[i]);
    const auto img = fpm::simulate_capture(spec, pupil, plan[i]);
    CHECK(near(sub.abs2().sum(), img.sum(), 1e-9 * img.sum()));
  }
}

TEST_CASE("unitary transform preserves energy") {
  test::Gen gen(5);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::Index n = 2 * gen.integer(4, 40);
    const auto object = random_object(static_cast<std::uint64_t>(trial + 10), n, 0.5);
    const ComplexImage spec = fft::forward_centered(object.data);
    const double e = object.data.abs2().sum();
    CHECK(near(spec.abs2().sum(), e, 1e-9 * e));
    const ComplexImage back = fft::inverse_centered(spec);
    CHECK((back - object.data).abs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("stack shape, determinism and consistency with single captures") {
  const auto grid = small_grid();
  const fpm::FpmSystem sys{{}, 0.1, 0.515, grid};
  const auto spec = spectrum_of(random_object(6, grid.hr_size, grid.hr_pixel_um));
  const auto a = fpm::simulate_stack(spec, sys);
  const auto b = fpm::simulate_stack(spec, sys);
  REQUIRE(a.size() == 225);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK((a.frames[i] == b.frames[i]).all());

  const auto frame0 = fpm::simulate_capture(spec, sys.pupil(), {});
  CHECK((a.intensity(0) - frame0).abs().maxCoeff() <= 1e-12 * frame0.maxCoeff());
  double peak = 0.0;
  for (const auto& f : a.frames) {
    CHECK(f.minCoeff() >= 0.0);
    peak = std::max(peak, f.maxCoeff());
  }
  CHECK(near(peak, 1.0, 1e-15));
}

TEST_CASE("noisy stacks are seeded and non-negative") {
  const auto grid = small_grid();
  const fpm::FpmSystem sys{{}, 0.1, 0.515, grid};
  const auto spec = spectrum_of(random_object(7, grid.hr_size, grid.hr_pixel_um));
  const auto a = fpm::simulate_stack(spec, sys, {0.05, 9});
  const auto b = fpm::simulate_stack(spec, sys, {0.05, 9});
  const auto c = fpm::simulate_stack(spec, sys, {0.05, 10});
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK((a.frames[i] == b.frames[i]).all());
    CHECK(a.frames[i].minCoeff() >= 0.0);
    differs = differs || !(a.frames[i] == c.frames[i]).all();
  }
  CHECK(differs);
}

TEST_CASE("shifts beyond the spectrum grid are rejected") {
  const fpm::OpticalGrid grid{64, 4, 0.40625};
  const auto pupil = fpm::make_pupil(0.1, 0.515, grid.lr_size(), grid.dk());
  const auto spec = spectrum_of(random_object(8, 64, grid.hr_pixel_um));
  fpm::Illumination far;
  far.kx = 30.0 * grid.dk();
  CHECK_THROWS_AS(fpm::simulate_capture(spec, pupil, far), NumericalError);
}

TEST_CASE("disk overlap fraction") {
  CHECK(fpm::disk_overlap_fraction(0.0, 1.0) == 1.0);
  CHECK(fpm::disk_overlap_fraction(2.0, 1.0) == 0.0);
  CHECK(fpm::disk_overlap_fraction(3.0, 1.0) == 0.0);
  // Monte Carlo oracle for the lens area.
  test::Gen gen(9);
  for (double d : {0.3, 0.5705, 1.2}) {
    int inside_a = 0, inside_both = 0;
    for (int k = 0; k < 400000; ++k) {
      const double x = gen.uniform(-1, 1), y = gen.uniform(-1, 1);
      if (x * x + y * y > 1.0) continue;
      ++inside_a;
      if ((x - d) * (x - d) + y * y <= 1.0) ++inside_both;
    }
    CHECK(near(fpm::disk_overlap_fraction(d, 1.0), static_cast<double>(inside_both) / inside_a, 5e-3));
  }
}

TEST_CASE("overlap ratio of the reference geometry") {
  const fpm::OpticalGrid grid;
  const fpm::FpmSystem sys{{}, 0.1, 0.515, grid};
  const double overlap = fpm::overlap_ratio(sys.plan(), sys.pupil());
  CHECK(near(overlap, 0.64, 0.02));
  CHECK(near(overlap, fpm::disk_overlap_fraction(0.5705, 1.0), 1e-3));

  fpm::IlluminationPlan single = fpm::led_wavevectors({1, 1, 4.0, 70.0}, 0.515);
  CHECK_THROWS_AS(fpm::overlap_ratio(single, sys.pupil()), NumericalError);

  fpm::IlluminationPlan tangent;
  tangent.entries = {{0, 0, 0.0, 0.0}, {0, 1, 2.0 * sys.pupil().cutoff, 0.0}};
  CHECK(fpm::overlap_ratio(tangent, sys.pupil()) == 0.0);
}

TEST_CASE("zero iterations return the initialization") {
  const auto grid = small_grid();
  const fpm::FpmSystem sys{{}, 0.1, 0.515, grid};
  const auto spec = spectrum_of(random_object(10, grid.hr_size, grid.hr_pixel_um));
  const auto stack = fpm::simulate_stack(spec, sys);
  const auto plan = sys.plan();
  const auto pupil = sys.pupil();
  const auto rec = fpm::reconstruct(stack, plan, pupil, grid, {0, false});
  const ComplexImage init = fft::inverse_centered(fpm::initial_spectrum(stack, plan, pupil, grid));
  CHECK((rec.field.data - init).abs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(fpm::reconstruct(stack, plan, pupil, grid, {-1, false}), NumericalError);

  fpm::CaptureStack shorter = stack;
  shorter.frames.pop_back();
  CHECK_THROWS_AS(fpm::reconstruct(shorter, plan, pupil, grid), NumericalError);
}

TEST_CASE("reconstruction spectrum stays inside the synthetic support") {
  const auto grid = small_grid();
  fpm::LedGeometry geometry;
  geometry.rows = geometry.cols = 5;
  const fpm::FpmSystem sys{geometry, 0.1, 0.515, grid};
  const auto spec = spectrum_of(random_object(11, grid.hr_size, grid.hr_pixel_um));
  const auto stack = fpm::simulate_stack(spec, sys);
  const auto rec = fpm::reconstruct(stack, sys.plan(), sys.pupil(), grid, {3, true});
  const ComplexImage out = fft::forward_centered(rec.field.data);
  const Image support = fpm::synthetic_support(sys.plan(), sys.pupil(), grid);
  double outside = 0.0;
  for (Eigen::Index i = 0; i < out.size(); ++i)
    if (support.data()[i] == 0.0) outside = std::max(outside, std::abs(out.data()[i]));
  CHECK(outside <= 1e-12 * out.abs().maxCoeff());
  REQUIRE(rec.residual.size() == 4);
  for (std::size_t i = 1; i < rec.residual.size(); ++i) CHECK(rec.residual[i] <= rec.residual[i - 1]);
}

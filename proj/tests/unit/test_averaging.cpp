#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "athom/averaging.hpp"

using namespace athom;

namespace {

const Box<2> kUnit{{0.0, 0.0}, {1.0, 1.0}};
const Box<2> kHalf{{0.25, 0.25}, {0.75, 0.75}};

GridField<2> sampled(const std::function<double(const Vec<2>&)>& f, int n, int quad = 3) {
  return GridField<2>::sample(f, {0.0, 0.0}, 1.0 / n, {n, n}, quad);
}

SurfaceIntegrand<2> laminate_h() { return isotropic_surface<2>(PeriodicField<2>::laminate(0, {1.0, 4.0}), 1.0, 4.0); }

}  // namespace

TEST(CubeAverage, ConstantAndLinear) {
  auto c = sampled([](const Vec<2>&) { return 2.5; }, 64);
  auto cr = cube_average(c, 0.25, kHalf);
  for (double x : cr.values()) EXPECT_NEAR(x, 2.5, 1e-13);
  auto lin = sampled([](const Vec<2>& x) { return 3.0 * x[0] - x[1]; }, 64);
  auto lr = cube_average(lin, 0.2, kHalf);
  for (std::size_t k = 0; k < lr.size(); ++k) {
    Vec<2> x = lr.center(k);
    EXPECT_NEAR(lr[k], 3.0 * x[0] - x[1], 1e-12);
  }
}

TEST(CubeAverage, SineMatchesClosedForm) {
  // Exact cell averages and windows aligned with cell faces (r / h odd at
  // cell centres), so the box average is the exact convolution.
  const int n = 250;  // r / h = 125
  const double r = 0.5;
  GridField<1> v = GridField<1>::sample([](const Vec<1>& x) { return std::sin(2.0 * kPi * x[0]); }, {-0.5}, 1.0 / n,
                                        {2 * n}, 3);
  auto vr = cube_average(v, r, Box<1>{{-0.25}, {1.25}});
  double worst = 0.0;
  for (std::size_t k = 0; k < vr.size(); ++k) {
    double x = vr.center(k)[0];
    double expect = std::sin(2.0 * kPi * x) * std::sin(kPi * r) / (kPi * r);
    worst = std::max(worst, std::abs(vr[k] - expect));
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(CubeAverage, SineTwoDimensional) {
  const int n = 192;
  const double r = 65.0 / n;  // odd cell count: windows end on cell faces
  auto v = sampled([](const Vec<2>& x) { return std::sin(2.0 * kPi * x[0]); }, n);
  auto vr = cube_average(v, r, kHalf);
  for (std::size_t k = 0; k < vr.size(); k += 97) {
    double x = vr.center(k)[0];
    double expect = std::sin(2.0 * kPi * x) * std::sin(kPi * r) / (kPi * r);
    EXPECT_NEAR(vr[k], expect, 1e-6);
  }
}

TEST(CubeAverage, LinearityAndRangeContraction) {
  BandLimitedField<2> f1(1, 3), f2(2, 3);
  auto a = f1.sample({0.0, 0.0}, 1.0 / 96, {96, 96});
  auto b = f2.sample({0.0, 0.0}, 1.0 / 96, {96, 96});
  auto comb = a;
  for (std::size_t k = 0; k < comb.size(); ++k) comb.values()[k] = 2.0 * a[k] - 0.5 * b[k];
  const double r = 0.1;
  auto ar = cube_average(a, r, kHalf), br = cube_average(b, r, kHalf), cr = cube_average(comb, r, kHalf);
  const double lo = *std::min_element(a.values().begin(), a.values().end());
  const double hi = *std::max_element(a.values().begin(), a.values().end());
  for (std::size_t k = 0; k < cr.size(); ++k) {
    EXPECT_NEAR(cr[k], 2.0 * ar[k] - 0.5 * br[k], 1e-12);
    EXPECT_GE(ar[k], lo - 1e-12);
    EXPECT_LE(ar[k], hi + 1e-12);
  }
}

TEST(CubeAverage, Errors) {
  auto v = sampled([](const Vec<2>&) { return 1.0; }, 32);
  EXPECT_THROW(cube_average(v, 0.5, Box<2>{{0.1, 0.1}, {0.9, 0.9}}), InputError);
  EXPECT_THROW(cube_average(v, 0.01, kHalf), InputError);
}

TEST(ShiftPoincare, ConstantAndLinear) {
  auto c = sampled([](const Vec<2>&) { return -1.0; }, 64);
  auto rc = check_shift_poincare(c, kUnit, kHalf, 1.0 / 16);
  EXPECT_NEAR(rc.lhs, 0.0, 1e-20);
  EXPECT_TRUE(rc.holds);
  auto lin = sampled([](const Vec<2>& x) { return x[0] + 2.0 * x[1]; }, 64);
  auto rl = check_shift_poincare(lin, kUnit, kHalf, 1.0 / 16);
  EXPECT_NEAR(rl.lhs, 0.0, 1e-20);
  EXPECT_TRUE(rl.holds);
}

TEST(ShiftPoincare, SineRatioBoundedAndDecreasing) {
  auto v = GridField<2>::sample([](const Vec<2>& x) { return std::sin(2.0 * kPi * x[0]); }, {0.0, 0.0}, 1.0 / 256,
                                {256, 256}, 3,
                                [](const Vec<2>& x) { return Vec<2>{2.0 * kPi * std::cos(2.0 * kPi * x[0]), 0.0}; });
  auto a = check_shift_poincare(v, kUnit, kHalf, 1.0 / 16);
  auto b = check_shift_poincare(v, kUnit, kHalf, 1.0 / 32);
  EXPECT_TRUE(a.holds);
  EXPECT_TRUE(b.holds);
  EXPECT_LE(a.ratio, kShiftPoincareConstant2D);
  EXPECT_LT(b.ratio, a.ratio);
  // Continuum value: (pi r)^4 / 36 * (1/8) / (r^2 * 2 pi^2) to leading order.
  const double r = 1.0 / 16;
  double lead = std::pow(kPi * r, 4) / 36.0 * 0.125 / (r * r * 2.0 * kPi * kPi);
  EXPECT_NEAR(a.ratio, lead, 0.05 * lead);
}

TEST(ShiftPoincare, PreconditionQuotesBound) {
  auto v = sampled([](const Vec<2>& x) { return x[0]; }, 64);
  try {
    check_shift_poincare(v, kUnit, kHalf, 0.125);
    FAIL() << "expected PreconditionError";
  } catch (const PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("0.1035"), std::string::npos) << e.what();
  }
}

TEST(ShiftPoincare, CorpusBoundedAndMonotoneInR) {
  double worst = 0.0;
  for (int s = 0; s < 100; ++s) {
    auto v = BandLimitedField<2>(1000 + s, 4).sample({0.0, 0.0}, 1.0 / 128, {128, 128});
    auto a = check_shift_poincare(v, kUnit, kHalf, 1.0 / 16);
    auto b = check_shift_poincare(v, kUnit, kHalf, 1.0 / 32);
    EXPECT_TRUE(a.holds && b.holds) << s;
    EXPECT_LE(b.ratio, a.ratio) << s;
    worst = std::max(worst, a.ratio);
  }
  EXPECT_LE(worst, kShiftPoincareConstant2D);
}

TEST(HomLowerBound, ConstantCoefficientJensen) {
  auto h = isotropic_surface<2>(PeriodicField<2>::constant(2.0), 2.0, 2.0);
  Mat<2> H{{{2.0, 0.0}, {0.0, 2.0}}};
  for (int s = 0; s < 5; ++s) {
    auto v = BandLimitedField<2>(40 + s, 3).sample({0.0, 0.0}, 1.0 / 128, {128, 128});
    auto rep = check_hom_lower_bound<2>(v, h, H, 1.0 / 16, 0.0, 1, kHalf);
    EXPECT_TRUE(rep.holds) << rep.lhs << " " << rep.rhs;
  }
}

TEST(HomLowerBound, LargeSigmaIsTrivial) {
  auto h = laminate_h();
  auto H = homogenized_matrix<2>(h, 32);
  auto v = BandLimitedField<2>(7, 3).sample({0.0, 0.0}, 1.0 / 256, {256, 256});
  auto rep = check_hom_lower_bound<2>(v, h, H, 1.0 / 32, h.c4, 1, kHalf);
  EXPECT_LE(rep.rhs, 0.0);
  EXPECT_TRUE(rep.holds);
}

TEST(HomLowerBound, CalibratedKOnLaminateCorpus) {
  auto h = laminate_h();
  auto H = homogenized_matrix<2>(h, 64);
  const double delta = 1.0 / 64;
  std::vector<GridField<2>> corpus;
  for (int s = 0; s < 10; ++s) corpus.push_back(BandLimitedField<2>(500 + s, 4).sample({0.0, 0.0}, 1.0 / 512, {512, 512}));
  for (int s = 0; s < 10; ++s)
    corpus.push_back(laminate_two_scale_field(BandLimitedField<2>(600 + s, 2), PeriodicField<2>::laminate(0, {1.0, 4.0}),
                                              delta, 1.0, {0.0, 0.0}, 1.0 / 512, {512, 512}));
  auto cal = calibrate_K<2>(corpus, h, H, delta, 0.1, kHalf, 4);
  ASSERT_TRUE(cal.found);
  for (const auto& v : corpus) EXPECT_TRUE(check_hom_lower_bound<2>(v, h, H, delta, 0.1, cal.K, kHalf).holds);
}

TEST(TwoScaleField, MatchesDirectConstruction) {
  // {1, 4} laminate: phi' = +-0.6, phi = 0.6 y - 0.15 on the soft half.
  BandLimitedField<2> V(3, 2);
  const double delta = 1.0 / 8;
  auto f = laminate_two_scale_field(V, PeriodicField<2>::laminate(0, {1.0, 4.0}), delta, 1.0, {0.0, 0.0}, 1.0 / 64,
                                    {64, 64});
  for (std::size_t k = 0; k < f.size(); k += 37) {
    Vec<2> x = f.center(k);
    double y = x[0] / delta - std::floor(x[0] / delta);
    double phi = (y < 0.5 ? 0.6 * y : 0.6 * (1.0 - y)) - 0.15;
    EXPECT_NEAR(f[k], V(x) + delta * V.gradient(x)[0] * phi, 1e-12);
    // gradient against central differences of the continuous two-scale map
    auto F = [&](const Vec<2>& z) {
      double yy = z[0] / delta - std::floor(z[0] / delta);
      double p = (yy < 0.5 ? 0.6 * yy : 0.6 * (1.0 - yy)) - 0.15;
      return V(z) + delta * V.gradient(z)[0] * p;
    };
    const double e = 1e-6;
    for (int d = 0; d < 2; ++d) {
      Vec<2> xp = x, xm = x;
      xp[d] += e;
      xm[d] -= e;
      EXPECT_NEAR(f.gradient(k)[d], (F(xp) - F(xm)) / (2 * e), 1e-5);
    }
  }
}

TEST(HomLowerBound, Errors) {
  auto h = laminate_h();
  auto v = sampled([](const Vec<2>& x) { return x[0]; }, 64, 1);
  Mat<2> H{{{1.6, 0.0}, {0.0, 2.5}}};
  EXPECT_THROW(check_hom_lower_bound<2>(v, h, H, 1.0 / 256, 0.1, 1, kHalf), InputError);  // K delta < spacing
  EXPECT_THROW(check_hom_lower_bound<2>(v, h, H, 1.0 / 8, 0.1, 2, kHalf), InputError);    // margin
}

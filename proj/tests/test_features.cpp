#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "pccseg/features.hpp"
#include "test_support.hpp"

using namespace pcc;

namespace {

// Exact between-class variance comparison: w0*w1*(mu0-mu1)^2 equals
// (S0*W - w0*S)^2 / (w0*w1), compared by cross-multiplication in 128 bits.
int brute_force_otsu(const std::array<std::uint64_t, 256>& h) {
  using i128 = __int128;
  i128 total = 0, weighted = 0;
  for (int i = 0; i < 256; ++i) {
    total += h[i];
    weighted += static_cast<i128>(i) * h[i];
  }
  int nonzero = 0, only = -1;
  for (int i = 0; i < 256; ++i)
    if (h[i]) ++nonzero, only = i;
  if (nonzero == 1) return only;

  int best = -1;
  i128 best_num = 0, best_den = 1;
  for (int t = 0; t < 256; ++t) {
    i128 w0 = 0, s0 = 0;
    for (int i = 0; i <= t; ++i) {
      w0 += h[i];
      s0 += static_cast<i128>(i) * h[i];
    }
    const i128 w1 = total - w0;
    if (w0 == 0 || w1 == 0) continue;
    const i128 d = s0 * total - w0 * weighted;
    const i128 num = d * d;
    const i128 den = w0 * w1;
    if (best < 0 || num * best_den > best_num * den) {
      best = t;
      best_num = num;
      best_den = den;
    }
  }
  return best;
}

ImageBuffer transpose(const ImageBuffer& img) {
  ImageBuffer out(img.height, img.width);
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) out.set(c, r, img.at(r, c));
  return out;
}

}  // namespace

TEST_CASE("hsv_value") {
  CHECK(hsv_value(255, 0, 0) == 1.0);
  CHECK(hsv_value(0, 0, 0) == 0.0);
  CHECK(hsv_value(51, 102, 204) == doctest::Approx(0.8));
}

TEST_CASE("rgb_to_hsv") {
  const Hsv red = rgb_to_hsv(255, 0, 0);
  CHECK(red.h == 0.0);
  CHECK(red.s == 1.0);
  CHECK(red.v == 1.0);
  const Hsv green = rgb_to_hsv(0, 255, 0);
  CHECK(green.h == doctest::Approx(1.0 / 3.0));
  const Hsv blue = rgb_to_hsv(0, 0, 255);
  CHECK(blue.h == doctest::Approx(2.0 / 3.0));
  const Hsv magenta = rgb_to_hsv(255, 0, 255);
  CHECK(magenta.h == doctest::Approx(5.0 / 6.0));
  const Hsv gray = rgb_to_hsv(90, 90, 90);
  CHECK(gray.h == 0.0);
  CHECK(gray.s == 0.0);
  CHECK(gray.v == doctest::Approx(90.0 / 255.0));

  std::mt19937_64 rng(3);
  for (int i = 0; i < 2000; ++i) {
    const Hsv c = rgb_to_hsv(rng() & 255, rng() & 255, rng() & 255);
    CHECK((c.h >= 0.0 && c.h < 1.0));
    CHECK((c.s >= 0.0 && c.s <= 1.0));
    CHECK((c.v >= 0.0 && c.v <= 1.0));
  }
}

TEST_CASE("excess_colors") {
  const ExcessColors g = excess_colors(0, 255, 0);
  CHECK(g.green == 510.0);
  CHECK(g.red == -255.0);
  CHECK(g.blue == -255.0);
  const ExcessColors gray = excess_colors(100, 100, 100);
  CHECK(gray.green == 0.0);
  CHECK(gray.red == doctest::Approx(40.0));
  CHECK(gray.blue == doctest::Approx(40.0));
  const ExcessColors black = excess_colors(0, 0, 0);
  CHECK(black.red == 0.0);
  CHECK(black.green == 0.0);
  CHECK(black.blue == 0.0);
}

TEST_CASE("luma uses BT.601 weights") {
  CHECK(luma(255, 255, 255) == 255);
  CHECK(luma(255, 0, 0) == 76);   // 76.245
  CHECK(luma(0, 255, 0) == 150);  // 149.685
  CHECK(luma(0, 0, 255) == 29);   // 29.07
}

TEST_CASE("otsu_threshold examples") {
  std::array<std::uint64_t, 256> h{};
  h[10] = 50;
  h[200] = 50;
  const int t = otsu_threshold(h);
  CHECK(t >= 10);
  CHECK(t < 200);
  CHECK(t == brute_force_otsu(h));

  h = {};
  h[7] = 99;
  CHECK(otsu_threshold(h) == 7);

  h.fill(1);
  CHECK(otsu_threshold(h) == 127);
  CHECK(brute_force_otsu(h) == 127);

  h = {};
  CHECK_THROWS_AS(otsu_threshold(h), InputError);
}

TEST_CASE("otsu_threshold matches an exhaustive sweep on random histograms") {
  std::mt19937_64 rng(20240611);
  int mismatches = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    std::array<std::uint64_t, 256> h{};
    const int style = trial % 4;
    if (style == 0) {
      for (auto& v : h) v = rng() % 500;
    } else if (style == 1) {
      const double p = 0.02 + 0.3 * (rng() % 1000) / 1000.0;
      for (auto& v : h)
        if ((rng() % 1000) / 1000.0 < p) v = 1 + rng() % 500;
    } else if (style == 2) {
      h[rng() % 256] += 1 + rng() % 500;
      h[rng() % 256] += 1 + rng() % 500;
    } else {
      for (int k = 0; k < 3; ++k) h[rng() % 256] += 1 + rng() % 3;
    }
    if (std::all_of(h.begin(), h.end(), [](auto v) { return v == 0; })) h[0] = 1;
    if (otsu_threshold(h) != brute_force_otsu(h)) ++mismatches;
  }
  CHECK(mismatches == 0);
}

TEST_CASE("proposed features of a 1x1 white image") {
  ImageBuffer img(1, 1);
  img.set(0, 0, {255, 255, 255});
  const FeatureMatrix f = extract_features(img, FeatureMode::Proposed);
  REQUIRE(f.rows == 1);
  REQUIRE(f.cols == 10);
  const double expected[] = {0, 0, 255, 255, 255, 1.0, 102, 0, 102, 0};
  for (std::size_t j = 0; j < 10; ++j) CHECK(f(0, j) == doctest::Approx(expected[j]));
  CHECK_FALSE(f.normalized);
}

TEST_CASE("otsu bit splits a two-level image") {
  ImageBuffer img(4, 1);
  img.set(0, 0, {10, 10, 10});
  img.set(0, 1, {10, 10, 10});
  img.set(0, 2, {200, 200, 200});
  img.set(0, 3, {200, 200, 200});
  const FeatureMatrix f = extract_features(img, FeatureMode::Proposed);
  CHECK(f(0, 9) == 0.0);
  CHECK(f(1, 9) == 0.0);
  CHECK(f(2, 9) == 1.0);
  CHECK(f(3, 9) == 1.0);
}

TEST_CASE("feature counts per mode") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 5; ++i) {
    const ImageBuffer img = testing::random_image(1 + rng() % 9, 1 + rng() % 9, rng);
    CHECK(extract_features(img, FeatureMode::Proposed).cols == kProposedFeatureCount);
    CHECK(extract_features(img, FeatureMode::Reference).cols == kReferenceFeatureCount);
  }
  CHECK(kProposedFeatureCount == 10);
  CHECK(kReferenceFeatureCount == 23);
}

TEST_CASE("reference features of a constant image have zero spread") {
  ImageBuffer img(2, 2);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) img.set(r, c, {90, 90, 90});
  const FeatureMatrix f = extract_features(img, FeatureMode::Reference);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 14; j < 20; ++j) CHECK(f(i, j) == 0.0);
}

TEST_CASE("reference neighborhood statistics match a direct window sweep") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    const ImageBuffer img = testing::random_image(5, 5, rng);
    const FeatureMatrix f = extract_features(img, FeatureMode::Reference);
    for (int r = 0; r < 5; ++r) {
      for (int c = 0; c < 5; ++c) {
        std::vector<std::array<double, 6>> window;
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            const int rr = r + dr, cc = c + dc;
            if (rr < 0 || rr >= 5 || cc < 0 || cc >= 5) continue;
            const Rgb p = img.at(rr, cc);
            const Hsv h = rgb_to_hsv(p.r, p.g, p.b);
            window.push_back({double(p.r), double(p.g), double(p.b), h.h, h.s, h.v});
          }
        }
        const std::size_t i = static_cast<std::size_t>(r) * 5 + c;
        for (int k = 0; k < 6; ++k) {
          double mean = 0.0;
          for (const auto& w : window) mean += w[k];
          mean /= static_cast<double>(window.size());
          double var = 0.0;
          for (const auto& w : window) var += (w[k] - mean) * (w[k] - mean);
          var /= static_cast<double>(window.size());
          CHECK(f(i, 8 + k) == doctest::Approx(mean).epsilon(1e-12));
          CHECK(f(i, 14 + k) == doctest::Approx(std::sqrt(var)).epsilon(1e-9));
        }
        const Rgb p = img.at(r, c);
        const ExcessColors ex = excess_colors(p.r, p.g, p.b);
        CHECK(f(i, 20) == doctest::Approx(ex.red));
        CHECK(f(i, 21) == doctest::Approx(ex.green));
        CHECK(f(i, 22) == doctest::Approx(ex.blue));
      }
    }
  }
}

TEST_CASE("transposing the image transposes location features only") {
  std::mt19937_64 rng(123);
  for (FeatureMode mode : {FeatureMode::Proposed, FeatureMode::Reference}) {
    const ImageBuffer img = testing::random_image(7, 4, rng);
    const ImageBuffer t = transpose(img);
    const FeatureMatrix a = extract_features(img, mode);
    const FeatureMatrix b = extract_features(t, mode);
    for (int r = 0; r < img.height; ++r) {
      for (int c = 0; c < img.width; ++c) {
        const std::size_t i = static_cast<std::size_t>(r) * img.width + c;
        const std::size_t j = static_cast<std::size_t>(c) * t.width + r;
        CHECK(a(i, 0) == b(j, 1));
        CHECK(a(i, 1) == b(j, 0));
        for (std::size_t k = 2; k < a.cols; ++k) CHECK(a(i, k) == doctest::Approx(b(j, k)));
      }
    }
  }
}

TEST_CASE("z_normalize examples") {
  FeatureMatrix m(3, 2);
  m(0, 0) = 1;
  m(1, 0) = 2;
  m(2, 0) = 3;
  m(0, 1) = m(1, 1) = m(2, 1) = 5;
  const FeatureMatrix z = z_normalize(m);
  CHECK(z.normalized);
  CHECK(z(0, 0) == doctest::Approx(-1.2247448714));
  CHECK(z(1, 0) == doctest::Approx(0.0));
  CHECK(z(2, 0) == doctest::Approx(1.2247448714));
  for (std::size_t i = 0; i < 3; ++i) CHECK(z(i, 1) == 0.0);

  CHECK_THROWS(z_normalize(FeatureMatrix(0, 3)));
}

TEST_CASE("z_normalize moments and idempotence") {
  std::mt19937_64 rng(9);
  for (FeatureMode mode : {FeatureMode::Proposed, FeatureMode::Reference}) {
    const ImageBuffer img = testing::random_image(13, 11, rng);
    const FeatureMatrix raw = extract_features(img, mode);
    const FeatureMatrix z = z_normalize(raw);
    for (std::size_t j = 0; j < z.cols; ++j) {
      double mean = 0.0, sq = 0.0;
      for (std::size_t i = 0; i < z.rows; ++i) mean += z(i, j);
      mean /= static_cast<double>(z.rows);
      for (std::size_t i = 0; i < z.rows; ++i) sq += (z(i, j) - mean) * (z(i, j) - mean);
      const double sd = std::sqrt(sq / static_cast<double>(z.rows));
      CHECK(std::abs(mean) < 1e-9);
      if (sd != 0.0) CHECK(std::abs(sd - 1.0) < 1e-9);
    }
    FeatureMatrix again = z;
    again.normalized = false;
    const FeatureMatrix zz = z_normalize(again);
    for (std::size_t k = 0; k < z.values.size(); ++k)
      CHECK(std::abs(zz.values[k] - z.values[k]) < 1e-9);
  }
}

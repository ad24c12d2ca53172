#include <gtest/gtest.h>

#include "holo/core_types.hpp"

using namespace holo;

namespace {

OpticalTrain water_optics() { return OpticalTrain(0.66, 1.33, {1.0, 0.0}); }

Hologram ramp(std::size_t nx, std::size_t ny) {
  std::vector<double> v(nx * ny);
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = 1.0 + static_cast<double>(k);
  return Hologram(v, DetectorGrid(nx, ny, 0.1), water_optics(), {{"frame", "3"}});
}

}  // namespace

TEST(OpticalTrain, RejectsInvalidValues) {
  EXPECT_THROW(OpticalTrain(0.0, 1.33, {1.0, 0.0}), ValueError);
  EXPECT_THROW(OpticalTrain(0.66, -1.0, {1.0, 0.0}), ValueError);
  EXPECT_THROW(OpticalTrain(0.66, 1.33, {1.0, 1.0}), ValueError);
  EXPECT_NO_THROW(OpticalTrain(0.66, 1.33, {std::sqrt(0.5), std::sqrt(0.5)}));
}

TEST(OpticalTrain, Wavenumber) {
  const auto o = water_optics();
  EXPECT_DOUBLE_EQ(o.wavenumber(), 2.0 * std::numbers::pi * 1.33 / 0.66);
}

TEST(Hologram, RejectsNegativeIntensityAndShapeMismatch) {
  EXPECT_THROW(Hologram({1.0, -0.1, 1.0, 1.0}, DetectorGrid(2, 2, 1.0)), ValueError);
  EXPECT_THROW(Hologram({1.0, 1.0, 1.0}, DetectorGrid(2, 2, 1.0)), ShapeError);
}

TEST(Crop, FullWindowIsIdentity) {
  const auto h = Hologram::uniform(DetectorGrid(4, 4, 0.1), 1.0, water_optics());
  const auto c = crop(h, 0, 0, 4, 4);
  EXPECT_EQ(c.data(), h.data());
  EXPECT_EQ(c.grid(), h.grid());
  EXPECT_EQ(c.optics(), h.optics());
}

TEST(Crop, PreservesOpticsAndMeta) {
  const auto h = ramp(8, 8);
  const auto c = crop(h, 2, 2, 4, 4);
  EXPECT_EQ(c.optics(), h.optics());
  EXPECT_EQ(c.meta().at("frame"), "3");
  EXPECT_EQ(c.meta().at("crop_origin"), "2 2");
  EXPECT_EQ(c(0, 0), h(2, 2));
  EXPECT_EQ(c(3, 3), h(5, 5));
}

TEST(Crop, OutOfBoundsNamesTheBound) {
  const auto h = Hologram::uniform(DetectorGrid(4, 4, 0.1), 1.0);
  try {
    crop(h, 3, 3, 4, 4);
    FAIL() << "expected BoundsError";
  } catch (const BoundsError& e) {
    EXPECT_NE(std::string(e.what()).find("column"), std::string::npos);
  }
  EXPECT_THROW(crop(h, 0, 1, 4, 4), BoundsError);
}

TEST(Crop, CoordinatesKeepPhysicalPositions) {
  const auto h = ramp(10, 7);
  const auto once = crop(h, 3, 2, 5, 4);
  const auto twice = crop(once, 1, 1, 3, 2);
  for (std::size_t j = 0; j < 2; ++j) {
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_EQ(twice.grid().position(i, j), h.grid().position(i + 4, j + 3));
      EXPECT_EQ(twice(i, j), h(i + 4, j + 3));
    }
  }
  EXPECT_EQ(twice.optics(), h.optics());
  EXPECT_EQ(twice.meta().at("crop_origin"), "4 3");
}

TEST(NormalizeByBackground, SelfDivisionAndScaling) {
  const auto bg = ramp(5, 4);
  const auto ones = normalize_by_background(bg, bg);
  for (double v : ones.data()) EXPECT_EQ(v, 1.0);

  std::vector<double> doubled = bg.data();
  for (auto& v : doubled) v *= 2.0;
  const auto raw = Hologram(doubled, bg.grid(), bg.optics(), {{"frame", "9"}, {"sample", "beads"}});
  const auto twos = normalize_by_background(raw, bg);
  for (double v : twos.data()) EXPECT_EQ(v, 2.0);
  EXPECT_EQ(twos.meta().at("frame"), "9");  // raw wins
  EXPECT_EQ(twos.meta().at("sample"), "beads");
  EXPECT_EQ(twos.optics(), raw.optics());
}

TEST(NormalizeByBackground, ZeroPixelIsReported) {
  std::vector<double> b(16, 1.0);
  b[2 * 4 + 1] = 0.0;
  const Hologram bg(b, DetectorGrid(4, 4, 0.1));
  const auto raw = Hologram::uniform(DetectorGrid(4, 4, 0.1), 1.0);
  try {
    normalize_by_background(raw, bg);
    FAIL() << "expected ValueError";
  } catch (const ValueError& e) {
    EXPECT_NE(std::string(e.what()).find("(1, 2)"), std::string::npos) << e.what();
  }
}

TEST(NormalizeByBackground, ShapeMismatch) {
  EXPECT_THROW(normalize_by_background(Hologram::uniform(DetectorGrid(4, 4, 0.1), 1.0),
                                       Hologram::uniform(DetectorGrid(4, 3, 0.1), 1.0)),
               ShapeError);
}

TEST(Metadata, OpticsSurviveOperationChains) {
  const auto h = ramp(12, 12);
  auto cur = h;
  for (int round = 0; round < 3; ++round) {
    cur = crop(cur, 1, 1, cur.nx() - 2, cur.ny() - 2);
    cur = normalize_by_background(cur, crop(h, 0, 0, cur.nx(), cur.ny()));
  }
  ASSERT_TRUE(cur.optics().has_value());
  EXPECT_EQ(cur.optics()->wavelength(), h.optics()->wavelength());
  EXPECT_EQ(cur.optics()->medium_index(), h.optics()->medium_index());
  EXPECT_EQ(cur.optics()->polarization(), h.optics()->polarization());
}

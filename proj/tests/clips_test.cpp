#include <doctest.h>

#include <string>
#include <vector>

#include "emtrack/clips.hpp"
#include "emtrack/errors.hpp"

using namespace emtrack;

namespace {

Detection det(double x, double y, double w, double h, double conf,
              const std::string& id) {
  Detection d;
  d.box = BoundingBox{x, y, w, h, conf};
  d.crop_id = id;
  return d;
}

}  // namespace

TEST_CASE("two steady objects split into fixed-length clips") {
  std::vector<std::vector<Detection>> frames;
  for (int t = 0; t < 4; ++t) {
    frames.push_back({det(10.0 + 5.0 * t, 20.0, 8, 16, 0.9,
                          std::to_string(t + 1) + ":0"),
                      det(100.0, 50.0 + 2.0 * t, 8, 16, 0.9,
                          std::to_string(t + 1) + ":1")});
  }
  PreprocessOptions opt;
  opt.clip_len = 2;
  auto res = preprocess_clips(frames, 1, "seq", opt);

  REQUIRE(res.clips.size() == 2);
  CHECK(res.warnings.empty());
  const auto& c0 = res.clips[0];
  CHECK(c0.k == 2);
  CHECK(c0.t == 2);
  CHECK(c0.first_frame == 1);
  CHECK(c0.frames[0][0].crop_id == "1:0");
  CHECK(c0.frames[1][0].crop_id == "2:0");
  CHECK(c0.frames[1][1].crop_id == "2:1");
  CHECK(res.clips[1].first_frame == 3);
  CHECK(res.clips[1].frames[0][0].crop_id == "3:0");
}

TEST_CASE("below-threshold first-frame detections do not open slots") {
  std::vector<std::vector<Detection>> frames = {
      {det(10, 10, 8, 16, 0.9, "1:0"), det(60, 10, 8, 16, 0.3, "1:1")},
      {det(10, 10, 8, 16, 0.9, "2:0"), det(60, 10, 8, 16, 0.9, "2:1")},
  };
  PreprocessOptions opt;
  opt.clip_len = 2;
  auto res = preprocess_clips(frames, 1, "seq", opt);

  REQUIRE(res.clips.size() == 1);
  CHECK(res.clips[0].k == 1);
  CHECK(res.clips[0].frames[0][0].crop_id == "1:0");
  // the far-away frame-2 candidate is left unclaimed
  CHECK(res.clips[0].frames[1][0].crop_id == "2:0");
}

TEST_CASE("a missing detection is filled by constant-velocity extrapolation") {
  // moves +4 px/frame, disappears at the third frame
  std::vector<std::vector<Detection>> frames = {
      {det(0, 0, 10, 10, 0.9, "1:0")},
      {det(4, 0, 10, 10, 0.9, "2:0")},
      {},
      {det(12, 0, 10, 10, 0.9, "4:0")},
  };
  PreprocessOptions opt;
  opt.clip_len = 4;
  auto res = preprocess_clips(frames, 1, "seq", opt);

  REQUIRE(res.clips.size() == 1);
  const auto& c = res.clips[0];
  CHECK(c.k == 1);

  const auto& filled = c.frames[2][0];
  CHECK(filled.crop_id == "");
  CHECK(filled.box.x == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(filled.box.y == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(filled.box.w == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(filled.box.conf == 0.0);

  // the reappearing detection is claimed again afterwards
  CHECK(c.frames[3][0].crop_id == "4:0");
}

TEST_CASE("unclaimed detections are dropped, closest candidate wins") {
  std::vector<std::vector<Detection>> frames = {
      {det(0, 0, 10, 10, 0.9, "1:0")},
      {det(1, 0, 10, 10, 0.9, "2:0"), det(7, 0, 10, 10, 0.9, "2:1")},
  };
  PreprocessOptions opt;
  opt.clip_len = 2;
  auto res = preprocess_clips(frames, 1, "seq", opt);

  REQUIRE(res.clips.size() == 1);
  const auto& c = res.clips[0];
  CHECK(c.k == 1);
  CHECK(c.frames[1].size() == 1);
  CHECK(c.frames[1][0].crop_id == "2:0");
}

TEST_CASE("overlap below the gate leaves the slot extrapolated") {
  std::vector<std::vector<Detection>> frames = {
      {det(0, 0, 10, 10, 0.9, "1:0")},
      {det(500, 500, 10, 10, 0.9, "2:0")},
  };
  PreprocessOptions opt;
  opt.clip_len = 2;
  auto res = preprocess_clips(frames, 1, "seq", opt);

  REQUIRE(res.clips.size() == 1);
  const auto& c = res.clips[0];
  CHECK(c.frames[1][0].crop_id == "");
  CHECK(c.frames[1][0].box.x == doctest::Approx(0.0));
}

TEST_CASE("empty first frame skips the window with a warning") {
  std::vector<std::vector<Detection>> frames = {
      {},
      {det(0, 0, 10, 10, 0.9, "2:0")},
      {det(0, 0, 10, 10, 0.9, "3:0")},
      {det(1, 0, 10, 10, 0.9, "4:0")},
  };
  PreprocessOptions opt;
  opt.clip_len = 2;
  auto res = preprocess_clips(frames, 7, "camA", opt);

  REQUIRE(res.clips.size() == 1);
  CHECK(res.clips[0].first_frame == 9);
  REQUIRE(res.warnings.size() == 1);
  CHECK(res.warnings[0].find("camA") != std::string::npos);
  CHECK(res.warnings[0].find("7") != std::string::npos);
}

TEST_CASE("a trailing partial window is dropped") {
  std::vector<std::vector<Detection>> frames;
  for (int t = 0; t < 5; ++t)
    frames.push_back({det(10.0 * t, 0, 10, 10, 0.9, "x")});
  PreprocessOptions opt;
  opt.clip_len = 2;
  auto res = preprocess_clips(frames, 1, "seq", opt);
  CHECK(res.clips.size() == 2);

  opt.clip_len = 1;
  CHECK_THROWS_AS(preprocess_clips(frames, 1, "seq", opt), DimensionError);
}

TEST_CASE("extrapolation keeps running from the last claimed frame") {
  // claimed at t=0 and t=1 with +4/frame, missing at t=2 and t=3
  std::vector<std::vector<Detection>> frames = {
      {det(0, 0, 10, 10, 0.9, "1:0")},
      {det(4, 0, 10, 10, 0.9, "2:0")},
      {},
      {},
  };
  PreprocessOptions opt;
  opt.clip_len = 4;
  auto res = preprocess_clips(frames, 1, "seq", opt);

  REQUIRE(res.clips.size() == 1);
  const auto& c = res.clips[0];
  CHECK(c.frames[2][0].box.x == doctest::Approx(8.0));
  CHECK(c.frames[3][0].box.x == doctest::Approx(12.0));
}

TEST_CASE("clip validation rejects ragged or degenerate shapes") {
  DetectionClip c;
  c.k = 2;
  c.t = 2;
  c.frames = {{det(0, 0, 1, 1, 1, ""), det(0, 0, 1, 1, 1, "")},
              {det(0, 0, 1, 1, 1, "")}};
  CHECK_THROWS_AS(c.check(), DimensionError);
  c.frames[1].push_back(det(0, 0, 1, 1, 1, ""));
  CHECK_NOTHROW(c.check());
  c.t = 1;
  CHECK_THROWS_AS(c.check(), DimensionError);
}

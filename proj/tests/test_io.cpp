#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sketchgen/netpbm.hpp>
#include <sketchgen/rng.hpp>

using namespace sketchgen;
namespace fs = std::filesystem;

static fs::path tmp_dir() {
  auto p = fs::temp_directory_path() / "sketchgen_io_test";
  fs::create_directories(p);
  return p;
}

TEST_CASE("ppm round trip is exact at 8-bit resolution") {
  Rng rng(1);
  Img img(3, 7, 5);
  for (auto& v : img.v) v = float(rng.uniform());
  const auto path = (tmp_dir() / "rt.ppm").string();
  write_ppm(path, img);
  Img back = read_pnm(path);
  REQUIRE(back.c == 3);
  REQUIRE(back.h == 7);
  REQUIRE(back.w == 5);
  for (std::size_t i = 0; i < img.v.size(); ++i)
    CHECK(std::abs(back.v[i] - img.v[i]) <= 0.5f / 255.0f + 1e-6f);
  // a second trip is bitwise stable
  const auto path2 = (tmp_dir() / "rt2.ppm").string();
  write_ppm(path2, back);
  Img again = read_pnm(path2);
  CHECK(again.v == back.v);
}

TEST_CASE("pgm round trip and dark-on-light polarity") {
  Img sketch(1, 4, 4);
  sketch.at(0, 1, 2) = 1.0f;  // ink
  // storage convention: invert so ink is dark on a light page
  Img stored(1, 4, 4);
  for (std::size_t i = 0; i < sketch.v.size(); ++i)
    stored.v[i] = 1.0f - sketch.v[i];
  const auto path = (tmp_dir() / "s.pgm").string();
  write_pgm(path, stored);
  Img loaded = read_pnm(path);
  REQUIRE(loaded.c == 1);
  CHECK(loaded.at(0, 1, 2) == 0.0f);   // ink is dark in the file
  CHECK(loaded.at(0, 0, 0) == 1.0f);   // page is light
  Img recovered(1, 4, 4);
  for (std::size_t i = 0; i < loaded.v.size(); ++i)
    recovered.v[i] = 1.0f - loaded.v[i];
  CHECK(recovered.v == sketch.v);
}

TEST_CASE("values are clamped and quantized with rounding") {
  CHECK(quantize(-0.5f) == 0);
  CHECK(quantize(1.5f) == 255);
  CHECK(quantize(0.0f) == 0);
  CHECK(quantize(1.0f) == 255);
  CHECK(quantize(0.5f) == 128);
}

TEST_CASE("reader skips comments in headers") {
  const auto path = (tmp_dir() / "comment.pgm").string();
  {
    std::ofstream f(path, std::ios::binary);
    f << "P5\n# a comment\n2 # inline\n1\n255\n";
    const char px[2] = {0, char(255)};
    f.write(px, 2);
  }
  Img img = read_pnm(path);
  CHECK(img.w == 2);
  CHECK(img.h == 1);
  CHECK(img.at(0, 0, 0) == 0.0f);
  CHECK(img.at(0, 0, 1) == 1.0f);
}

TEST_CASE("reader rejects bad files") {
  const auto dir = tmp_dir();
  CHECK_THROWS_AS(read_pnm((dir / "missing.pgm").string()), IoError);

  const auto bad_magic = (dir / "bad.pgm").string();
  {
    std::ofstream f(bad_magic, std::ios::binary);
    f << "P2\n2 2\n255\n0 0 0 0\n";
  }
  CHECK_THROWS_AS(read_pnm(bad_magic), IoError);

  const auto truncated = (dir / "trunc.ppm").string();
  {
    std::ofstream f(truncated, std::ios::binary);
    f << "P6\n4 4\n255\n";
    const char px[5] = {1, 2, 3, 4, 5};
    f.write(px, 5);
  }
  CHECK_THROWS_AS(read_pnm(truncated), IoError);

  const auto maxval = (dir / "maxval.pgm").string();
  {
    std::ofstream f(maxval, std::ios::binary);
    f << "P5\n1 1\n65535\n";
    const char px[2] = {0, 0};
    f.write(px, 2);
  }
  CHECK_THROWS_AS(read_pnm(maxval), IoError);

  Img rgb(3, 2, 2);
  CHECK_THROWS_AS(write_pgm((dir / "x.pgm").string(), rgb), IoError);
  Img grey(1, 2, 2);
  CHECK_THROWS_AS(write_ppm((dir / "x.ppm").string(), grey), IoError);
}

#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "psar/dataset_io.hpp"

using namespace psar;

namespace {

Container sample_container() {
  Container c;
  c.meta["kind"] = "test";
  c.meta["note"] = "hello";
  c.add_real("r", RVec::LinSpaced(5, -1.0, 1.0));
  c.add_complex("c", oracle::random_cvec(4, 2));
  c.add_real("m", {2, 3}, {1, 2, 3, 4, 5, 6});
  return c;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("psar_test_" + name);
}

}  // namespace

TEST_CASE("SARP1 round trip") {
  const Container c = sample_container();
  const auto bytes = encode_container(c);
  REQUIRE(bytes.size() > 9);
  CHECK(std::string(bytes.begin(), bytes.begin() + 5) == "SARP1");

  const Container back = decode_container(bytes);
  CHECK(back.meta.at("note") == "hello");
  CHECK(back.real("r") == c.real("r"));
  CHECK(back.complex("c") == c.complex("c"));
  CHECK(back.blob("m").shape == std::vector<std::int64_t>{2, 3});
  CHECK(back.blob("m").data == c.blob("m").data);
  CHECK(encode_container(back) == bytes);
}

TEST_CASE("SARP1 rejects malformed input") {
  const auto good = encode_container(sample_container());

  SUBCASE("bad magic") {
    auto bad = good;
    bad[0] = 'X';
    CHECK_THROWS_AS(decode_container(bad), FormatError);
  }
  SUBCASE("too short") {
    CHECK_THROWS_AS(decode_container({'S', 'A', 'R'}), FormatError);
  }
  SUBCASE("header length beyond file") {
    auto bad = good;
    bad[8] = 0x7f;
    CHECK_THROWS_AS(decode_container(bad), FormatError);
  }
  SUBCASE("truncated blob data") {
    auto bad = good;
    bad.resize(bad.size() - 8);
    CHECK_THROWS_AS(decode_container(bad), FormatError);
  }
  SUBCASE("garbage header") {
    std::vector<std::uint8_t> bad{'S', 'A', 'R', 'P', '1', 3, 0, 0, 0, '{', '{', '{'};
    CHECK_THROWS_AS(decode_container(bad), FormatError);
  }
  SUBCASE("wrong dtype access and missing blob") {
    const auto c = decode_container(good);
    CHECK_THROWS_AS(c.real("c"), FormatError);
    CHECK_THROWS_AS(c.complex("r"), FormatError);
    CHECK_THROWS_AS(c.blob("nope"), FormatError);
  }
}

TEST_CASE("container construction checks") {
  Container c;
  c.add_real("a", RVec::Ones(2));
  CHECK_THROWS_AS(c.add_real("a", RVec::Ones(2)), InvalidArgument);
  CHECK_THROWS_AS(c.add_real("b", {3}, {1.0, 2.0}), InvalidArgument);
}

TEST_CASE("file IO errors") {
  CHECK_THROWS_AS(read_container("/nonexistent/dir/file.sarp"), IoError);
  CHECK_THROWS_AS(write_container("/nonexistent/dir/file.sarp", sample_container()), IoError);

  const auto p = temp_path("roundtrip.sarp");
  write_container(p, sample_container());
  CHECK(read_container(p).real("r") == sample_container().real("r"));
  std::filesystem::remove(p);
}

TEST_CASE("dataset round trip") {
  CircularGeometryParams geo{.slow_time_samples = 8, .freq_samples = 4};
  const GridParams grid{15.5, 8};
  DatasetFile file;
  file.splits.emplace_back("train", generate_dataset(geo, grid, 3, 10, 10.0, {2, 4}));
  file.splits.emplace_back("test_10dB", generate_dataset(geo, grid, 2, 99, std::nullopt, {2, 4}));

  const auto p = temp_path("dataset.sarp");
  write_dataset(p, file);
  const DatasetFile back = read_dataset(p);
  std::filesystem::remove(p);

  REQUIRE(back.splits.size() == 2);
  const Dataset& a = file.split("train");
  const Dataset& b = back.split("train");
  CHECK(b.geometry.slow_time_samples == 8);
  CHECK(b.grid.pixels_per_side == 8);
  CHECK(b.base_seed == 10);
  CHECK(b.snr_db == 10.0);
  CHECK(b.limits.max_side_px == 4);
  REQUIRE(b.samples.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(b.samples[i].measurements == a.samples[i].measurements);
    REQUIRE(b.samples[i].scene.has_value());
    CHECK(b.samples[i].scene->reflectivity == a.samples[i].scene->reflectivity);
    CHECK(b.samples[i].scene->rect.width == a.samples[i].scene->rect.width);
  }
  CHECK_FALSE(back.split("test_10dB").snr_db.has_value());
  CHECK(back.find("missing") == nullptr);
  CHECK_THROWS_AS(back.split("missing"), FormatError);
}

TEST_CASE("measurement-only datasets") {
  CircularGeometryParams geo{.slow_time_samples = 8, .freq_samples = 4};
  DatasetFile file;
  file.splits.emplace_back("field", generate_dataset(geo, {15.5, 8}, 2, 1, std::nullopt, {2, 4}));
  for (auto& s : file.splits[0].second.samples) s.scene.reset();
  const auto back = dataset_from_container(decode_container(encode_container(to_container(file))));
  CHECK_FALSE(back.split("field").has_ground_truth());
  CHECK(back.split("field").samples[1].measurements == file.splits[0].second.samples[1].measurements);
}

TEST_CASE("dataset container rejects other kinds") {
  Container c;
  c.meta["kind"] = "model";
  CHECK_THROWS_AS(dataset_from_container(c), FormatError);
}

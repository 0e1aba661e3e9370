#include <fstream>

#include "cocoa/spectral_io.hpp"
#include "cocoa/synth.hpp"
#include "cocoa/text.hpp"
#include "common.hpp"

using namespace cocoa;
using testing::index_grid;

namespace {

void write(const std::filesystem::path& p, const std::string& body) { text::write_file(p, body); }

std::string scan_rows(std::size_t rows, std::size_t bands) {
  std::string out;
  for (std::size_t r = 0; r < rows; ++r) {
    out += std::to_string(r);
    for (std::size_t b = 0; b < bands; ++b) out += "," + std::to_string(1000 + r + b);
    out += "\n";
  }
  return out;
}

}  // namespace

TEST_CASE("load_scans reads one spectrum per row") {
  oracle::TempDir dir("io");
  const auto grid = index_grid(3648, 190.0, 0.3);
  write(dir.path() / "scans.csv", scan_rows(3, 3648));
  const auto scans = load_scans(dir.path() / "scans.csv", grid, "7");
  REQUIRE(scans.size() == 3);
  CHECK(scans[0].size() == 3648);
  CHECK(scans[2].meta.scan_index == 2);
  CHECK(scans[1].meta.batch_id == "7");
  CHECK(scans[1].kind == SpectrumKind::Intensity);
  CHECK(scans[1].values[5] == 1006.0);
}

TEST_CASE("load_scans edge cases") {
  oracle::TempDir dir("io");
  const auto grid = index_grid(3648, 190.0, 0.3);
  write(dir.path() / "empty.csv", "");
  CHECK(load_scans(dir.path() / "empty.csv", grid).empty());

  std::string short_row = scan_rows(1, 3647);
  write(dir.path() / "short.csv", short_row);
  try {
    load_scans(dir.path() / "short.csv", grid);
    FAIL("expected a dimension error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Dimension);
    CHECK(std::string(e.what()).find("row 1") != std::string::npos);
  }

  write(dir.path() / "bad.csv", "0,1,2,x\n");
  CHECK_KIND(load_scans(dir.path() / "bad.csv", index_grid(3)), ErrorKind::Parse);
}

TEST_CASE("load_labels parses the campaign table") {
  oracle::TempDir dir("labels");
  const auto table = campaign_labels();
  save_labels(dir.path() / "labels.csv", table);
  const auto back = load_labels(dir.path() / "labels.csv");
  REQUIRE(back.size() == 20);
  CHECK(back == table);

  const BatchRecord& first = back[0];
  CHECK(first.batch_id == "1");
  CHECK(first.fermentation_level == doctest::Approx(0.60));
  CHECK(first.moisture == doctest::Approx(5.12));
  CHECK(first.cadmium == doctest::Approx(2.14));
  CHECK(first.polyphenols == doctest::Approx(41.30));
  CHECK(first.fermentation_hours.value() == doctest::Approx(96.0));

  for (const char* id : {"13", "14", "15", "16"}) {
    const auto it = std::find_if(back.begin(), back.end(), [&](const BatchRecord& r) { return r.batch_id == id; });
    REQUIRE(it != back.end());
    CHECK(it->cadmium == 0.09);
    CHECK(it->cadmium_below_detection);
  }
  const std::string body = text::read_file(dir.path() / "labels.csv");
  CHECK(body.find("<0.09") != std::string::npos);
}

TEST_CASE("load_labels rejects invalid rows") {
  oracle::TempDir dir("labels");
  const std::string header(kLabelHeader);
  write(dir.path() / "high.csv", header + "\n1,21/11/2024,Santander,Colombia,120,5.12,2.14,41.3,96\n");
  CHECK_KIND(load_labels(dir.path() / "high.csv"), ErrorKind::Validation);
  write(dir.path() / "schema.csv", "batch_id,date,region\n1,21/11/2024,Santander\n");
  CHECK_KIND(load_labels(dir.path() / "schema.csv"), ErrorKind::Schema);
  write(dir.path() / "flag.csv", header + "\n1,21/11/2024,Santander,Colombia,60,5.12,<0.09,41.3,\n");
  const auto rec = load_labels(dir.path() / "flag.csv");
  CHECK(rec[0].cadmium_below_detection);
  CHECK_FALSE(rec[0].fermentation_hours.has_value());
}

TEST_CASE("fermentation_ratio") {
  CHECK(fermentation_ratio(50, 30, 100) == doctest::Approx(0.80));
  CHECK(fermentation_ratio(0, 0, 100) == 0.0);
  CHECK(fermentation_ratio(96, 0, 100) == doctest::Approx(0.96));
  CHECK_KIND(fermentation_ratio(1, 1, 0), ErrorKind::Domain);
  CHECK_KIND(fermentation_ratio(-1, 1, 10), ErrorKind::Domain);
  CHECK_KIND(fermentation_ratio(6, 5, 10), ErrorKind::Domain);
  for (long long p = 0; p < 50; ++p) {
    CHECK(fermentation_ratio(p + 1, 10, 100) >= fermentation_ratio(p, 10, 100));
    CHECK(fermentation_ratio(10, p + 1, 100) >= fermentation_ratio(10, p, 100));
  }
}

TEST_CASE("save_dataset and load_dataset round trip") {
  oracle::TempDir dir("ds");
  SynthProfile vis = default_profile(RangeTag::Vis);
  SynthProfile nir = default_profile(RangeTag::Nir);
  vis.belt_fraction = 0.2;
  auto labels = campaign_labels();
  labels.resize(2);
  const Dataset ds = generate_corpus({vis, nir}, labels, {10, 5});
  save_dataset(ds, dir.path() / "out");
  const Dataset back = load_dataset(dir.path() / "out");
  CHECK(back == ds);
  CHECK(back.batches[0].ranges.at(RangeTag::Vis).scans.size() == 10);

  const Dataset empty = generate_corpus({vis, nir}, {}, {10, 5});
  CHECK(empty.batches.empty());
  save_dataset(empty, dir.path() / "empty");
  CHECK(load_dataset(dir.path() / "empty").batches.empty());
}

TEST_CASE("manifest referencing a missing file is an integrity error") {
  oracle::TempDir dir("ds");
  auto labels = campaign_labels();
  labels.resize(1);
  const Dataset ds = generate_corpus({default_profile(RangeTag::Vis)}, labels, {4, 1});
  const DatasetManifest m = save_dataset(ds, dir.path());
  const auto& files = m.entries.at(0).ranges.at(RangeTag::Vis);
  std::filesystem::remove(m.root / files.scans);
  CHECK_KIND(load_dataset(dir.path()), ErrorKind::Integrity);
  CHECK_KIND(load_dataset(dir.path() / "nowhere"), ErrorKind::Integrity);
}

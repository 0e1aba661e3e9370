#include "cocoa/spectral_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "cocoa/text.hpp"

namespace fs = std::filesystem;

namespace cocoa {

WavelengthGrid load_grid(const fs::path& path, RangeTag tag) {
  std::vector<double> nm;
  const auto lines = text::read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = text::trim(lines[i]);
    if (line.empty()) continue;
    nm.push_back(text::parse_double(line, path.string() + " line " + std::to_string(i + 1)));
  }
  return WavelengthGrid(std::move(nm), tag);
}

void save_grid(const fs::path& path, const WavelengthGrid& grid) {
  std::string out;
  for (double v : grid.values()) {
    out += text::format_double(v);
    out += '\n';
  }
  text::write_file(path, out);
}

std::vector<Spectrum> load_scans(const fs::path& path, const GridPtr& grid,
                                 const std::string& batch_id) {
  if (!grid) fail(ErrorKind::Dimension, "load_scans requires a wavelength grid");
  std::vector<Spectrum> out;
  const auto lines = text::read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    const std::string where = path.string() + " row " + std::to_string(i + 1);
    const auto fields = text::split(lines[i]);
    if (fields.size() != grid->size() + 1) {
      fail(ErrorKind::Dimension, where + ": expected " + std::to_string(grid->size()) +
                                     " band values, found " +
                                     std::to_string(fields.size() - 1));
    }
    Spectrum s;
    s.grid = grid;
    s.kind = SpectrumKind::Intensity;
    s.meta.batch_id = batch_id;
    s.meta.scan_index = text::parse_int(fields[0], where);
    s.values.reserve(grid->size());
    for (std::size_t c = 1; c < fields.size(); ++c) {
      const double v = text::parse_double(fields[c], where);
      s.values.push_back(v);
    }
    out.push_back(std::move(s));
  }
  return out;
}

void save_scans(const fs::path& path, std::span<const Spectrum> scans) {
  std::string out;
  for (const auto& s : scans) {
    out += std::to_string(s.meta.scan_index);
    for (double v : s.values) {
      out += ',';
      out += text::format_double(v);
    }
    out += '\n';
  }
  text::write_file(path, out);
}

namespace {

// Shortest percent string whose parse maps back to exactly `fraction`.
std::string percent_text(double fraction) {
  char buf[40];
  for (int p = 1; p <= 17; ++p) {
    std::snprintf(buf, sizeof buf, "%.*g", p, fraction * 100.0);
    if (text::parse_double(buf, "percent") / 100.0 == fraction) return buf;
  }
  return text::format_double(fraction * 100.0);
}

}  // namespace

std::vector<BatchRecord> load_labels(const fs::path& path) {
  const auto lines = text::read_lines(path);
  if (lines.empty()) fail(ErrorKind::Schema, path.string() + ": missing header");
  const auto header = text::split(lines[0]);
  const auto required = text::split(kLabelHeader);
  std::vector<std::size_t> col(required.size());
  for (std::size_t r = 0; r < required.size(); ++r) {
    auto it = std::find_if(header.begin(), header.end(),
                           [&](std::string_view h) { return text::trim(h) == required[r]; });
    if (it == header.end()) {
      fail(ErrorKind::Schema,
           path.string() + ": missing column '" + std::string(required[r]) + "'");
    }
    col[r] = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<BatchRecord> out;
  std::set<std::string> seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    const std::string where = path.string() + " row " + std::to_string(i);
    const auto fields = text::split(lines[i]);
    if (fields.size() != header.size()) {
      fail(ErrorKind::Parse, where + ": expected " + std::to_string(header.size()) +
                                 " fields, found " + std::to_string(fields.size()));
    }
    auto field = [&](std::size_t r) { return text::trim(fields[col[r]]); };
    BatchRecord rec;
    rec.batch_id = std::string(field(0));
    rec.date = parse_date(field(1));
    rec.region = std::string(field(2));
    rec.country = std::string(field(3));
    const double pct = text::parse_double(field(4), where + " fermentation_pct");
    if (!(pct >= 0.0 && pct <= 100.0)) {
      fail(ErrorKind::Validation, where + ": fermentation level " + std::string(field(4)) +
                                      "% outside [0, 100]");
    }
    rec.fermentation_level = pct / 100.0;
    rec.moisture = text::parse_double(field(5), where + " moisture_pct");
    auto cd = field(6);
    if (!cd.empty() && cd.front() == '<') {
      rec.cadmium_below_detection = true;
      cd.remove_prefix(1);
    }
    rec.cadmium = text::parse_double(cd, where + " cadmium_mgkg");
    rec.polyphenols = text::parse_double(field(7), where + " polyphenols_mgg");
    if (!field(8).empty()) {
      rec.fermentation_hours = text::parse_double(field(8), where + " fermentation_hours");
    }
    validate(rec);
    if (!seen.insert(rec.batch_id).second) {
      fail(ErrorKind::Validation, where + ": duplicate batch id '" + rec.batch_id + "'");
    }
    out.push_back(std::move(rec));
  }
  return out;
}

void save_labels(const fs::path& path, std::span<const BatchRecord> records) {
  std::string out(kLabelHeader);
  out += '\n';
  for (const auto& r : records) {
    validate(r);
    out += r.batch_id + ',' + format_date(r.date) + ',' + r.region + ',' + r.country + ',';
    out += percent_text(r.fermentation_level) + ',';
    out += text::format_double(r.moisture) + ',';
    if (r.cadmium_below_detection) out += '<';
    out += text::format_double(r.cadmium) + ',';
    out += text::format_double(r.polyphenols) + ',';
    if (r.fermentation_hours) out += text::format_double(*r.fermentation_hours);
    out += '\n';
  }
  text::write_file(path, out);
}

double fermentation_ratio(long long premium, long long standard, long long total) {
  if (total <= 0) fail(ErrorKind::Domain, "fermentation ratio needs a positive bean count");
  if (premium < 0 || standard < 0) {
    fail(ErrorKind::Domain, "fermentation ratio counts must be non-negative");
  }
  if (premium + standard > total) {
    fail(ErrorKind::Domain, "premium + standard beans exceed the total count");
  }
  return static_cast<double>(premium + standard) / static_cast<double>(total);
}

bool operator==(const RangeData& a, const RangeData& b) {
  return same_grid(a.grid, b.grid) && a.scans == b.scans && a.white == b.white &&
         a.black == b.black && a.belt == b.belt;
}

const BatchRecord* Dataset::label(const std::string& batch_id) const {
  for (const auto& r : labels) {
    if (r.batch_id == batch_id) return &r;
  }
  return nullptr;
}

const BatchEntry* Dataset::batch(const std::string& batch_id) const {
  for (const auto& b : batches) {
    if (b.batch_id == batch_id) return &b;
  }
  return nullptr;
}

namespace {

std::string file_stem(std::size_t index, const std::string& batch_id) {
  std::string s = "b" + std::to_string(index) + "_";
  for (char c : batch_id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_';
    s += ok ? c : '_';
  }
  return s;
}

std::string generic(const fs::path& p) { return p.generic_string(); }

}  // namespace

DatasetManifest save_dataset(const Dataset& dataset, const fs::path& dir) {
  fs::create_directories(dir);
  DatasetManifest manifest;
  manifest.root = dir;
  manifest.labels = "labels.csv";
  save_labels(dir / manifest.labels, dataset.labels);

  std::set<std::string> ids;
  std::map<RangeTag, std::vector<std::pair<GridPtr, fs::path>>> grids;
  std::ostringstream m;
  m << "# cocoa spectral dataset\n";
  m << "format = cocoa-dataset\n";
  m << "version = 1\n";
  m << "labels = " << generic(manifest.labels) << "\n";

  for (std::size_t i = 0; i < dataset.batches.size(); ++i) {
    const auto& batch = dataset.batches[i];
    if (!ids.insert(batch.batch_id).second) {
      fail(ErrorKind::Integrity, "duplicate batch id '" + batch.batch_id + "'");
    }
    ManifestEntry entry{batch.batch_id, batch.region, {}};
    m << "\n[batch " << batch.batch_id << "]\n";
    m << "region = " << batch.region << "\n";
    const std::string stem = file_stem(i, batch.batch_id);
    for (const auto& [tag, data] : batch.ranges) {
      const std::string r(to_string(tag));
      ManifestRangeFiles files;
      auto& known = grids[tag];
      auto hit = std::find_if(known.begin(), known.end(),
                              [&](const auto& g) { return same_grid(g.first, data.grid); });
      if (hit != known.end()) {
        files.grid = hit->second;
      } else {
        files.grid = fs::path("grids") / (r + "_" + std::to_string(known.size()) + ".txt");
        save_grid(dir / files.grid, *data.grid);
        known.emplace_back(data.grid, files.grid);
      }
      files.scans = fs::path("scans") / (stem + "_" + r + ".csv");
      save_scans(dir / files.scans, data.scans);
      m << r << ".grid = " << generic(files.grid) << "\n";
      m << r << ".scans = " << generic(files.scans) << "\n";
      if (data.white) {
        files.white = fs::path("refs") / (stem + "_" + r + "_white.csv");
        save_scans(dir / *files.white, std::span(&*data.white, 1));
        m << r << ".white = " << generic(*files.white) << "\n";
      }
      if (data.black) {
        files.black = fs::path("refs") / (stem + "_" + r + "_black.csv");
        save_scans(dir / *files.black, std::span(&*data.black, 1));
        m << r << ".black = " << generic(*files.black) << "\n";
      }
      if (!data.belt.empty()) {
        files.belt = fs::path("refs") / (stem + "_" + r + "_belt.csv");
        save_scans(dir / *files.belt, data.belt);
        m << r << ".belt = " << generic(*files.belt) << "\n";
      }
      entry.ranges.emplace(tag, std::move(files));
    }
    manifest.entries.push_back(std::move(entry));
  }
  text::write_file(dir / kManifestName, m.str());
  return manifest;
}

DatasetManifest load_manifest(const fs::path& path) {
  const fs::path file = fs::is_directory(path) ? path / kManifestName : path;
  if (!fs::exists(file)) fail(ErrorKind::Integrity, "manifest '" + file.string() + "' not found");
  DatasetManifest manifest;
  manifest.root = file.parent_path();
  const auto lines = text::read_lines(file);
  bool have_format = false;
  bool have_version = false;
  std::set<std::string> ids;
  auto bad = [&](std::size_t line, const std::string& what) {
    fail(ErrorKind::Integrity, file.string() + " line " + std::to_string(line) + ": " + what);
  };
  auto check_exists = [&](std::size_t line, const fs::path& rel) {
    if (!fs::exists(manifest.root / rel)) bad(line, "referenced file '" + rel.string() + "' missing");
  };

  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t ln = i + 1;
    const auto line = text::trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.substr(0, 7) != "[batch ") bad(ln, "malformed section");
      std::string id(text::trim(line.substr(7, line.size() - 8)));
      if (id.empty()) bad(ln, "empty batch id");
      if (!ids.insert(id).second) bad(ln, "duplicate batch id '" + id + "'");
      manifest.entries.push_back(ManifestEntry{id, {}, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) bad(ln, "expected 'key = value'");
    const std::string key(text::trim(line.substr(0, eq)));
    const std::string value(text::trim(line.substr(eq + 1)));
    if (manifest.entries.empty()) {
      if (key == "format") {
        if (value != "cocoa-dataset") bad(ln, "unsupported format '" + value + "'");
        have_format = true;
      } else if (key == "version") {
        if (value != "1") bad(ln, "unsupported version '" + value + "'");
        have_version = true;
      } else if (key == "labels") {
        manifest.labels = value;
        check_exists(ln, manifest.labels);
      } else {
        bad(ln, "unknown key '" + key + "'");
      }
      continue;
    }
    auto& entry = manifest.entries.back();
    if (key == "region") {
      entry.region = value;
      continue;
    }
    const auto dot = key.find('.');
    if (dot == std::string::npos) bad(ln, "unknown key '" + key + "'");
    RangeTag tag{};
    try {
      tag = parse_range(key.substr(0, dot));
    } catch (const Error&) {
      bad(ln, "unknown range in key '" + key + "'");
    }
    const std::string what = key.substr(dot + 1);
    auto& files = entry.ranges[tag];
    const fs::path rel = value;
    check_exists(ln, rel);
    if (what == "grid") files.grid = rel;
    else if (what == "scans") files.scans = rel;
    else if (what == "white") files.white = rel;
    else if (what == "black") files.black = rel;
    else if (what == "belt") files.belt = rel;
    else bad(ln, "unknown key '" + key + "'");
  }
  if (!have_format || !have_version) {
    fail(ErrorKind::Integrity, file.string() + ": missing format/version header");
  }
  if (manifest.labels.empty()) fail(ErrorKind::Integrity, file.string() + ": no labels file");
  for (const auto& e : manifest.entries) {
    for (const auto& [tag, files] : e.ranges) {
      if (files.grid.empty() || files.scans.empty()) {
        fail(ErrorKind::Integrity, file.string() + ": batch " + e.batch_id + " range " +
                                       std::string(to_string(tag)) + " lacks grid or scans");
      }
    }
  }
  return manifest;
}

namespace {

Spectrum load_single(const fs::path& path, const GridPtr& grid, const std::string& batch_id) {
  auto rows = load_scans(path, grid, batch_id);
  if (rows.size() != 1) {
    fail(ErrorKind::Integrity, path.string() + ": expected exactly one reference row");
  }
  return std::move(rows.front());
}

}  // namespace

Dataset load_dataset(const fs::path& path) {
  const DatasetManifest manifest = load_manifest(path);
  Dataset ds;
  ds.labels = load_labels(manifest.root / manifest.labels);
  std::map<std::pair<RangeTag, std::string>, GridPtr> grids;
  for (const auto& e : manifest.entries) {
    if (!ds.label(e.batch_id)) {
      fail(ErrorKind::Integrity, "batch '" + e.batch_id + "' has no label row");
    }
    BatchEntry batch{e.batch_id, e.region, {}};
    for (const auto& [tag, files] : e.ranges) {
      auto& grid = grids[{tag, files.grid.generic_string()}];
      if (!grid) grid = std::make_shared<const WavelengthGrid>(load_grid(manifest.root / files.grid, tag));
      RangeData data;
      data.grid = grid;
      data.scans = load_scans(manifest.root / files.scans, grid, e.batch_id);
      if (files.white) data.white = load_single(manifest.root / *files.white, grid, e.batch_id);
      if (files.black) data.black = load_single(manifest.root / *files.black, grid, e.batch_id);
      if (files.belt) data.belt = load_scans(manifest.root / *files.belt, grid, e.batch_id);
      batch.ranges.emplace(tag, std::move(data));
    }
    ds.batches.push_back(std::move(batch));
  }
  return ds;
}

}  // namespace cocoa

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cocoa/background_filter.hpp"
#include "cocoa/calibration.hpp"
#include "cocoa/config.hpp"
#include "cocoa/decomposition.hpp"
#include "cocoa/evaluation.hpp"
#include "cocoa/pipeline.hpp"
#include "cocoa/regression.hpp"
#include "cocoa/resampling.hpp"
#include "cocoa/spectral_io.hpp"

namespace py = pybind11;
using namespace cocoa;

namespace {

Spectrum on_index_grid(const std::vector<double>& values, SpectrumKind kind) {
  std::vector<double> nm(values.size());
  for (std::size_t i = 0; i < nm.size(); ++i) nm[i] = static_cast<double>(i + 1);
  return {make_grid(std::move(nm), RangeTag::Vis), values, kind, {}};
}

py::tuple reflectance(const std::vector<double>& raw, const std::vector<double>& white,
                      const std::vector<double>& black) {
  const auto cal = CalibrationPair{on_index_grid(white, SpectrumKind::Intensity),
                                   on_index_grid(black, SpectrumKind::Intensity)};
  Spectrum r = on_index_grid(raw, SpectrumKind::Intensity);
  r.grid = cal.white.grid;
  const MaskedSpectrum m = compute_reflectance(r, cal);
  std::vector<bool> mask(m.mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = m.mask[i];
  return py::make_tuple(m.spectrum.values, mask);
}

Matrix bootstrap(const Matrix& spectra, std::size_t subset_size, std::size_t realizations,
                 std::uint64_t seed, bool with_replacement) {
  std::vector<double> nm(static_cast<std::size_t>(spectra.cols()));
  for (std::size_t i = 0; i < nm.size(); ++i) nm[i] = static_cast<double>(i + 1);
  const GridPtr grid = make_grid(std::move(nm), RangeTag::Vis);
  std::vector<Spectrum> rows;
  for (Eigen::Index i = 0; i < spectra.rows(); ++i) {
    Spectrum s{grid, {spectra.row(i).begin(), spectra.row(i).end()}, SpectrumKind::Reflectance, {}};
    s.meta.batch_id = "batch";
    s.meta.scan_index = i;
    rows.push_back(std::move(s));
  }
  const auto means = bootstrap_means(rows, {subset_size, realizations, seed, with_replacement});
  return to_matrix(means);
}

py::tuple run(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(args, out, err);
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Spectral cocoa quality pipeline";

  py::register_exception<Error>(m, "CocoaError");

  m.def("sam_angle",
        [](const std::vector<double>& a, const std::vector<double>& b) { return sam_angle(a, b); },
        py::arg("a"), py::arg("b"));
  m.def("select_top_n",
        [](const std::vector<double>& d, std::size_t n) {
          std::vector<std::int64_t> idx(d.size());
          for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<std::int64_t>(i);
          return select_top_n(d, idx, n);
        },
        py::arg("distances"), py::arg("n"));
  m.def("select_threshold",
        [](const std::vector<double>& d, double tau) { return select_threshold(d, tau); },
        py::arg("distances"), py::arg("tau"));
  m.def("fermentation_ratio", &fermentation_ratio, py::arg("premium"), py::arg("standard"),
        py::arg("total"));
  m.def("reflectance", &reflectance, py::arg("raw"), py::arg("white"), py::arg("black"));
  m.def("bootstrap_means", &bootstrap, py::arg("spectra"), py::arg("subset_size"),
        py::arg("realizations"), py::arg("seed"), py::arg("with_replacement") = false);

  py::class_<PcaModel>(m, "PcaModel")
      .def_readonly("mean", &PcaModel::mean)
      .def_readonly("components", &PcaModel::components)
      .def_readonly("explained_variance", &PcaModel::explained_variance)
      .def("project", [](const PcaModel& p, const Matrix& x) { return project(p, x); });
  m.def("fit_pca", &fit_pca, py::arg("x"), py::arg("k") = 2);

  m.def("r_squared", &r_squared, py::arg("y_true"), py::arg("y_pred"));
  m.def("mse", &mse, py::arg("y_true"), py::arg("y_pred"));

  py::class_<TrainedModel>(m, "TrainedModel")
      .def_property_readonly("family", [](const TrainedModel& t) { return std::string(family_name(t.spec())); })
      .def_property_readonly("spec", [](const TrainedModel& t) { return to_json(t.spec()).dump(); })
      .def_property_readonly("width", &TrainedModel::width)
      .def_property_readonly("warnings", &TrainedModel::warnings)
      .def("predict", &TrainedModel::predict, py::arg("x"));
  m.def("fit",
        [](const std::string& spec_json, const Matrix& x, const Vector& y) {
          return fit(model_spec_from_json(nlohmann::json::parse(spec_json)), x, y);
        },
        py::arg("spec"), py::arg("x"), py::arg("y"));

  m.def("validate_config",
        [](const std::string& path, bool check_paths) {
          std::vector<std::pair<std::string, std::string>> out;
          for (const auto& d : validate_config_file(path, check_paths)) out.emplace_back(d.field, d.message);
          return out;
        },
        py::arg("path"), py::arg("check_paths") = false);
  m.def("run", &run, py::arg("args"), "Runs the command line; returns (exit code, stdout, stderr).");
}

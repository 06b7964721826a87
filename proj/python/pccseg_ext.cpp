#include <array>
#include <optional>
#include <string>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pccseg/features.hpp"
#include "pccseg/image_io.hpp"
#include "pccseg/pipeline.hpp"

namespace py = pybind11;

namespace {

using ImageArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using LabelArray = py::array_t<pcc::Label, py::array::c_style | py::array::forcecast>;

pcc::ImageBuffer image_from_array(const ImageArray& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw py::value_error("image must be (height, width, 3) uint8");
  pcc::ImageBuffer img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::copy(a.data(), a.data() + a.size(), img.data.begin());
  return img;
}

ImageArray image_to_array(const pcc::ImageBuffer& img) {
  ImageArray out({img.height, img.width, 3});
  std::copy(img.data.begin(), img.data.end(), out.mutable_data());
  return out;
}

pcc::LabelMap labels_from_array(const LabelArray& a) {
  if (a.ndim() != 2) throw py::value_error("labels must be a (height, width) array");
  pcc::LabelMap m(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::copy(a.data(), a.data() + a.size(), m.labels.begin());
  return m;
}

LabelArray labels_to_array(const pcc::LabelMap& m) {
  LabelArray out({m.height, m.width});
  std::copy(m.labels.begin(), m.labels.end(), out.mutable_data());
  return out;
}

py::array_t<double> matrix_to_array(const pcc::FeatureMatrix& m) {
  py::array_t<double> out({m.rows, m.cols});
  std::copy(m.values.begin(), m.values.end(), out.mutable_data());
  return out;
}

py::dict segment_py(const ImageArray& image, const LabelArray& scribbles,
                    std::optional<std::vector<std::array<double, 2>>> polygon,
                    const std::string& mode, std::size_t max_pixels, std::uint64_t seed,
                    double delta_v, double p_grd, std::uint64_t max_ite,
                    std::uint64_t max_stop, double control_stop) {
  const pcc::ImageBuffer img = image_from_array(image);
  const pcc::LabelMap scr = labels_from_array(scribbles);
  std::optional<pcc::CutPolygon> poly;
  if (polygon) {
    poly.emplace();
    for (const auto& v : *polygon) poly->vertices.push_back({v[0], v[1]});
  }
  pcc::PipelineConfig cfg;
  cfg.mode = pcc::feature_mode_from_string(mode);
  cfg.max_pixels = max_pixels;
  cfg.engine.seed = seed;
  cfg.engine.delta_v = delta_v;
  cfg.engine.p_grd = p_grd;
  cfg.engine.max_ite = max_ite;
  cfg.engine.max_stop = max_stop;
  cfg.engine.control_stop = control_stop;

  pcc::SegmentationResult res;
  {
    py::gil_scoped_release release;
    res = pcc::segment(img, scr, poly, cfg);
  }
  py::array_t<double> fuzzy({static_cast<py::ssize_t>(res.num_classes),
                             static_cast<py::ssize_t>(img.height),
                             static_cast<py::ssize_t>(img.width)});
  double* dst = fuzzy.mutable_data();
  for (const auto& plane : res.fuzzy) dst = std::copy(plane.begin(), plane.end(), dst);

  py::dict out;
  out["labels"] = labels_to_array(res.labels);
  out["fuzzy"] = fuzzy;
  out["nodes"] = res.network_nodes;
  out["edges"] = res.network_edges;
  out["particles"] = res.particles;
  out["iterations"] = res.stats.iterations_executed;
  out["stop_reason"] = std::string(pcc::to_string(res.stats.stop_reason));
  out["seconds"] = res.stats.wall_seconds;
  out["mean_max_domination"] = res.stats.mean_max_domination;
  return out;
}

}  // namespace

PYBIND11_MODULE(_pccseg, m) {
  m.doc() = "Particle competition and cooperation image segmentation";

  py::register_exception<pcc::InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<pcc::IoError>(m, "IoError", PyExc_OSError);

  m.attr("UNLABELED") = pcc::kUnlabeled;
  m.attr("IGNORE") = pcc::kIgnore;

  m.def("load_image", [](const std::string& path) { return image_to_array(pcc::io::load_image(path)); },
        py::arg("path"));
  m.def("load_scribbles",
        [](const std::string& path, int num_classes) {
          return labels_to_array(pcc::io::load_scribbles(path, num_classes));
        },
        py::arg("path"), py::arg("num_classes") = 8);
  m.def("load_ground_truth",
        [](const std::string& path) { return labels_to_array(pcc::io::load_ground_truth(path)); },
        py::arg("path"));
  m.def("save_mask",
        [](const LabelArray& labels, const std::string& path, int num_classes) {
          pcc::io::save_mask(labels_from_array(labels), path, num_classes);
        },
        py::arg("labels"), py::arg("path"), py::arg("num_classes") = 0);

  m.def("otsu_threshold",
        [](const std::vector<std::uint64_t>& hist) {
          if (hist.size() != 256) throw py::value_error("histogram must have 256 bins");
          return pcc::otsu_threshold(std::span<const std::uint64_t, 256>(hist.data(), 256));
        },
        py::arg("histogram"));
  m.def("extract_features",
        [](const ImageArray& image, const std::string& mode) {
          return matrix_to_array(
              pcc::extract_features(image_from_array(image), pcc::feature_mode_from_string(mode)));
        },
        py::arg("image"), py::arg("mode") = "proposed");
  m.def("z_normalize",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> a) {
          if (a.ndim() != 2) throw py::value_error("expected a 2-D matrix");
          pcc::FeatureMatrix fm(static_cast<std::size_t>(a.shape(0)),
                                static_cast<std::size_t>(a.shape(1)));
          std::copy(a.data(), a.data() + a.size(), fm.values.begin());
          return matrix_to_array(pcc::z_normalize(std::move(fm)));
        },
        py::arg("matrix"));

  m.def("segment", &segment_py, py::arg("image"), py::arg("scribbles"),
        py::arg("polygon") = py::none(), py::arg("mode") = "proposed",
        py::arg("max_pixels") = 18'000, py::arg("seed") = 0, py::arg("delta_v") = 0.1,
        py::arg("p_grd") = 0.5, py::arg("max_ite") = 1'000'000, py::arg("max_stop") = 15'000,
        py::arg("control_stop") = 0.001,
        "Segment an (H, W, 3) uint8 image from (H, W) int32 scribbles (-1 = unlabeled).");
  m.def("error_rate",
        [](const LabelArray& predicted, const LabelArray& gt) {
          return pcc::error_rate(labels_from_array(predicted), labels_from_array(gt));
        },
        py::arg("predicted"), py::arg("ground_truth"));
}

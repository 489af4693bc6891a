#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "tspn/features/codebook.hpp"
#include "tspn/features/filter.hpp"
#include "tspn/features/image_io.hpp"
#include "tspn/learn/objective.hpp"
#include "tspn/learn/trainer.hpp"
#include "tspn/spn/evaluate.hpp"
#include "tspn/spn/serialize.hpp"
#include "tspn/spn/validate.hpp"
#include "tspn/structure/architecture.hpp"
#include "tspn/structure/confusion.hpp"
#include "tspn/structure/pipeline.hpp"

namespace py = pybind11;
using namespace tspn;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

ImageBuffer to_image(const Array& a) {
  if (a.ndim() != 2 && a.ndim() != 3) throw py::value_error("image must be H x W or H x W x C");
  const auto h = static_cast<std::size_t>(a.shape(0));
  const auto w = static_cast<std::size_t>(a.shape(1));
  const auto c = a.ndim() == 3 ? static_cast<std::size_t>(a.shape(2)) : 1;
  ImageBuffer img(h, w, c);
  std::copy(a.data(), a.data() + a.size(), img.pixels.begin());
  return img;
}

Array from_image(const ImageBuffer& img) {
  std::vector<py::ssize_t> shape{static_cast<py::ssize_t>(img.height), static_cast<py::ssize_t>(img.width)};
  if (img.channels > 1) shape.push_back(static_cast<py::ssize_t>(img.channels));
  Array out(shape);
  std::copy(img.pixels.begin(), img.pixels.end(), out.mutable_data());
  return out;
}

FeatureTensor to_features(const double* data, std::size_t grid, std::size_t depth) {
  FeatureTensor x(grid, depth);
  std::copy(data, data + x.values.size(), x.values.begin());
  return x;
}

FeatureTensor to_features(const Array& a) {
  if (a.ndim() != 3 || a.shape(0) != a.shape(1)) throw py::value_error("features must be G x G x K");
  return to_features(a.data(), static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(2)));
}

Array from_features(const FeatureTensor& x) {
  Array out({static_cast<py::ssize_t>(x.grid), static_cast<py::ssize_t>(x.grid), static_cast<py::ssize_t>(x.depth)});
  std::copy(x.values.begin(), x.values.end(), out.mutable_data());
  return out;
}

std::vector<Sample> to_samples(const Array& xs, const std::vector<std::uint32_t>& labels) {
  if (xs.ndim() != 4 || xs.shape(1) != xs.shape(2)) throw py::value_error("features must be N x G x G x K");
  if (static_cast<std::size_t>(xs.shape(0)) != labels.size()) throw py::value_error("one label per sample");
  const auto g = static_cast<std::size_t>(xs.shape(1));
  const auto k = static_cast<std::size_t>(xs.shape(3));
  std::vector<Sample> out;
  out.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out.push_back({to_features(xs.data() + i * g * g * k, g, k), labels[i]});
  return out;
}

py::list metrics_list(const std::vector<EpochMetrics>& metrics) {
  py::list out;
  for (const auto& m : metrics) {
    py::dict d;
    d["epoch"] = m.epoch;
    d["objective"] = m.objective;
    d["train_accuracy"] = m.train_accuracy;
    d["weight_norm"] = m.weight_norm;
    out.append(d);
  }
  return out;
}

ArchitectureSpec arch(std::uint32_t classes, std::uint32_t parts, std::uint32_t components, std::uint32_t grid,
                      std::uint32_t depth, std::uint64_t seed, double template_scale) {
  ArchitectureSpec s;
  s.classes = classes;
  s.parts = parts;
  s.components = components;
  s.grid = grid;
  s.depth = depth;
  s.seed = seed;
  s.template_scale = template_scale;
  return s;
}

TrainingConfig training(double alpha, std::uint32_t epochs, double beta, double eta, double lambda,
                        const std::string& inference, bool learn_templates, std::uint64_t seed) {
  TrainingConfig c;
  c.alpha = alpha;
  c.epochs = epochs;
  c.beta = beta;
  c.eta = eta;
  c.lambda = lambda;
  c.inference = parse_inference(inference);
  c.learn_templates = learn_templates;
  c.seed = seed;
  c.validate();
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sum-product network classifiers with max-margin training and tree-structured label grouping";

  py::register_exception<StructuralError>(m, "StructuralError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<ImageError>(m, "ImageError", PyExc_OSError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);

  py::class_<SpnGraph>(m, "Graph")
      .def("__len__", &SpnGraph::size)
      .def_property_readonly("classes", &SpnGraph::label_count)
      .def_property_readonly("grid", &SpnGraph::feature_grid)
      .def_property_readonly("depth", &SpnGraph::feature_depth)
      .def_property_readonly("sum_edges", &SpnGraph::sum_edge_count)
      .def("to_text", [](const SpnGraph& g) { return to_text(g); })
      .def_static("from_text", [](const std::string& s) { return from_text(s); })
      .def("save", [](const SpnGraph& g, const std::filesystem::path& p) { save_graph(p, g); })
      .def_static("load", [](const std::filesystem::path& p) { return load_graph(p); })
      .def("violations",
           [](const SpnGraph& g) {
             std::vector<std::string> out;
             for (const auto& v : validate(g).violations) {
               out.push_back(std::string(to_string(v.kind)) + " at node " + std::to_string(v.node.index) + ": " + v.detail);
             }
             return out;
           })
      .def("is_valid", [](const SpnGraph& g) { return validate(g).ok(); })
      .def("log_partition", [](const SpnGraph& g) { return partition(g); })
      .def("weight_squared_norm", [](const SpnGraph& g) { return weight_squared_norm(g); });

  m.def(
      "build_flat",
      [](std::uint32_t classes, std::uint32_t parts, std::uint32_t components, std::uint32_t grid,
         std::uint32_t depth, std::uint64_t seed, double template_scale) {
        return build_flat(arch(classes, parts, components, grid, depth, seed, template_scale));
      },
      py::arg("classes"), py::arg("parts"), py::arg("components"), py::arg("grid"), py::arg("depth"),
      py::arg("seed") = 0, py::arg("template_scale") = 0.1);
  m.def(
      "build_tspn",
      [](std::uint32_t classes, std::uint32_t parts, std::uint32_t components, std::uint32_t grid,
         std::uint32_t depth, std::vector<std::uint32_t> subset, std::uint64_t seed, double template_scale) {
        std::sort(subset.begin(), subset.end());
        return build_tspn(arch(classes, parts, components, grid, depth, seed, template_scale), {subset, 0});
      },
      py::arg("classes"), py::arg("parts"), py::arg("components"), py::arg("grid"), py::arg("depth"),
      py::arg("subset"), py::arg("seed") = 0, py::arg("template_scale") = 0.1);

  m.def(
      "class_scores",
      [](const SpnGraph& g, const Array& x, const std::string& inference) {
        return class_scores(g, to_features(x), parse_inference(inference));
      },
      py::arg("graph"), py::arg("features"), py::arg("inference") = "mixed",
      "log S[y | x] for every class");
  m.def(
      "predict",
      [](const SpnGraph& g, const Array& xs, const std::string& inference) {
        const auto samples = to_samples(xs, std::vector<std::uint32_t>(static_cast<std::size_t>(xs.shape(0)), 0));
        const Schedule s = make_schedule(g);
        std::vector<std::uint32_t> out;
        for (const auto& d : samples) out.push_back(predict(g, s, d.x, parse_inference(inference)));
        return out;
      },
      py::arg("graph"), py::arg("features"), py::arg("inference") = "mixed");
  m.def(
      "accuracy",
      [](const SpnGraph& g, const Array& xs, const std::vector<std::uint32_t>& y, const std::string& inference) {
        return accuracy(g, to_samples(xs, y), parse_inference(inference));
      },
      py::arg("graph"), py::arg("features"), py::arg("labels"), py::arg("inference") = "mixed");
  m.def(
      "confusion",
      [](const SpnGraph& g, const Array& xs, const std::vector<std::uint32_t>& y, const std::string& inference) {
        return confusion(g, to_samples(xs, y), parse_inference(inference)).counts;
      },
      py::arg("graph"), py::arg("features"), py::arg("labels"), py::arg("inference") = "mixed");
  m.def(
      "select_confused",
      [](const std::vector<std::vector<std::uint64_t>>& counts, std::optional<std::uint32_t> size) {
        ConfusionMatrix cm;
        cm.counts = counts;
        const ConfusionSubset s = select_confused(cm, size ? *size : default_subset_size(cm));
        return py::make_tuple(s.classes, s.score);
      },
      py::arg("counts"), py::arg("size") = py::none());

  m.def(
      "train",
      [](SpnGraph& g, const Array& xs, const std::vector<std::uint32_t>& y, const std::string& objective,
         double alpha, std::uint32_t epochs, double beta, double eta, double lambda, const std::string& inference,
         bool learn_templates, std::uint64_t seed) {
        const auto data = to_samples(xs, y);
        const TrainingConfig c = training(alpha, epochs, beta, eta, lambda, inference, learn_templates, seed);
        if (objective != "mm" && objective != "cll") throw py::value_error("objective is mm or cll");
        const Objective o = objective == "mm" ? Objective::MaxMargin : Objective::ConditionalLikelihood;
        std::vector<EpochMetrics> metrics;
        {
          py::gil_scoped_release release;
          metrics = train_with(o, g, data, c);
        }
        return metrics_list(metrics);
      },
      py::arg("graph"), py::arg("features"), py::arg("labels"), py::arg("objective") = "mm", py::arg("alpha") = 0.01,
      py::arg("epochs") = 30, py::arg("beta") = 0.0, py::arg("eta") = 2.0, py::arg("lam") = 1.0,
      py::arg("inference") = "mixed", py::arg("learn_templates") = true, py::arg("seed") = 0,
      "in-place SGD; returns per-epoch metrics with epoch 0 the starting model");

  m.def(
      "run_variant",
      [](const std::string& variant, const Array& xs, const std::vector<std::uint32_t>& y, std::uint32_t parts,
         std::uint32_t components, double alpha, std::uint32_t epochs, double beta,
         std::optional<std::uint32_t> subset_size, std::uint64_t seed, const std::string& inference) {
        const auto data = to_samples(xs, y);
        std::uint32_t classes = 0;
        for (auto l : y) classes = std::max(classes, l + 1);
        PipelineConfig pc;
        pc.arch = arch(classes, parts, components, static_cast<std::uint32_t>(xs.shape(1)),
                       static_cast<std::uint32_t>(xs.shape(3)), seed, 0.1);
        pc.training = training(alpha, epochs, beta, 2.0, 1.0, inference, true, seed);
        pc.subset_size = subset_size;
        PipelineResult r = run_variant(parse_variant(variant), data, pc);
        py::dict out;
        out["model"] = std::move(r.model);
        out["metrics"] = metrics_list(r.metrics);
        out["subset"] = r.subset ? py::cast(r.subset->classes) : py::none();
        out["notes"] = r.notes;
        return out;
      },
      py::arg("variant"), py::arg("features"), py::arg("labels"), py::arg("parts") = 10, py::arg("components") = 25,
      py::arg("alpha") = 0.01, py::arg("epochs") = 30, py::arg("beta") = 0.015, py::arg("subset_size") = py::none(),
      py::arg("seed") = 0, py::arg("inference") = "mixed",
      "spn | spn_mm | tspn | tspn_mm; returns model, metrics, subset and notes");

  m.def("read_image", [](const std::filesystem::path& p) { return from_image(read_image(p)); });
  m.def("write_png", [](const std::filesystem::path& p, const Array& a) { write_png(p, to_image(a)); });
  m.def(
      "filter_image",
      [](const Array& img, const std::string& kind, double d0, double gain_low, double gain_high, double sigma,
         int mask) {
        FilterSpec f;
        f.kind = parse_filter_kind(kind);
        f.d0 = d0;
        f.gain_low = gain_low;
        f.gain_high = gain_high;
        f.sigma = sigma;
        f.mask = mask;
        f.validate();
        return from_image(filter_image(to_image(img), f));
      },
      py::arg("image"), py::arg("kind"), py::arg("d0") = 0.0, py::arg("gain_low") = 0.07, py::arg("gain_high") = 1.0,
      py::arg("sigma") = 0.2, py::arg("mask") = 5);
  m.def("log_kernel", &log_kernel, py::arg("sigma"), py::arg("mask"));

  py::class_<Codebook>(m, "Codebook")
      .def_property_readonly("k", &Codebook::k)
      .def_property_readonly("dim", &Codebook::dim)
      .def_readonly("patch_side", &Codebook::patch_side)
      .def_readonly("channels", &Codebook::channels)
      .def_property_readonly("centroids", [](const Codebook& c) { return Eigen::MatrixXd(c.centroids); })
      .def("encode", [](const Codebook& c, const Array& img, std::uint32_t grid) {
        return from_features(encode(to_image(img), c, grid));
      }, py::arg("image"), py::arg("grid"))
      .def("save", [](const Codebook& c, const std::filesystem::path& p) { save_codebook(p, c); })
      .def_static("load", [](const std::filesystem::path& p) { return load_codebook(p); });

  m.def(
      "learn_codebook",
      [](const std::vector<Array>& images, std::uint32_t k, std::size_t patches, std::uint32_t patch_side,
         std::uint32_t rounds, double epsilon, std::uint64_t seed) {
        std::vector<ImageBuffer> imgs;
        for (const auto& a : images) imgs.push_back(to_image(a));
        CodebookConfig c;
        c.k = k;
        c.patches = patches;
        c.patch_side = patch_side;
        c.rounds = rounds;
        c.epsilon = epsilon;
        c.seed = seed;
        py::gil_scoped_release release;
        return learn_codebook(imgs, c);
      },
      py::arg("images"), py::arg("k") = 1600, py::arg("patches") = 400000, py::arg("patch_side") = 6,
      py::arg("rounds") = 50, py::arg("epsilon") = 0.01, py::arg("seed") = 0);
}

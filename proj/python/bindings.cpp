#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "metricdepth/config.hpp"
#include "metricdepth/error.hpp"
#include "metricdepth/experiment.hpp"
#include "metricdepth/grid.hpp"
#include "metricdepth/identify.hpp"
#include "metricdepth/metrics.hpp"
#include "metricdepth/regloss.hpp"
#include "metricdepth/rng.hpp"
#include "metricdepth/scene.hpp"
#include "metricdepth/verify.hpp"

namespace py = pybind11;
using namespace metricdepth;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using Mask = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

Grid1 to_grid1(const Array& a, const std::optional<Mask>& valid) {
  if (a.ndim() != 2) throw py::value_error("depth map must be 2-D");
  const auto h = static_cast<std::size_t>(a.shape(0)), w = static_cast<std::size_t>(a.shape(1));
  std::vector<double> v(a.data(), a.data() + a.size());
  if (!valid) return Grid1(h, w, std::move(v));
  if (valid->ndim() != 2 || valid->shape(0) != a.shape(0) || valid->shape(1) != a.shape(1)) {
    throw py::value_error("mask shape must match the depth map");
  }
  std::vector<std::uint8_t> m(valid->data(), valid->data() + valid->size());
  for (auto& x : m) x = x != 0;
  return Grid1(h, w, std::move(v), std::move(m));
}

Grid3 to_grid3(const Array& a) {
  if (a.ndim() != 3) throw py::value_error("feature map must be 3-D (H, W, C)");
  return Grid3(a.shape(0), a.shape(1), a.shape(2), std::vector<double>(a.data(), a.data() + a.size()));
}

Array from_grid3(const Grid3& g) {
  Array out({g.height(), g.width(), g.channels()});
  std::copy(g.data().begin(), g.data().end(), out.mutable_data());
  return out;
}

Array from_values(std::size_t h, std::size_t w, std::span<const double> v) {
  Array out({h, w});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

Mask mask_of(const Grid1& g) {
  Mask out({g.height(), g.width()});
  std::copy(g.valid_mask().begin(), g.valid_mask().end(), out.mutable_data());
  return out;
}

py::array_t<std::int16_t> labels_of(const IdentMap& m) {
  py::array_t<std::int16_t> out({m.height(), m.width()});
  auto* p = out.mutable_data();
  for (std::size_t i = 0; i < m.pixels(); ++i) p[i] = static_cast<std::int16_t>(m[i].subgroup());
  return out;
}

RegConfig make_reg(double r_p, std::optional<double> r_n, double margin,
                   const std::optional<std::vector<std::tuple<double, double, double>>>& ranges,
                   const std::string& reduction) {
  RegConfig c;
  c.r_p = r_p;
  if (ranges) {
    MultiRangeStrategy s;
    for (const auto& [lo, hi, m] : *ranges) s.ranges.push_back({lo, hi, m});
    c.strategy = s;
  } else {
    c.strategy = UniformStrategy{r_n.value_or(0.5), margin};
  }
  if (reduction == "sum") {
    c.loss_reduction = LossReduction::Sum;
  } else if (reduction == "mean") {
    c.loss_reduction = LossReduction::MeanOverContributing;
  } else {
    throw py::value_error("reduction must be 'mean' or 'sum'");
  }
  c.validate();
  return c;
}

py::dict metrics_dict(const MetricReport& r) {
  py::dict d;
  d["abs_rel"] = r.abs_rel;
  d["sq_rel"] = r.sq_rel;
  d["rmse"] = r.rmse;
  d["rmse_log"] = r.rmse_log;
  d["log10"] = r.log10;
  d["d1"] = r.delta1;
  d["d2"] = r.delta2;
  d["d3"] = r.delta3;
  d["n"] = r.pixel_count;
  return d;
}

}  // namespace

PYBIND11_MODULE(_metricdepth, m) {
  m.doc() = "Depth-aware feature regularization core";

  py::register_exception<Error>(m, "MetricDepthError", PyExc_RuntimeError);

  m.def("shift2d", [](const Array& a, std::int64_t sh, std::int64_t sw) -> py::object {
        if (a.ndim() == 2) {
          const Grid1 out = shift2d(to_grid1(a, std::nullopt), sh, sw);
          return from_values(out.height(), out.width(), out.values());
        }
        return from_grid3(shift2d(to_grid3(a), sh, sw));
      },
      py::arg("map"), py::arg("shift_h"), py::arg("shift_w"), "Circular 2-D roll of an (H, W) or (H, W, C) array.");

  m.def("gen_shift_seed", [](std::uint64_t seed, std::int64_t n) {
        SeedRng rng(seed);
        return gen_shift_seed(rng, n);
      },
      py::arg("seed"), py::arg("n"), "First shift drawn from a fresh generator seeded with `seed`.");

  m.def("differential_map", [](const Array& a, const Array& s, std::optional<Mask> va, std::optional<Mask> vs) {
        const Grid1 d = differential_map(to_grid1(a, va), to_grid1(s, vs));
        return py::make_tuple(from_values(d.height(), d.width(), d.values()), mask_of(d));
      },
      py::arg("d_a"), py::arg("d_s"), py::arg("valid_a") = py::none(), py::arg("valid_s") = py::none());

  m.def("identify_uniform", [](const Array& d, double r_p, double r_n, std::optional<Mask> valid) {
        return labels_of(identify_uniform(to_grid1(d, valid), r_p, r_n));
      },
      py::arg("diff"), py::arg("r_p"), py::arg("r_n"), py::arg("valid") = py::none(),
      "Labels: -1 ignored, 0 positive, 1 negative.");

  m.def("identify_multirange",
        [](const Array& d, double r_p, const std::vector<std::tuple<double, double, double>>& ranges,
           std::optional<Mask> valid) {
          MultiRangeStrategy s;
          for (const auto& [lo, hi, mg] : ranges) s.ranges.push_back({lo, hi, mg});
          return labels_of(identify_multirange(to_grid1(d, valid), r_p, s));
        },
        py::arg("diff"), py::arg("r_p"), py::arg("ranges"), py::arg("valid") = py::none(),
        "Labels: -1 ignored, 0 positive, j for range j.");

  m.def("reg_loss",
        [](const Array& f_a, const Array& d_a, const std::vector<std::pair<Array, Array>>& samples, double r_p,
           std::optional<double> r_n, double margin,
           std::optional<std::vector<std::tuple<double, double, double>>> ranges, const std::string& reduction,
           std::optional<Mask> valid_a) {
          const RegConfig c = make_reg(r_p, r_n, margin, ranges, reduction);
          SampleSet set;
          for (const auto& [f, d] : samples) set.pairs.push_back({to_grid3(f), to_grid1(d, std::nullopt), WithinShift{0, 0}});
          const LossResult r = reg_loss(to_grid3(f_a), to_grid1(d_a, valid_a), set, c);
          py::list gs;
          for (const auto& g : r.grad_samples) gs.append(from_grid3(g));
          py::dict out;
          out["total"] = r.total;
          out["contributing"] = r.contributing_count;
          out["ignored"] = r.ignored_count;
          out["grad_anchor"] = from_grid3(r.grad_anchor);
          out["grad_samples"] = gs;
          return out;
        },
        py::arg("f_a"), py::arg("d_a"), py::arg("samples"), py::arg("r_p") = 0.1, py::arg("r_n") = py::none(),
        py::arg("margin") = 4.0, py::arg("ranges") = py::none(), py::arg("reduction") = "mean",
        py::arg("valid_a") = py::none(),
        "Contrastive loss of an anchor against (feature, depth) samples. Pass `ranges` for the multi-range form.");

  m.def("si_loss", [](const Array& pred, const Array& gt, std::optional<Mask> valid) {
        const Grid1 p = to_grid1(pred, std::nullopt);
        const DepthLossResult r = si_loss(p, to_grid1(gt, valid), DepthLossParams{});
        return py::make_tuple(r.value, from_values(p.height(), p.width(), r.grad));
      },
      py::arg("pred"), py::arg("gt"), py::arg("valid") = py::none());

  m.def("compute_metrics", [](const Array& pred, const Array& gt, std::optional<Mask> valid) {
        return metrics_dict(compute_metrics(to_grid1(pred, std::nullopt), to_grid1(gt, valid)));
      },
      py::arg("pred"), py::arg("gt"), py::arg("valid") = py::none());

  m.def("gen_scene", [](std::uint64_t seed, std::size_t height, std::size_t width, double d_min, double d_max) {
        SceneParams p;
        p.height = height;
        p.width = width;
        p.d_min = d_min;
        p.d_max = d_max;
        const SyntheticScene s = gen_scene(seed, p);
        return py::make_tuple(from_grid3(s.image), from_values(s.depth.height(), s.depth.width(), s.depth.values()));
      },
      py::arg("seed"), py::arg("height") = 64, py::arg("width") = 64, py::arg("d_min") = 0.5,
      py::arg("d_max") = 10.0, "Returns (image (H, W, 3), depth (H, W)).");

  m.def("gradcheck", [](std::size_t trials, double tolerance, std::uint64_t seed) {
        GradcheckOptions o;
        o.trials = trials;
        o.tolerance = tolerance;
        o.model_tolerance = 10.0 * tolerance;
        o.seed = seed;
        const VerifyReport r = run_gradcheck(o);
        return py::make_tuple(r.passed(), r.text());
      },
      py::arg("trials") = 100, py::arg("tolerance") = 1e-5, py::arg("seed") = 1);

  m.def("oracle", [](std::size_t trials, double tolerance, std::uint64_t seed) {
        OracleOptions o;
        o.trials = trials;
        o.tolerance = tolerance;
        o.seed = seed;
        const VerifyReport r = run_oracle(o);
        return py::make_tuple(r.passed(), r.text());
      },
      py::arg("trials") = 100, py::arg("tolerance") = 1e-12, py::arg("seed") = 1);

  m.def("ablate", [](const std::string& config_text, const std::string& out) {
        const ExperimentConfig c = parse_experiment_config(config_text);
        py::gil_scoped_release release;
        return run_ablation(c, out, nullptr).json_text();
      },
      py::arg("config_text"), py::arg("out"), "Runs an ablation from JSON config text; returns the summary JSON text.");
}

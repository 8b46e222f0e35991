#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "gazecrop/commands.hpp"

namespace py = pybind11;
using namespace gazecrop;

namespace {

py::array_t<double> grid_to_array(const Grid& g) {
  py::array_t<double> out({g.rows(), g.cols()});
  std::copy(g.values().begin(), g.values().end(), out.mutable_data());
  return out;
}

Grid array_to_grid(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw Error(ErrorCode::kBadTarget, "expected a 2-D array");
  Grid g(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), g.values().begin());
  return g;
}

GazeTrace make_py_trace(const std::vector<std::vector<double>>& points, int width, int height) {
  std::vector<GazePoint> pts;
  for (const auto& p : points) {
    if (p.size() != 2 && p.size() != 3) throw Error(ErrorCode::kValidationError, "point must be (x, y[, t])");
    GazePoint gp{p[0], p[1], std::nullopt};
    if (p.size() == 3) gp.t = p[2];
    pts.push_back(gp);
  }
  return GazeTrace(std::move(pts), width, height);
}

py::dict box_dict(const RoiBox& b) {
  py::dict d;
  d["x0"] = b.x0;
  d["y0"] = b.y0;
  d["x1"] = b.x1;
  d["y1"] = b.y1;
  d["covered_mass"] = b.covered_mass;
  d["rho"] = b.rho;
  return d;
}

RoiBox box_from(py::handle h) {
  const py::dict d = py::reinterpret_borrow<py::dict>(h);
  RoiBox b;
  b.x0 = d["x0"].cast<int>();
  b.y0 = d["y0"].cast<int>();
  b.x1 = d["x1"].cast<int>();
  b.y1 = d["y1"].cast<int>();
  if (d.contains("covered_mass")) b.covered_mass = d["covered_mass"].cast<double>();
  if (d.contains("rho")) b.rho = d["rho"].cast<double>();
  return b;
}

py::object json_to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Gaze heatmaps, ROI selection, token cost and judge arithmetic";

  static PyObject* error_type = PyErr_NewException("gazecrop._core.GazecropError", PyExc_RuntimeError, nullptr);
  m.attr("GazecropError") = py::handle(error_type);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::handle(error_type)(e.what());
      exc.attr("code") = std::string(error_code_name(e.code()));
      PyErr_SetObject(error_type, exc.ptr());
    }
  });

  // heatmaps
  m.def("default_sigma_px", &default_sigma_px, py::arg("width"), py::arg("height"));
  m.def("kernel_radius", &kernel_radius, py::arg("sigma_px"));
  m.def(
      "build_heatmap",
      [](const std::vector<std::vector<double>>& points, int width, int height, std::optional<double> sigma) {
        const GazeTrace trace = make_py_trace(points, width, height);
        return grid_to_array(build_heatmap(trace, sigma.value_or(default_sigma_px(width, height))).values());
      },
      py::arg("points"), py::arg("width"), py::arg("height"), py::arg("sigma_px") = py::none(),
      "Normalized heatmap of shape (height, width) from (x, y[, t]) points.");
  m.def(
      "gaussian_smooth",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& raw, double sigma) {
        return grid_to_array(gaussian_smooth(array_to_grid(raw), sigma));
      },
      py::arg("raw"), py::arg("sigma_px"));

  // roi
  m.def(
      "support_mass_box",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& heatmap, double rho) {
        return box_dict(support_mass_box(GazeHeatmap(array_to_grid(heatmap), 0.0), rho));
      },
      py::arg("heatmap"), py::arg("rho"));
  m.def(
      "support_set",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& heatmap, double rho) {
        std::vector<std::pair<int, int>> out;
        for (const PixelCoord& p : support_set(GazeHeatmap(array_to_grid(heatmap), 0.0), rho)) {
          out.emplace_back(p.x, p.y);
        }
        return out;
      },
      py::arg("heatmap"), py::arg("rho"), "Pixels (x, y) in ranking order.");
  m.def(
      "enforce_min_size",
      [](py::dict box, int min_width, int min_height, int width, int height) {
        return box_dict(enforce_min_size(box_from(box), {min_width, min_height}, width, height));
      },
      py::arg("box"), py::arg("min_width"), py::arg("min_height"), py::arg("image_width"),
      py::arg("image_height"));

  // cost
  m.def(
      "count_visual_tokens",
      [](const std::vector<std::pair<int, int>>& views, int pitch) {
        std::vector<ViewDims> dims;
        for (auto [w, h] : views) dims.push_back({w, h});
        TokenGeometry g;
        g.token_pitch = pitch;
        return count_visual_tokens(dims, g);
      },
      py::arg("views"), py::arg("pitch") = kDefaultTokenPitch, "views is a list of (width, height).");
  m.def(
      "estimate_flops",
      [](double total_tokens, const std::string& profile) {
        return estimate_flops(total_tokens, resolve_profile(profile));
      },
      py::arg("total_tokens"), py::arg("profile") = "qwen25vl-3b-paper");
  m.def(
      "calibrate",
      [](const std::vector<std::pair<double, double>>& rows) {
        std::vector<CalibrationRow> r;
        for (auto [t, f] : rows) r.push_back({t, f});
        const AffineFit fit = calibrate(r);
        return std::make_pair(fit.intercept, fit.slope);
      },
      py::arg("rows"), "rows of (total_tokens, flops_g); returns (intercept, slope).");
  m.def("reduction_pct", &reduction_pct, py::arg("candidate"), py::arg("baseline"));
  m.def("format_change", &format_change, py::arg("reduction_percent"));
  m.def("builtin_profile_names", &builtin_profile_names);

  // evaluation
  m.def(
      "weighted_total",
      [](double coverage, double accuracy, double details, double fluency) {
        return weighted_total({coverage, accuracy, details, fluency});
      },
      py::arg("coverage"), py::arg("accuracy"), py::arg("details"), py::arg("fluency"));
  m.def(
      "aggregate_dual_order",
      [](const std::string& ab, const std::string& ba) {
        auto parse = [](const std::string& s) {
          if (s == "A") return OrderResult::kAWins;
          if (s == "B") return OrderResult::kBWins;
          if (s == "TIE") return OrderResult::kTie;
          throw Error(ErrorCode::kUsage, "order result must be A, B or TIE");
        };
        return std::string(verdict_name(aggregate_dual_order(parse(ab), parse(ba))));
      },
      py::arg("order_ab"), py::arg("order_ba"), "Orders are 'A', 'B' or 'TIE'; returns win/tie/loss.");
  m.def("win_rate", &win_rate, py::arg("wins"), py::arg("ties"), py::arg("losses"));

  // dataset and commands
  m.def(
      "load_manifest",
      [](const std::filesystem::path& path, bool strict) {
        const Manifest man = load_manifest(path, {strict});
        py::list samples;
        for (const Sample& s : man.samples) {
          py::dict d;
          d["sample_id"] = s.sample_id;
          d["image_path"] = resolve_image_path(man, s).string();
          d["question"] = s.question;
          d["width"] = s.image_width;
          d["height"] = s.image_height;
          d["num_points"] = s.gaze_points.size();
          samples.append(d);
        }
        py::dict out;
        out["source_name"] = man.source_name;
        out["version"] = man.version;
        out["samples"] = samples;
        out["rejected"] = man.rejected.size();
        return out;
      },
      py::arg("path"), py::arg("strict") = true);
  m.def(
      "sweep",
      [](const std::filesystem::path& manifest, const std::filesystem::path& out, const std::vector<double>& rhos,
         const std::string& mode, int jobs, const std::string& profile) {
        RunConfig c;
        c.manifest_path = manifest;
        c.out_dir = out;
        c.rhos = rhos;
        c.mode = parse_input_mode(mode);
        c.jobs = jobs;
        c.profile_name = profile;
        SweepTable t;
        {
          py::gil_scoped_release release;
          t = cmd_sweep(c);
        }
        return json_to_py(to_json(t));
      },
      py::arg("manifest"), py::arg("out"), py::arg("rhos"), py::arg("mode") = "two_scale", py::arg("jobs") = 1,
      py::arg("profile") = "qwen25vl-3b-paper", "Runs a sweep and returns the sweep.json content.");
  m.def(
      "prepare",
      [](const std::filesystem::path& manifest, const std::filesystem::path& out, std::optional<double> rho,
         const std::string& mode, int jobs) {
        RunConfig c;
        c.manifest_path = manifest;
        c.out_dir = out;
        if (rho) c.rhos = {*rho};
        c.mode = parse_input_mode(mode);
        c.jobs = jobs;
        PrepareOutcome o;
        {
          py::gil_scoped_release release;
          o = cmd_prepare(c);
        }
        py::list rows;
        for (const ResultRow& r : o.rows) rows.append(json_to_py(to_json(r)));
        return py::make_tuple(rows, o.skips.size());
      },
      py::arg("manifest"), py::arg("out"), py::arg("rho") = py::none(), py::arg("mode") = "two_scale",
      py::arg("jobs") = 1, "Returns (rows, skipped_count).");
  m.def(
      "score_mock",
      [](const std::filesystem::path& manifest, const std::filesystem::path& a, const std::filesystem::path& b,
         const std::filesystem::path& out, std::uint64_t seed) {
        ScoreConfig sc;
        sc.manifest_path = manifest;
        sc.results_a = a;
        sc.results_b = b;
        sc.out_dir = out;
        sc.seed = seed;
        DeterministicMockJudge judge(DeterministicMockJudge::Rule::kOverlap, seed);
        ScoreOutcome o;
        {
          py::gil_scoped_release release;
          o = cmd_score(sc, judge, "mock:overlap");
        }
        return json_to_py(to_json(o, a.stem().string(), "mock:overlap"));
      },
      py::arg("manifest"), py::arg("results_a"), py::arg("results_b"), py::arg("out"), py::arg("seed") = 0,
      "Scores two answer files with the offline overlap judge; returns the summary.");
  m.def(
      "report",
      [](const std::filesystem::path& sweep, const std::vector<std::filesystem::path>& scores,
         const std::filesystem::path& out) { return cmd_report(sweep, scores, out); },
      py::arg("sweep"), py::arg("scores"), py::arg("out"));
}

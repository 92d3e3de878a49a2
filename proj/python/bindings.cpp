#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "scenebench/cli.hpp"
#include "scenebench/eval.hpp"
#include "scenebench/io.hpp"
#include "scenebench/layout.hpp"
#include "scenebench/manifest.hpp"
#include "scenebench/metrics.hpp"
#include "scenebench/registration.hpp"
#include "scenebench/sca_flow.hpp"
#include "scenebench/view_space.hpp"

namespace py = pybind11;
using namespace scenebench;

namespace {

using Points = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

PointCloud to_cloud(const Eigen::Ref<const Points>& a) {
  PointCloud c;
  c.points.reserve(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) c.points.emplace_back(a(i, 0), a(i, 1), a(i, 2));
  return c;
}

Points to_array(const PointCloud& c) {
  Points a(c.size(), 3);
  for (std::size_t i = 0; i < c.size(); ++i) a.row(i) = c.points[i].transpose();
  return a;
}

CameraPose camera(const Vec3& position, const Vec3& look_at, const Vec3& up) { return {position, look_at, up}; }

IcpConfig icp_config(bool estimate_scale, double voxel_size, int total_iterations, int up_axis, std::uint64_t seed) {
  IcpConfig cfg;
  cfg.estimate_scale = estimate_scale;
  cfg.voxel_size = voxel_size;
  cfg.total_iterations = total_iterations;
  cfg.up_axis = up_axis;
  cfg.rng_seed = seed;
  return cfg;
}

py::dict result_dict(const IcpResult& r) {
  py::dict d;
  d["transform"] = r.raw_transform().matrix();
  d["normalized_transform"] = r.transform.matrix();
  d["fitness"] = r.fitness;
  d["rmse"] = r.rmse;
  d["provenance"] = std::string(provenance_name(r.provenance));
  d["branch"] = std::string(branch_name(r.selected_branch));
  d["iterations"] = r.iterations;
  d["history"] = r.history;
  d["failure"] = r.failure;
  return d;
}

}  // namespace

PYBIND11_MODULE(_scenebench, m) {
  m.doc() = "scene generation, registration and evaluation kernels";

  py::register_exception<Error>(m, "ScenebenchError", PyExc_RuntimeError);

  // metrics
  m.def(
      "chamfer_distance",
      [](const Eigen::Ref<const Points>& a, const Eigen::Ref<const Points>& b, bool squared) {
        return chamfer_distance(to_cloud(a), to_cloud(b), squared);
      },
      py::arg("a"), py::arg("b"), py::arg("squared") = false);
  m.def(
      "f_score",
      [](const Eigen::Ref<const Points>& pred, const Eigen::Ref<const Points>& gt, double tau) {
        return f_score(to_cloud(pred), to_cloud(gt), tau);
      },
      py::arg("pred"), py::arg("gt"), py::arg("tau") = kDefaultTau);
  m.def(
      "precision_recall",
      [](const Eigen::Ref<const Points>& pred, const Eigen::Ref<const Points>& gt, double tau) {
        const PrecisionRecall pr = precision_recall(to_cloud(pred), to_cloud(gt), tau);
        return py::make_tuple(pr.precision, pr.recall, pr.fscore);
      },
      py::arg("pred"), py::arg("gt"), py::arg("tau") = kDefaultTau);
  m.def(
      "aabb_iou",
      [](const Vec3& amin, const Vec3& amax, const Vec3& bmin, const Vec3& bmax) {
        return aabb_iou({amin, amax}, {bmin, bmax});
      },
      py::arg("a_min"), py::arg("a_max"), py::arg("b_min"), py::arg("b_max"));
  m.def(
      "hungarian",
      [](const Eigen::MatrixXd& cost) {
        std::vector<std::vector<double>> rows(cost.rows(), std::vector<double>(cost.cols()));
        for (Eigen::Index r = 0; r < cost.rows(); ++r)
          for (Eigen::Index c = 0; c < cost.cols(); ++c) rows[r][c] = cost(r, c);
        return hungarian(rows);
      },
      py::arg("cost"));
  m.def(
      "trimmed_chamfer",
      [](const Eigen::Ref<const Points>& a, const Eigen::Ref<const Points>& b, double trim, std::size_t cap,
         std::uint64_t seed) { return trimmed_symmetric_chamfer(to_cloud(a), to_cloud(b), trim, cap, seed); },
      py::arg("a"), py::arg("b"), py::arg("trim_ratio") = 0.2, py::arg("sample_cap") = 2000, py::arg("seed") = 0);

  // registration
  m.def(
      "robust_icp",
      [](const Eigen::Ref<const Points>& source, const Eigen::Ref<const Points>& target, bool estimate_scale,
         double voxel_size, int total_iterations, int up_axis, std::uint64_t seed) {
        const PointCloud s = to_cloud(source), t = to_cloud(target);
        IcpResult r;
        {
          py::gil_scoped_release release;
          r = robust_icp(s, t, icp_config(estimate_scale, voxel_size, total_iterations, up_axis, seed));
        }
        return result_dict(r);
      },
      py::arg("source"), py::arg("target"), py::arg("estimate_scale") = false, py::arg("voxel_size") = 0.03,
      py::arg("total_iterations") = 60, py::arg("up_axis") = 1, py::arg("seed") = 0);
  m.def(
      "dual_normalization_align",
      [](const Eigen::Ref<const Points>& pred, const Eigen::Ref<const Points>& gt, bool estimate_scale,
         std::pair<double, double> native_range, double tau, std::uint64_t seed) {
        const DualAlignment d = dual_normalization_align(to_cloud(pred), to_cloud(gt),
                                                         icp_config(estimate_scale, 0.03, 60, 1, seed), native_range, tau);
        py::dict out = result_dict(d.result);
        out["transform"] = (d.gt_to_eval.inverse() * d.pred_to_eval).matrix();
        out["pred_to_eval"] = d.pred_to_eval.matrix();
        out["gt_to_eval"] = d.gt_to_eval.matrix();
        out["fscore_minmax"] = d.fscore_minmax;
        out["fscore_aabb"] = d.fscore_aabb;
        return out;
      },
      py::arg("pred"), py::arg("gt"), py::arg("estimate_scale") = false,
      py::arg("native_range") = std::pair<double, double>{-0.5, 0.5}, py::arg("tau") = kDefaultTau,
      py::arg("seed") = 0);
  m.def(
      "voxel_downsample",
      [](const Eigen::Ref<const Points>& points, double voxel) { return to_array(voxel_downsample(to_cloud(points), voxel)); },
      py::arg("points"), py::arg("voxel_size"));

  // view space
  m.def(
      "to_view_centric",
      [](const Eigen::Ref<const Points>& points, const Vec3& position, const Vec3& look_at, const Vec3& up) {
        PointCloud c = to_cloud(points);
        c.space = SpaceTag::canonical;
        return to_array(to_view_centric(c, camera(position, look_at, up)));
      },
      py::arg("points"), py::arg("position"), py::arg("look_at"), py::arg("up") = Vec3(Vec3::UnitY()));
  m.def(
      "to_canonical",
      [](const Eigen::Ref<const Points>& points, const Vec3& position, const Vec3& look_at, const Vec3& up) {
        PointCloud c = to_cloud(points);
        c.space = SpaceTag::view_centric;
        return to_array(to_canonical(c, camera(position, look_at, up)));
      },
      py::arg("points"), py::arg("position"), py::arg("look_at"), py::arg("up") = Vec3(Vec3::UnitY()));
  m.def(
      "evaluate_view",
      [](const std::vector<Points>& instances, const Vec3& position, const Vec3& look_at, const Vec3& up,
         int resolution, double threshold) {
        std::vector<PointCloud> clouds;
        for (const auto& a : instances) clouds.push_back(to_cloud(a));
        RasterConfig raster;
        raster.resolution = resolution;
        const ViewDecision d = evaluate_view(clouds, camera(position, look_at, up), raster, threshold);
        return py::make_tuple(d.keep, d.fractions);
      },
      py::arg("instances"), py::arg("position"), py::arg("look_at"), py::arg("up") = Vec3(Vec3::UnitY()),
      py::arg("resolution") = 256, py::arg("threshold") = 0.0);

  // scene context attention and flow loss
  m.def("softmax", [](const sca::Vector& z) { return sca::softmax(z); }, py::arg("z"));
  m.def("duplicated_softmax", &sca::duplicated_softmax, py::arg("z"));
  m.def("self_attention", &sca::self_attention, py::arg("q"), py::arg("k"), py::arg("v"));
  m.def(
      "scene_context_attention",
      [](const sca::Matrix& q, const sca::Matrix& ki, const sca::Matrix& ks, const sca::Matrix& vi,
         const sca::Matrix& vs) { return sca::scene_context_attention({q, ki, ks, vi, vs}); },
      py::arg("q_instance"), py::arg("k_instance"), py::arg("k_scene"), py::arg("v_instance"), py::arg("v_scene"));
  m.def("cfm_loss", &sca::cfm_loss, py::arg("v_pred"), py::arg("x0"), py::arg("epsilon"));
  m.def("cfm_loss_gradient", &sca::cfm_loss_gradient, py::arg("v_pred"), py::arg("x0"), py::arg("epsilon"));
  m.def(
      "verify_sca",
      [](int trials, std::uint64_t seed) {
        const sca::VerificationReport r = sca::verify_equivalence(trials, seed);
        py::dict d;
        d["trials"] = r.trials;
        d["max_equivalence_deviation"] = r.max_equivalence_deviation;
        d["max_duplicate_deviation"] = r.max_duplicate_deviation;
        d["passed"] = r.passed();
        return d;
      },
      py::arg("trials") = 1000, py::arg("seed") = 0);

  // scenes, files and evaluation
  m.def(
      "synthesize_manifest",
      [](const std::filesystem::path& assets, const std::filesystem::path& manifest_path, std::uint64_t seed,
         std::size_t min_objects, std::size_t max_objects) {
        SynthConfig cfg;
        cfg.min_objects = cfg.placement.min_instances = min_objects;
        cfg.max_objects = cfg.placement.max_instances = max_objects;
        const LayoutScene scene = synthesize_scene(load_assets(assets), cfg, seed);
        if (manifest_path.has_parent_path()) std::filesystem::create_directories(manifest_path.parent_path());
        save_manifest(manifest_path, manifest_from_scene(scene, manifest_path.parent_path()));
        return scene.instances.size();
      },
      py::arg("assets_dir"), py::arg("manifest_path"), py::arg("seed") = 0, py::arg("min_objects") = kMinSceneObjects,
      py::arg("max_objects") = kMaxSceneObjects);
  m.def(
      "load_manifest",
      [](const std::filesystem::path& path) { return manifest_to_string(load_manifest(path)); }, py::arg("path"),
      "Validates a manifest and returns its canonical text.");
  m.def(
      "read_points",
      [](const std::filesystem::path& path, std::size_t samples, std::uint64_t seed) {
        return to_array(load_instance_cloud(path, samples, seed));
      },
      py::arg("path"), py::arg("samples") = kMetricSamplesPerInstance, py::arg("seed") = 0);
  m.def(
      "run_eval",
      [](const std::filesystem::path& pred, const std::filesystem::path& gt, const std::filesystem::path& out,
         double tau, const std::string& matching, std::size_t workers, std::size_t samples, std::uint64_t seed) {
        EvalJob job;
        job.pred_dir = pred;
        job.gt_dir = gt;
        job.output = out;
        job.tau = tau;
        job.matching = parse_matching_mode(matching);
        job.workers = workers;
        job.samples_per_instance = samples;
        job.seed = seed;
        job.icp.rng_seed = seed;
        EvalSummary s;
        {
          py::gil_scoped_release release;
          s = run_eval(job);
          write_reports(s, job);
        }
        return report_csv(s);
      },
      py::arg("pred_dir"), py::arg("gt_dir"), py::arg("out"), py::arg("tau") = kDefaultTau,
      py::arg("matching") = "by_index", py::arg("workers") = 1, py::arg("samples") = kMetricSamplesPerInstance,
      py::arg("seed") = 0);
  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));
}

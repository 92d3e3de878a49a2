#include <gtest/gtest.h>

#include <fstream>
#include <functional>
#include <sstream>

#include "scenebench/eval.hpp"
#include "scenebench/io.hpp"
#include "temp_dir.hpp"

namespace scenebench {
namespace {

using fixtures::TempDir;

SynthConfig small_scenes() {
  SynthConfig c;
  c.max_objects = 4;
  c.placement.max_instances = 4;
  return c;
}

EvalJob base_job(const TempDir& tmp) {
  EvalJob job;
  job.pred_dir = tmp / "pred";
  job.gt_dir = tmp / "gt";
  job.output = tmp / "out" / "report.json";
  job.samples_per_instance = 2000;
  return job;
}

// Copies every scene of `from` into `to`, applying `t` to each mesh and
// renaming instance k to rename(k, count).
void derive_pred(const fs::path& from, const fs::path& to, const SimilarityTransform& t,
                 const std::function<std::size_t(std::size_t, std::size_t)>& rename) {
  for (const auto& scene : list_scenes(from)) {
    fs::create_directories(to / scene);
    const auto files = list_instances(from / scene);
    for (std::size_t k = 0; k < files.size(); ++k) {
      const TriangleMesh mesh = transform_mesh(to_mesh(read_shape(files[k])), t);
      write_ply(to / scene / ("p" + std::to_string(rename(k, files.size())) + ".ply"), from_mesh(mesh));
    }
  }
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

TEST(Eval, PerfectPredictionGivesTheIdealRow) {
  TempDir tmp;
  fixtures::write_eval_scenes(tmp / "gt", 3, small_scenes(), 100);
  fs::copy(tmp / "gt", tmp / "pred", fs::copy_options::recursive);
  const EvalJob job = base_job(tmp);
  const EvalSummary s = run_eval(job);
  ASSERT_EQ(s.scored, 3u);
  ASSERT_TRUE(s.mean);
  EXPECT_EQ(quantize_report_value(s.mean->cd_scene), 0.0);
  EXPECT_EQ(quantize_report_value(s.mean->fscore_scene), 100.0);
  EXPECT_EQ(quantize_report_value(s.mean->cd_object), 0.0);
  EXPECT_EQ(quantize_report_value(s.mean->fscore_object), 100.0);
  EXPECT_EQ(quantize_report_value(s.mean->iou_b), 1.0);
  const std::string csv = report_csv(s);
  EXPECT_NE(csv.find("mean,0,100,0,100,1,3/3\n"), std::string::npos) << csv;
  EXPECT_EQ(csv.rfind("scene,CD-S,F-Score-S,CD-O,F-Score-O,IoU-B,status\n", 0), 0u);
}

TEST(Eval, ReportsAreByteIdenticalAcrossRunsAndWorkers) {
  TempDir tmp;
  fixtures::write_eval_scenes(tmp / "gt", 4, small_scenes(), 200);
  derive_pred(tmp / "gt", tmp / "pred", {axis_rotation(1, 0.3), Vec3(0.1, 0.0, -0.05), 1.0},
              [](std::size_t k, std::size_t) { return k; });
  EvalJob job = base_job(tmp);
  job.workers = 1;
  const EvalSummary a = run_eval(job);
  write_reports(a, job);
  const std::string json1 = slurp(job.output);
  const std::string csv1 = slurp(tmp / "out" / "report.csv");
  job.workers = 3;
  const EvalSummary b = run_eval(job);
  EXPECT_EQ(report_json(b, job), json1);
  EXPECT_EQ(report_csv(b), csv1);
  job.workers = 1;
  EXPECT_EQ(report_json(run_eval(job), job), json1);
  EXPECT_NE(json1.find("\"schema_version\": 1"), std::string::npos);
  EXPECT_NE(json1.find("\"cd_convention\": \"mean_nn_distance\""), std::string::npos);
}

TEST(Eval, CorruptSceneIsRecordedNotFatal) {
  TempDir tmp;
  fixtures::write_eval_scenes(tmp / "gt", 5, small_scenes(), 300);
  fs::copy(tmp / "gt", tmp / "pred", fs::copy_options::recursive);
  {
    std::ofstream bad(tmp / "pred" / "scene_2" / "inst_00.ply", std::ios::binary | std::ios::trunc);
    bad << "ply\nformat ascii 1.0\nelement vertex 5\n";
  }
  EvalJob job = base_job(tmp);
  job.workers = 2;
  const EvalSummary s = run_eval(job);
  EXPECT_EQ(s.scored, 4u);
  EXPECT_EQ(s.failed, 1u);
  EXPECT_TRUE(s.partial());
  EXPECT_FALSE(s.scenes[2].ok());
  EXPECT_EQ(s.scenes[2].error_code, "IoError");
  const std::string csv = report_csv(s);
  EXPECT_NE(csv.find("scene_2,,,,,,failed:IoError\n"), std::string::npos) << csv;
  EXPECT_NE(csv.find(",4/5\n"), std::string::npos) << csv;
}

TEST(Eval, HungarianUndoesAFilePermutation) {
  TempDir tmp;
  fixtures::write_eval_scenes(tmp / "gt", 3, small_scenes(), 400);
  const SimilarityTransform t{axis_rotation(1, -0.2), Vec3(0.05, 0.0, 0.1), 1.0};
  derive_pred(tmp / "gt", tmp / "pred", t, [](std::size_t k, std::size_t) { return k; });
  derive_pred(tmp / "gt", tmp / "shuffled", t, [](std::size_t k, std::size_t n) { return n - 1 - k; });

  EvalJob ordered = base_job(tmp);
  const EvalSummary by_index = run_eval(ordered);
  EvalJob shuffled = ordered;
  shuffled.pred_dir = tmp / "shuffled";
  shuffled.matching = MatchingMode::hungarian_iou;
  const EvalSummary hung = run_eval(shuffled);
  ordered.matching = MatchingMode::hungarian_iou;
  const EvalSummary hung_ordered = run_eval(ordered);

  ASSERT_EQ(by_index.scored, 3u);
  ASSERT_EQ(hung.scored, 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    const MetricsReport& a = *by_index.scenes[i].metrics;
    const MetricsReport& b = *hung.scenes[i].metrics;
    const MetricsReport& c = *hung_ordered.scenes[i].metrics;
    EXPECT_NEAR(a.cd_scene, b.cd_scene, 1e-9);
    EXPECT_NEAR(a.fscore_scene, b.fscore_scene, 1e-9);
    EXPECT_NEAR(a.cd_object, b.cd_object, 1e-9);
    EXPECT_NEAR(a.fscore_object, b.fscore_object, 1e-9);
    EXPECT_NEAR(a.iou_b, b.iou_b, 1e-9);
    // content-ordered predictions make naming irrelevant
    EXPECT_EQ(b.cd_scene, c.cd_scene);
    EXPECT_EQ(b.cd_object, c.cd_object);
    EXPECT_EQ(b.iou_b, c.iou_b);
    for (const auto& inst : b.per_instance) {
      // the matched files hold the same mesh
      const auto& s = hung.scenes[i];
      const fs::path pf = tmp / "shuffled" / s.scene_id / s.pred_files[inst.pred_id];
      const fs::path gf = tmp / "gt" / s.scene_id / s.gt_files[inst.gt_id];
      const auto pm = read_shape(pf).vertices;
      const auto gm = read_shape(gf).vertices;
      ASSERT_EQ(pm.size(), gm.size());
      EXPECT_LT((t.apply(gm.front()) - pm.front()).norm(), 1e-12);
    }
  }
}

TEST(Eval, JobErrors) {
  TempDir tmp;
  fs::create_directories(tmp / "gt");
  fs::create_directories(tmp / "pred");
  EvalJob job = base_job(tmp);
  try {
    run_eval(job);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::JobError);
  }
  fixtures::write_eval_scenes(tmp / "gt", 2, small_scenes(), 1);
  fixtures::write_eval_scenes(tmp / "pred", 1, small_scenes(), 1);
  try {
    run_eval(job);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::JobError);
  }
  // unequal counts are allowed when matching by IoU; the missing scene fails alone
  job.matching = MatchingMode::hungarian_iou;
  const EvalSummary s = run_eval(job);
  EXPECT_EQ(s.scored, 1u);
  EXPECT_EQ(s.failed, 1u);

  job.tau = 0.0;
  EXPECT_THROW(run_eval(job), Error);
  job.tau = 0.1;
  job.workers = 0;
  EXPECT_THROW(run_eval(job), Error);
}

TEST(Eval, QuantizationNormalizesNegativeZero) {
  EXPECT_EQ(quantize_report_value(-1e-12), 0.0);
  EXPECT_FALSE(std::signbit(quantize_report_value(-1e-12)));
  EXPECT_EQ(quantize_report_value(99.9999999999), 100.0);
  EXPECT_EQ(quantize_report_value(0.1234567894), 0.123456789);
}

}  // namespace
}  // namespace scenebench

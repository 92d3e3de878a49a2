#include "scenebench/sca_flow.hpp"

#include <cmath>
#include <string>

#include "scenebench/random.hpp"

namespace scenebench::sca {
namespace {

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw Error(ErrorCode::ShapeError, std::string(what) + " has non-finite entries");
}

std::string dims(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    out.row(r) = (logits.row(r).array() - m).exp();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

Vector softmax(const Vector& z) {
  if (z.size() == 0) return z;
  const Vector e = (z.array() - z.maxCoeff()).exp();
  return e / e.sum();
}

Matrix attention_weights(const Matrix& q, const Matrix& k) {
  if (q.cols() != k.cols() || q.cols() == 0 || k.rows() == 0) {
    throw Error(ErrorCode::ShapeError, "query " + dims(q) + " and key " + dims(k) + " widths differ");
  }
  require_finite(q, "query");
  require_finite(k, "key");
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  return softmax_rows((q * k.transpose()) * scale);
}

Matrix self_attention(const Matrix& q, const Matrix& k, const Matrix& v) {
  if (k.rows() != v.rows()) {
    throw Error(ErrorCode::ShapeError, "key " + dims(k) + " and value " + dims(v) + " token counts differ");
  }
  require_finite(v, "value");
  return attention_weights(q, k) * v;
}

void AttentionInputs::validate() const {
  if (k_instance.rows() != k_scene.rows() || k_instance.cols() != k_scene.cols() ||
      v_instance.rows() != v_scene.rows() || v_instance.cols() != v_scene.cols() ||
      k_instance.rows() != v_instance.rows() || q_instance.cols() != k_instance.cols()) {
    throw Error(ErrorCode::ShapeError, "instance/scene blocks disagree: K_i " + dims(k_instance) +
                                           ", K_s " + dims(k_scene) + ", V_i " + dims(v_instance) +
                                           ", V_s " + dims(v_scene) + ", Q_i " + dims(q_instance));
  }
}

Matrix scene_context_attention(const AttentionInputs& in) {
  in.validate();
  Matrix k(in.k_instance.rows() + in.k_scene.rows(), in.k_instance.cols());
  k << in.k_instance, in.k_scene;
  Matrix v(in.v_instance.rows() + in.v_scene.rows(), in.v_instance.cols());
  v << in.v_instance, in.v_scene;
  return self_attention(in.q_instance, k, v);
}

Vector duplicated_softmax(const Vector& z) {
  if (!z.allFinite()) throw Error(ErrorCode::DomainError, "softmax input has non-finite entries");
  Vector zz(2 * z.size());
  zz << z, z;
  return softmax(zz);
}

double cfm_loss(const Vector& v_pred, const Vector& x0, const Vector& epsilon) {
  if (v_pred.size() != x0.size() || x0.size() != epsilon.size()) {
    throw Error(ErrorCode::ShapeError, "velocity, data and noise dimensions differ");
  }
  return (v_pred - (epsilon - x0)).squaredNorm();
}

Vector cfm_loss_gradient(const Vector& v_pred, const Vector& x0, const Vector& epsilon) {
  if (v_pred.size() != x0.size() || x0.size() != epsilon.size()) {
    throw Error(ErrorCode::ShapeError, "velocity, data and noise dimensions differ");
  }
  return 2.0 * (v_pred - (epsilon - x0));
}

FlowSample interpolant(const Vector& x0, const Vector& epsilon, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorCode::DomainError, "t must lie in [0, 1]");
  if (x0.size() != epsilon.size()) throw Error(ErrorCode::ShapeError, "data and noise dimensions differ");
  FlowSample s{x0, epsilon, t, Vector()};
  if (t == 0.0) {
    s.x_t = x0;
  } else if (t == 1.0) {
    s.x_t = epsilon;
  } else {
    s.x_t = (1.0 - t) * x0 + t * epsilon;
  }
  return s;
}

double cfm_expected_loss(const VelocityField& velocity, const Vector& x0, int samples,
                         std::uint64_t seed) {
  if (samples <= 0) throw Error(ErrorCode::DomainError, "sample count must be positive");
  Rng rng(seed);
  double total = 0.0;
  for (int s = 0; s < samples; ++s) {
    const double t = rng.uniform();
    Vector eps(x0.size());
    for (Eigen::Index i = 0; i < eps.size(); ++i) eps[i] = rng.normal();
    const FlowSample fs = interpolant(x0, eps, t);
    total += cfm_loss(velocity(fs.x_t, t), x0, eps);
  }
  return total / samples;
}

VerificationReport verify_equivalence(int trials, std::uint64_t seed) {
  Rng rng(seed);
  auto random_matrix = [&](Eigen::Index r, Eigen::Index c) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal();
    return m;
  };
  VerificationReport report;
  report.trials = trials;
  for (int trial = 0; trial < trials; ++trial) {
    const auto t = rng.uniform_int(1, 16);
    const auto n = rng.uniform_int(1, 32);
    const auto d = rng.uniform_int(1, 64);
    const auto dv = rng.uniform_int(1, 32);
    AttentionInputs in;
    in.q_instance = random_matrix(t, d) * rng.uniform(0.1, 3.0);
    in.k_scene = random_matrix(n, d);
    in.v_scene = random_matrix(n, dv);
    in.k_instance = in.k_scene;
    in.v_instance = in.v_scene;

    const Matrix sca = scene_context_attention(in);
    const Matrix ref = self_attention(in.q_instance, in.k_scene, in.v_scene);
    report.max_equivalence_deviation =
        std::max(report.max_equivalence_deviation, (sca - ref).cwiseAbs().maxCoeff());

    Matrix k(2 * n, d);
    k << in.k_instance, in.k_scene;
    const Matrix w = attention_weights(in.q_instance, k);
    report.max_row_sum_deviation =
        std::max(report.max_row_sum_deviation, (w.rowwise().sum().array() - 1.0).abs().maxCoeff());

    Vector z(n);
    for (Eigen::Index i = 0; i < n; ++i) z[i] = rng.normal() * 4.0;
    const Vector dup = duplicated_softmax(z);
    const Vector half = 0.5 * softmax(z);
    Vector expect(2 * n);
    expect << half, half;
    report.max_duplicate_deviation =
        std::max(report.max_duplicate_deviation, (dup - expect).cwiseAbs().maxCoeff());
  }
  return report;
}

}  // namespace scenebench::sca

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>

#include "scenebench/errors.hpp"

namespace scenebench::sca {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& logits);
Vector softmax(const Vector& z);

/// softmax(Q K^T / sqrt(d)) where d is the key width.
Matrix attention_weights(const Matrix& q, const Matrix& k);

/// softmax(Q K^T / sqrt(d)) V.
Matrix self_attention(const Matrix& q, const Matrix& k, const Matrix& v);

struct AttentionInputs {
  Matrix q_instance;  // t x d
  Matrix k_instance;  // n x d
  Matrix k_scene;     // n x d
  Matrix v_instance;  // n x d_v
  Matrix v_scene;     // n x d_v

  void validate() const;
};

/// Instance queries attend over the stacked instance and scene keys/values.
Matrix scene_context_attention(const AttentionInputs& in);

/// softmax([z, z]); equals [softmax(z)/2, softmax(z)/2].
Vector duplicated_softmax(const Vector& z);

/// ||v_pred - (epsilon - x0)||^2.
double cfm_loss(const Vector& v_pred, const Vector& x0, const Vector& epsilon);
/// d cfm_loss / d v_pred.
Vector cfm_loss_gradient(const Vector& v_pred, const Vector& x0, const Vector& epsilon);

struct FlowSample {
  Vector x0;
  Vector epsilon;
  double t = 0.0;
  Vector x_t;
};

/// x_t = (1 - t) x0 + t epsilon, exact at both endpoints.
FlowSample interpolant(const Vector& x0, const Vector& epsilon, double t);

using VelocityField = std::function<Vector(const Vector& x_t, double t)>;

/// Seeded Monte Carlo estimate of E_{t,eps} ||v(x_t, t) - (eps - x0)||^2 with
/// t ~ U[0,1] and eps ~ N(0, I).
double cfm_expected_loss(const VelocityField& velocity, const Vector& x0, int samples,
                         std::uint64_t seed);

struct VerificationReport {
  int trials = 0;
  double max_equivalence_deviation = 0.0;  // ||SCA - self-attention||_inf with shared inputs
  double max_duplicate_deviation = 0.0;    // softmax([z,z]) vs halved softmax(z)
  double max_row_sum_deviation = 0.0;
  double equivalence_tolerance = 1e-9;
  double duplicate_tolerance = 1e-12;

  bool passed() const {
    return max_equivalence_deviation < equivalence_tolerance &&
           max_duplicate_deviation < duplicate_tolerance &&
           max_row_sum_deviation < equivalence_tolerance;
  }
};

/// Random (Q, K, V, t, n, d) draws with K_i = K_s and V_i = V_s.
VerificationReport verify_equivalence(int trials, std::uint64_t seed);

}  // namespace scenebench::sca

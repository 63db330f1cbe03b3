// Copyright 2026 The qcomb Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef QCOMB_MODEL_HPP
#define QCOMB_MODEL_HPP

// Exact three-time process matrix of a system qubit exchange-coupled to a single
// memory qubit that starts in its ground state.

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>

#include "qcomb/errors.hpp"
#include "qcomb/qops.hpp"

namespace qcomb {

/// Device and timing parameters in laboratory units.
struct ModelParams {
  double omega1_ghz = 0.0;  ///< system qubit frequency
  double omega2_ghz = 0.0;  ///< memory qubit frequency
  double g12_mhz = 0.0;     ///< exchange coupling
  double t1_ns = 0.0;       ///< first free evolution
  double t2_ns = 0.0;       ///< second free evolution
  /// Multiplies every frequency before exponentiation; 2*pi turns cycles into radians.
  double angular_factor = 2.0 * std::numbers::pi;

  void validate() const {
    auto non_negative = [](double v, const char* name) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw UsageError(std::string(name) + " must be a finite non-negative number", name);
      }
    };
    non_negative(omega1_ghz, "omega1_ghz");
    non_negative(omega2_ghz, "omega2_ghz");
    non_negative(g12_mhz, "g12_mhz");
    non_negative(t1_ns, "t1_ns");
    non_negative(t2_ns, "t2_ns");
    if (!(angular_factor > 0.0) || !std::isfinite(angular_factor)) {
      throw UsageError("angular_factor must be positive", "angular_factor");
    }
  }

  /// In-house flux-tunable pair at its operating point.
  static ModelParams uq(double t1_ns, double t2_ns) { return {5.11, 5.03, 11.0, t1_ns, t2_ns}; }
  /// Fixed-frequency cloud device pair.
  static ModelParams ibm(double t1_ns, double t2_ns) { return {5.16, 4.98, 3.0, t1_ns, t2_ns}; }
};

enum class ProcessStatus { ModelExact, RawReconstruction, Physical };

constexpr std::string_view status_name(ProcessStatus s) noexcept {
  switch (s) {
    case ProcessStatus::ModelExact: return "model-exact";
    case ProcessStatus::RawReconstruction: return "raw-reconstruction";
    case ProcessStatus::Physical: return "physical";
  }
  return "?";
}

inline ProcessStatus parse_status(std::string_view s) {
  for (auto st : {ProcessStatus::ModelExact, ProcessStatus::RawReconstruction, ProcessStatus::Physical}) {
    if (status_name(st) == s) return st;
  }
  throw InputError("unknown process status '" + std::string(s) + "'");
}

/// 16x16 Hermitian operator on (A_O, B_I, B_O, C_I) plus its provenance status.
class ProcessMatrix {
 public:
  ProcessMatrix(LabeledOperator op, ProcessStatus status) : op_(std::move(op)), status_(status) {
    if (op_.labels() != process_labels()) {
      throw DomainError("process matrix must be labeled (A_O, B_I, B_O, C_I)");
    }
    if (!op_.is_hermitian(1e-10)) throw DomainError("process matrix is not Hermitian");
  }

  const LabeledOperator& op() const noexcept { return op_; }
  const Matrix& matrix() const noexcept { return op_.matrix(); }
  ProcessStatus status() const noexcept { return status_; }
  double trace() const { return op_.trace().real(); }

 private:
  LabeledOperator op_;
  ProcessStatus status_;
};

/// H = w1/2 (1 x Z) + w2/2 (Z x 1) + g (s+ x s- + s- x s+) on (memory, system), in rad/ns.
/// The memory factor is labeled E1 and the system factor A_O.
inline LabeledOperator hamiltonian(const ModelParams& p) {
  p.validate();
  const double w1 = p.angular_factor * p.omega1_ghz;  // GHz -> rad/ns
  const double w2 = p.angular_factor * p.omega2_ghz;
  const double g = p.angular_factor * p.g12_mhz * 1e-3;  // MHz -> rad/ns
  Matrix h = Matrix::Zero(4, 4);
  // basis |memory, system>: 00, 01, 10, 11 with |0> the +1 eigenvector of Z
  h(0, 0) = 0.5 * (w1 + w2);
  h(1, 1) = 0.5 * (-w1 + w2);
  h(2, 2) = 0.5 * (w1 - w2);
  h(3, 3) = 0.5 * (-w1 - w2);
  h(1, 2) = g;
  h(2, 1) = g;
  return {{Label::E1, Label::AO}, std::move(h)};
}

/// U = exp(-i H t) by eigendecomposition of H; labeled like hamiltonian().
inline LabeledOperator free_evolution(const ModelParams& p, double t_ns) {
  if (!(t_ns >= 0.0)) throw DomainError("free_evolution: negative time");
  const auto h = hamiltonian(p);
  const auto eig = hermitian_eig(h);
  Eigen::VectorXcd phases(eig.values.size());
  for (Eigen::Index i = 0; i < phases.size(); ++i) {
    phases(i) = std::exp(cplx(0.0, -eig.values(i) * t_ns));
  }
  Matrix u = eig.vectors * phases.asDiagonal() * eig.vectors.adjoint();
  return {h.labels(), std::move(u)};
}

/// W = Tr_E3(rho^{E1} * [[U(t1)]] * [[U(t2)]]) with the memory starting in |0>.
inline ProcessMatrix model_process_matrix(const ModelParams& p) {
  p.validate();
  const auto u1 = free_evolution(p, p.t1_ns);                                    // (E1, A_O)
  const auto u2 = free_evolution(p, p.t2_ns).relabeled({Label::E2, Label::BO});  // (E2, B_O)
  const auto t1 = choi_of_unitary(u1, {Label::E2, Label::BI});
  const auto t2 = choi_of_unitary(u2, {Label::E3, Label::CI});
  Matrix ground = Matrix::Zero(2, 2);
  ground(0, 0) = 1.0;
  const LabeledOperator rho_env({Label::E1}, ground);
  const auto joint = link_product(link_product(rho_env, t1), t2);
  return {permute(partial_trace(joint, {Label::E3}), process_labels()), ProcessStatus::ModelExact};
}

/// Two identity channels, A_O -> B_I and B_O -> C_I.
inline ProcessMatrix ideal_process_matrix() {
  const auto id = LabeledOperator::identity({Label::AO});
  const auto first = choi_of_unitary(id, {Label::BI});
  const auto second = choi_of_unitary(id.relabeled({Label::BO}), {Label::CI});
  return {tensor(first, second), ProcessStatus::ModelExact};
}

}  // namespace qcomb

#endif  // QCOMB_MODEL_HPP

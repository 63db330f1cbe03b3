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

#ifndef QCOMB_RECONSTRUCT_HPP
#define QCOMB_RECONSTRUCT_HPP

// Linear-inversion estimate of the process matrix from counts, and its projection
// onto the set of valid process matrices.

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qcomb/errors.hpp"
#include "qcomb/io.hpp"
#include "qcomb/model.hpp"
#include "qcomb/protocol.hpp"
#include "qcomb/qops.hpp"

namespace qcomb {

inline constexpr std::size_t kNumPauliStrings = 256;

/// Index of sigma_i (x) sigma_j (x) sigma_k (x) sigma_l on (A_O, B_I, B_O, C_I).
struct PauliIndex {
  int i = 0, j = 0, k = 0, l = 0;

  constexpr std::size_t flat() const noexcept {
    return static_cast<std::size_t>(((i * 4 + j) * 4 + k) * 4 + l);
  }
  static constexpr PauliIndex from_flat(std::size_t f) noexcept {
    return {static_cast<int>(f >> 6 & 3), static_cast<int>(f >> 4 & 3), static_cast<int>(f >> 2 & 3),
            static_cast<int>(f & 3)};
  }
};

/// The 256 four-qubit Pauli strings, built once.
inline const std::vector<Matrix>& pauli_strings() {
  static const std::vector<Matrix> table = [] {
    std::vector<Matrix> out;
    out.reserve(kNumPauliStrings);
    for (std::size_t f = 0; f < kNumPauliStrings; ++f) {
      const PauliIndex p = PauliIndex::from_flat(f);
      const auto ab = tensor(pauli(p.i, Label::AO), pauli(p.j, Label::BI));
      const auto cd = tensor(pauli(p.k, Label::BO), pauli(p.l, Label::CI));
      out.push_back(tensor(ab, cd).matrix());
    }
    return out;
  }();
  return table;
}

/// W = sum alpha_{ijkl} sigma_i (x) sigma_j (x) sigma_k (x) sigma_l, so alpha = Tr[W sigma...]/16.
/// The expectation value <sigma_i, sigma_j, sigma_k, sigma_l> is 16 alpha.
struct PauliCoefficients {
  std::array<double, kNumPauliStrings> alpha{};

  double& operator[](PauliIndex p) { return alpha[p.flat()]; }
  double operator[](PauliIndex p) const { return alpha[p.flat()]; }
  double expectation(PauliIndex p) const { return 16.0 * alpha[p.flat()]; }
};

inline PauliCoefficients pauli_coefficients(const LabeledOperator& w) {
  if (w.labels() != process_labels()) throw DomainError("pauli_coefficients: expects process labels");
  PauliCoefficients c;
  const auto& strings = pauli_strings();
  for (std::size_t f = 0; f < kNumPauliStrings; ++f) {
    c.alpha[f] = (strings[f].cwiseProduct(w.matrix().transpose())).sum().real() / 16.0;
  }
  return c;
}

inline LabeledOperator from_pauli_coefficients(const PauliCoefficients& c) {
  Matrix m = Matrix::Zero(16, 16);
  const auto& strings = pauli_strings();
  for (std::size_t f = 0; f < kNumPauliStrings; ++f) {
    if (c.alpha[f] != 0.0) m += c.alpha[f] * strings[f];
  }
  return {process_labels(), std::move(m)};
}

/// Linear map from the 256 Pauli expectation values to the 1296 category probabilities
/// (row 4 * setting_index + outcome_index).
struct DesignMatrix {
  Eigen::MatrixXd matrix;
  Eigen::MatrixXd pseudo_inverse;
  Eigen::VectorXd singular_values;
  Eigen::Index rank = 0;
  CollapseFrame frame = CollapseFrame::Computational;
};

/// Row entries Tr[(sigma_i (x) sigma_j (x) sigma_k (x) sigma_l) effect]/16, evaluated factor by
/// factor since every effect is a product operator.
inline Eigen::MatrixXd design_rows(const std::vector<Setting>& settings, CollapseFrame frame) {
  Eigen::MatrixXd d(static_cast<Eigen::Index>(settings.size() * kOutcomesPerSetting),
                    static_cast<Eigen::Index>(kNumPauliStrings));
  std::array<Matrix, 4> sigma;
  for (int a = 0; a < 4; ++a) sigma[static_cast<std::size_t>(a)] = pauli(a);
  Eigen::Index row = 0;
  for (const Setting& s : settings) {
    for (std::size_t k = 0; k < kOutcomesPerSetting; ++k, ++row) {
      const ShotTuple t = shot_tuple(s, k, frame);
      const Matrix factors[4] = {projector(t.prep_a).transpose(), projector(t.result_b),
                                 projector(t.reprep_realized).transpose(), projector(t.result_c)};
      double tr[4][4];
      for (int f = 0; f < 4; ++f)
        for (int a = 0; a < 4; ++a) tr[f][a] = (sigma[static_cast<std::size_t>(a)] * factors[f]).trace().real();
      for (std::size_t col = 0; col < kNumPauliStrings; ++col) {
        const PauliIndex p = PauliIndex::from_flat(col);
        d(row, static_cast<Eigen::Index>(col)) = tr[0][p.i] * tr[1][p.j] * tr[2][p.k] * tr[3][p.l] / 16.0;
      }
    }
  }
  return d;
}

/// Builds the design map and its pseudo-inverse; throws InternalError unless it has full
/// column rank (an incomplete effect table cannot identify every coefficient).
inline DesignMatrix design_matrix(const std::vector<Setting>& settings,
                                  CollapseFrame frame = CollapseFrame::Computational) {
  DesignMatrix dm;
  dm.frame = frame;
  dm.matrix = design_rows(settings, frame);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(dm.matrix, Eigen::ComputeThinU | Eigen::ComputeThinV);
  dm.singular_values = svd.singularValues();
  const double cutoff = 1e-10 * dm.singular_values(0);
  dm.rank = (dm.singular_values.array() > cutoff).count();
  if (dm.rank < static_cast<Eigen::Index>(kNumPauliStrings)) {
    throw InternalError("design matrix has rank " + std::to_string(dm.rank) + " < 256 in the " +
                        std::string(frame_name(frame)) + " collapse frame");
  }
  const Eigen::VectorXd inv = dm.singular_values.cwiseInverse();
  dm.pseudo_inverse = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
  return dm;
}

/// Shared design map for the canonical 324 settings in the computational frame.
inline const DesignMatrix& canonical_design() {
  static const DesignMatrix dm = design_matrix(enumerate_settings(), CollapseFrame::Computational);
  return dm;
}

enum class Weighting { Uniform, Variance };

struct InversionOptions {
  Weighting weighting = Weighting::Uniform;
};

/// Category frequencies in design-row order; throws InputError listing missing settings.
inline Eigen::VectorXd category_frequencies(const CountsTable& counts) {
  const auto missing = counts.missing_settings();
  if (!missing.empty()) {
    std::string msg = "counts are missing " + std::to_string(missing.size()) + " setting(s):";
    for (std::size_t n = 0; n < missing.size(); ++n) {
      if (n == 10) {
        msg += " ...";
        break;
      }
      msg += " " + setting_name(setting_at(missing[n]));
    }
    throw InputError(msg);
  }
  Eigen::VectorXd f(static_cast<Eigen::Index>(kNumCategories));
  for (std::size_t s = 0; s < kNumSettings; ++s) {
    const auto p = counts.frequencies(s);
    for (std::size_t k = 0; k < kOutcomesPerSetting; ++k) f(static_cast<Eigen::Index>(4 * s + k)) = p[k];
  }
  return f;
}

/// Least-squares Pauli coefficients for a frequency vector. The design map acts on
/// expectation values, which are rescaled to coefficients on return.
inline PauliCoefficients solve_coefficients(const DesignMatrix& dm, const Eigen::VectorXd& f,
                                            Weighting weighting = Weighting::Uniform,
                                            double shots_per_setting = 0.0) {
  Eigen::VectorXd alpha;
  if (weighting == Weighting::Uniform) {
    alpha = dm.pseudo_inverse * f;
  } else {
    // inverse multinomial variance, floored at one count so certain outcomes keep finite weight
    const double n = shots_per_setting > 0.0 ? shots_per_setting : 1.0;
    Eigen::VectorXd sw(f.size());
    for (Eigen::Index c = 0; c < f.size(); ++c) {
      const double var = std::max(f(c) * (1.0 - f(c)), 1.0 / n) / n;
      sw(c) = 1.0 / std::sqrt(var);
    }
    const Eigen::MatrixXd a = sw.asDiagonal() * dm.matrix;
    Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(a.cols(), a.cols());
    normal.selfadjointView<Eigen::Lower>().rankUpdate(a.transpose());
    alpha = normal.selfadjointView<Eigen::Lower>().llt().solve(a.transpose() * sw.cwiseProduct(f));
  }
  PauliCoefficients c;
  for (std::size_t i = 0; i < kNumPauliStrings; ++i) c.alpha[i] = alpha(static_cast<Eigen::Index>(i)) / 16.0;
  return c;
}

/// Raw estimate from counts. Hermitian by construction; usually not positive.
inline ProcessMatrix invert_counts(const CountsTable& counts, const InversionOptions& opts = {}) {
  const Eigen::VectorXd f = category_frequencies(counts);
  const DesignMatrix& dm = counts.frame == CollapseFrame::Computational
                               ? canonical_design()
                               : design_matrix(enumerate_settings(), counts.frame);
  const auto c = solve_coefficients(dm, f, opts.weighting, counts.shots_per_setting);
  return {from_pauli_coefficients(c), ProcessStatus::RawReconstruction};
}

// ---------------------------------------------------------------------------
// Valid process matrices

namespace detail {

inline const LabelList& labels_ci() {
  static const LabelList l = {Label::CI};
  return l;
}
inline const LabelList& labels_bo_ci() {
  static const LabelList l = {Label::BO, Label::CI};
  return l;
}
inline const LabelList& labels_bi_bo_ci() {
  static const LabelList l = {Label::BI, Label::BO, Label::CI};
  return l;
}

}  // namespace detail

/// Orthogonal projector onto {W : _{C_I}W = _{B_O C_I}W, _{B_I B_O C_I}W = _{A_O B_I B_O C_I}W},
/// where _X denotes trace_and_replace over X:
///   L_V(W) = W - _{C_I}W + _{B_O C_I}W - _{B_I B_O C_I}W + _{A_O B_I B_O C_I}W
inline LabeledOperator comb_projector(const LabeledOperator& w) {
  if (w.labels() != process_labels()) throw DomainError("comb_projector: expects process labels");
  const double tr = w.trace().real();
  const double ti = w.trace().imag();
  LabeledOperator out = w;
  out -= trace_and_replace(w, detail::labels_ci());
  out += trace_and_replace(w, detail::labels_bo_ci());
  out -= trace_and_replace(w, detail::labels_bi_bo_ci());
  out += LabeledOperator(process_labels(), Matrix::Identity(16, 16) * cplx(tr, ti) / 16.0);
  return out;
}

/// Violation of each defining condition of a valid process matrix.
struct CombConstraintReport {
  double psd_violation = 0.0;  ///< most negative eigenvalue, 0 when PSD
  double c1_violation = 0.0;   ///< ||_{C_I}W - _{B_O C_I}W||_F
  double c2_violation = 0.0;   ///< ||_{B_I B_O C_I}W - _{A_O B_I B_O C_I}W||_F
  double trace_error = 0.0;    ///< |Tr W - 4|

  double worst() const {
    return std::max({-psd_violation, c1_violation, c2_violation, trace_error});
  }
  bool satisfied(double tol) const { return worst() < tol; }
};

/// Eigenvalues in (-1e-14, 0) count as zero.
inline constexpr double kEigenvalueNoiseFloor = 1e-14;

inline CombConstraintReport constraint_report(const LabeledOperator& w) {
  if (w.labels() != process_labels()) throw DomainError("constraint_report: expects process labels");
  CombConstraintReport r;
  const double lmin = hermitian_eigenvalues(w.matrix(), 1e-8)(0);
  r.psd_violation = lmin < -kEigenvalueNoiseFloor ? lmin : 0.0;
  const auto p_ci = trace_and_replace(w, detail::labels_ci());
  const auto p_bo_ci = trace_and_replace(w, detail::labels_bo_ci());
  const auto p_bi_bo_ci = trace_and_replace(w, detail::labels_bi_bo_ci());
  const Matrix p_all = Matrix::Identity(16, 16) * w.trace() / 16.0;
  r.c1_violation = (p_ci.matrix() - p_bo_ci.matrix()).norm();
  r.c2_violation = (p_bi_bo_ci.matrix() - p_all).norm();
  r.trace_error = std::abs(w.trace() - cplx(4.0, 0.0));
  return r;
}

inline CombConstraintReport constraint_report(const ProcessMatrix& w) { return constraint_report(w.op()); }

inline void write_constraint_report(std::ostream& out, const CombConstraintReport& r) {
  out << "psd_violation " << io::format_double(r.psd_violation) << '\n'
      << "c1_violation " << io::format_double(r.c1_violation) << '\n'
      << "c2_violation " << io::format_double(r.c2_violation) << '\n'
      << "trace_error " << io::format_double(r.trace_error) << '\n';
}

/// Nearest point of the PSD cone in Frobenius norm (negative eigenvalues clipped).
inline Matrix project_psd(const Matrix& w) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(w);
  Eigen::VectorXd lambda = solver.eigenvalues().cwiseMax(0.0);
  Matrix out = solver.eigenvectors() * lambda.asDiagonal() * solver.eigenvectors().adjoint();
  return 0.5 * (out + out.adjoint());
}

/// Nearest point of {L_V(W) = W, Tr W = 4}.
inline Matrix project_affine(const Matrix& w) {
  const LabeledOperator lv = comb_projector(LabeledOperator(process_labels(), w));
  Matrix out = lv.matrix();
  out.diagonal().array() += (4.0 - lv.trace()) / 16.0;
  return out;
}

struct ProjectionOptions {
  double tol = 1e-9;       ///< stop when successive iterates differ by less (Frobenius)
  int max_iter = 20000;
  bool log_feasibility = false;
};

struct ProjectionResult {
  ProcessMatrix w;
  CombConstraintReport report;
  double distance = 0.0;  ///< ||w_exp - w_phys||_F
  int iterations = 0;
  bool converged = false;
  /// Affine-constraint distance of each PSD iterate (when requested).
  std::vector<double> feasibility_log;
};

/// Frobenius-nearest valid process matrix via Dykstra's alternating projections between
/// the PSD cone and the affine comb set with unit normalization Tr W = 4.
inline ProjectionResult project_physical(const ProcessMatrix& w_exp, const ProjectionOptions& opts = {}) {
  const Matrix& w0 = w_exp.matrix();
  Matrix x = w0;
  Matrix p = Matrix::Zero(16, 16);
  Matrix q = Matrix::Zero(16, 16);
  ProjectionResult res{w_exp, {}, 0.0, 0, false, {}};
  for (int it = 1; it <= opts.max_iter; ++it) {
    const Matrix y = project_affine(x + p);
    p += x - y;
    const Matrix x_next = project_psd(y + q);
    q += y - x_next;
    // both the PSD step and the gap to the affine iterate must settle, so the
    // returned point is within tol of the affine set as well
    const double change = std::max((x_next - x).norm(), (x_next - y).norm());
    x = x_next;
    res.iterations = it;
    if (opts.log_feasibility) res.feasibility_log.push_back((x - project_affine(x)).norm());
    if (change < opts.tol) {
      res.converged = true;
      break;
    }
  }
  res.w = ProcessMatrix(LabeledOperator(process_labels(), x), ProcessStatus::Physical);
  res.report = constraint_report(res.w);
  res.distance = (w0 - x).norm();
  return res;
}

}  // namespace qcomb

#endif  // QCOMB_RECONSTRUCT_HPP

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

#ifndef QCOMB_QOPS_HPP
#define QCOMB_QOPS_HPP

// Operator algebra on small multi-qubit spaces. Every operator carries an ordered
// list of subsystem labels; the first label is the most significant tensor factor.

#include <algorithm>
#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qcomb/errors.hpp"
#include "qcomb/io.hpp"

namespace qcomb {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

enum class Label : std::uint8_t { AO, BI, BO, CI, E1, E2, E3 };

inline constexpr std::array<Label, 7> kAllLabels = {Label::AO, Label::BI, Label::BO, Label::CI,
                                                    Label::E1, Label::E2, Label::E3};

/// Every subsystem in this library is a qubit.
constexpr Eigen::Index dimension(Label) noexcept { return 2; }

constexpr std::string_view label_name(Label l) noexcept {
  switch (l) {
    case Label::AO: return "A_O";
    case Label::BI: return "B_I";
    case Label::BO: return "B_O";
    case Label::CI: return "C_I";
    case Label::E1: return "E1";
    case Label::E2: return "E2";
    case Label::E3: return "E3";
  }
  return "?";
}

inline Label parse_label(std::string_view s) {
  for (Label l : kAllLabels) {
    if (label_name(l) == s) return l;
  }
  throw InputError("unknown subsystem label '" + std::string(s) + "'");
}

using LabelList = std::vector<Label>;

/// Canonical label order of a three-time process matrix.
inline const LabelList& process_labels() {
  static const LabelList labels = {Label::AO, Label::BI, Label::BO, Label::CI};
  return labels;
}

/// Dense complex matrix tagged with the subsystems it acts on.
class LabeledOperator {
 public:
  LabeledOperator() : matrix_(Matrix::Zero(1, 1)) {}

  LabeledOperator(LabelList labels, Matrix matrix)
      : labels_(std::move(labels)), matrix_(std::move(matrix)) {
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      for (std::size_t j = i + 1; j < labels_.size(); ++j) {
        if (labels_[i] == labels_[j]) {
          throw DomainError("duplicate subsystem label " + std::string(label_name(labels_[i])));
        }
      }
    }
    Eigen::Index side = 1;
    for (Label l : labels_) side *= dimension(l);
    if (matrix_.rows() != side || matrix_.cols() != side) {
      throw DomainError("matrix side " + std::to_string(matrix_.rows()) + "x" +
                        std::to_string(matrix_.cols()) + " does not match label dimension " +
                        std::to_string(side));
    }
  }

  static LabeledOperator identity(LabelList labels) {
    Eigen::Index side = 1;
    for (Label l : labels) side *= dimension(l);
    return {std::move(labels), Matrix::Identity(side, side)};
  }

  static LabeledOperator zero(LabelList labels) {
    Eigen::Index side = 1;
    for (Label l : labels) side *= dimension(l);
    return {std::move(labels), Matrix::Zero(side, side)};
  }

  const LabelList& labels() const noexcept { return labels_; }
  const Matrix& matrix() const noexcept { return matrix_; }
  Eigen::Index dim() const noexcept { return matrix_.rows(); }
  std::size_t size() const noexcept { return labels_.size(); }

  bool has(Label l) const noexcept {
    return std::find(labels_.begin(), labels_.end(), l) != labels_.end();
  }

  std::size_t position(Label l) const {
    const auto it = std::find(labels_.begin(), labels_.end(), l);
    if (it == labels_.end()) {
      throw DomainError("label " + std::string(label_name(l)) + " not present");
    }
    return static_cast<std::size_t>(it - labels_.begin());
  }

  cplx trace() const { return matrix_.trace(); }

  double hermiticity_error() const { return (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff(); }
  bool is_hermitian(double tol = 1e-12) const { return hermiticity_error() <= tol; }

  double frobenius_norm() const { return matrix_.norm(); }

  LabeledOperator adjoint() const { return {labels_, matrix_.adjoint()}; }

  /// Same operator under a new set of names (dimensions must agree).
  LabeledOperator relabeled(LabelList labels) const {
    if (labels.size() != labels_.size()) throw DomainError("relabel: label count mismatch");
    return {std::move(labels), matrix_};
  }

  LabeledOperator& operator+=(const LabeledOperator& o) {
    require_same_labels(o, "+");
    matrix_ += o.matrix_;
    return *this;
  }
  LabeledOperator& operator-=(const LabeledOperator& o) {
    require_same_labels(o, "-");
    matrix_ -= o.matrix_;
    return *this;
  }
  LabeledOperator& operator*=(cplx s) {
    matrix_ *= s;
    return *this;
  }

  friend LabeledOperator operator+(LabeledOperator a, const LabeledOperator& b) { return a += b; }
  friend LabeledOperator operator-(LabeledOperator a, const LabeledOperator& b) { return a -= b; }
  friend LabeledOperator operator*(LabeledOperator a, cplx s) { return a *= s; }
  friend LabeledOperator operator*(cplx s, LabeledOperator a) { return a *= s; }

  /// Operator product on identical label lists.
  friend LabeledOperator operator*(const LabeledOperator& a, const LabeledOperator& b) {
    a.require_same_labels(b, "*");
    return {a.labels_, a.matrix_ * b.matrix_};
  }

 private:
  void require_same_labels(const LabeledOperator& o, const char* op) const {
    if (o.labels_ != labels_) {
      throw DomainError(std::string("operator ") + op + " on differently labeled operands");
    }
  }

  LabelList labels_;
  Matrix matrix_;
};

/// Hilbert-Schmidt inner product Tr[a^dagger b].
inline cplx hs_inner(const LabeledOperator& a, const LabeledOperator& b) {
  if (a.labels() != b.labels()) throw DomainError("hs_inner on differently labeled operands");
  return (a.matrix().adjoint() * b.matrix()).trace();
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DomainError("shape mismatch");
  return (a - b).cwiseAbs().maxCoeff();
}

inline double max_abs_diff(const LabeledOperator& a, const LabeledOperator& b) {
  return max_abs_diff(a.matrix(), b.matrix());
}

namespace detail {

/// Bit shift of the tensor factor at `pos` in an n-factor qubit index.
constexpr int bit_of(std::size_t pos, std::size_t n) noexcept { return static_cast<int>(n - 1 - pos); }

/// For each value of a sub-index over `positions` (most significant first), the
/// corresponding bits scattered into the full n-factor index.
inline std::vector<Eigen::Index> scatter_table(const std::vector<std::size_t>& positions,
                                               std::size_t n) {
  const std::size_t m = positions.size();
  std::vector<Eigen::Index> table(std::size_t{1} << m, 0);
  for (std::size_t x = 0; x < table.size(); ++x) {
    Eigen::Index full = 0;
    for (std::size_t q = 0; q < m; ++q) {
      if ((x >> (m - 1 - q)) & 1U) full |= Eigen::Index{1} << bit_of(positions[q], n);
    }
    table[x] = full;
  }
  return table;
}

/// Positions of `over` within `labels`; rejects unknown or repeated labels.
inline std::vector<std::size_t> positions_of(const LabeledOperator& w, const LabelList& over) {
  std::vector<std::size_t> pos;
  pos.reserve(over.size());
  for (Label l : over) {
    if (!w.has(l)) {
      throw DomainError("label " + std::string(label_name(l)) + " is not a subsystem of the operator");
    }
    const std::size_t p = w.position(l);
    if (std::find(pos.begin(), pos.end(), p) != pos.end()) {
      throw DomainError("label " + std::string(label_name(l)) + " listed twice");
    }
    pos.push_back(p);
  }
  return pos;
}

inline std::vector<std::size_t> complement(const std::vector<std::size_t>& pos, std::size_t n) {
  std::vector<std::size_t> rest;
  for (std::size_t p = 0; p < n; ++p) {
    if (std::find(pos.begin(), pos.end(), p) == pos.end()) rest.push_back(p);
  }
  return rest;
}

}  // namespace detail

/// Single-qubit Pauli matrix: 0 = identity, 1 = X, 2 = Y, 3 = Z. Unlabeled (2x2).
inline Matrix pauli(int index) {
  const cplx I(0.0, 1.0);
  Matrix m(2, 2);
  switch (index) {
    case 0: m << 1.0, 0.0, 0.0, 1.0; break;
    case 1: m << 0.0, 1.0, 1.0, 0.0; break;
    case 2: m << 0.0, -I, I, 0.0; break;
    case 3: m << 1.0, 0.0, 0.0, -1.0; break;
    default: throw DomainError("pauli index " + std::to_string(index) + " outside [0,3]");
  }
  return m;
}

inline LabeledOperator pauli(int index, Label on) { return {{on}, pauli(index)}; }

/// Kronecker product; labels are concatenated.
inline LabeledOperator tensor(const LabeledOperator& a, const LabeledOperator& b) {
  for (Label l : b.labels()) {
    if (a.has(l)) {
      throw DomainError("tensor: label " + std::string(label_name(l)) + " appears on both sides");
    }
  }
  LabelList labels = a.labels();
  labels.insert(labels.end(), b.labels().begin(), b.labels().end());
  Matrix m(a.dim() * b.dim(), a.dim() * b.dim());
  for (Eigen::Index i = 0; i < a.dim(); ++i) {
    for (Eigen::Index j = 0; j < a.dim(); ++j) {
      m.block(i * b.dim(), j * b.dim(), b.dim(), b.dim()) = a.matrix()(i, j) * b.matrix();
    }
  }
  return {std::move(labels), std::move(m)};
}

/// Reorders the tensor factors to `order`, which must be a permutation of the labels.
inline LabeledOperator permute(const LabeledOperator& w, const LabelList& order) {
  if (order.size() != w.size()) throw DomainError("permute: order is not a permutation of the labels");
  if (order == w.labels()) return w;
  const auto src = detail::positions_of(w, order);
  const std::size_t n = w.size();
  // new index bit for position q corresponds to old position src[q]
  const Eigen::Index d = w.dim();
  std::vector<Eigen::Index> map(static_cast<std::size_t>(d));
  for (Eigen::Index x = 0; x < d; ++x) {
    Eigen::Index old = 0;
    for (std::size_t q = 0; q < n; ++q) {
      if ((x >> detail::bit_of(q, n)) & 1) old |= Eigen::Index{1} << detail::bit_of(src[q], n);
    }
    map[static_cast<std::size_t>(x)] = old;
  }
  Matrix m(d, d);
  for (Eigen::Index c = 0; c < d; ++c) {
    for (Eigen::Index r = 0; r < d; ++r) m(r, c) = w.matrix()(map[r], map[c]);
  }
  return {order, std::move(m)};
}

/// w tensored with the identity on every label of `target` that w lacks, in `target` order.
inline LabeledOperator embed(const LabeledOperator& w, const LabelList& target) {
  LabelList missing;
  for (Label l : target) {
    if (!w.has(l)) missing.push_back(l);
  }
  for (Label l : w.labels()) {
    if (std::find(target.begin(), target.end(), l) == target.end()) {
      throw DomainError("embed: target lacks label " + std::string(label_name(l)));
    }
  }
  if (missing.empty()) return permute(w, target);
  return permute(tensor(w, LabeledOperator::identity(missing)), target);
}

inline LabeledOperator partial_trace(const LabeledOperator& w, const LabelList& over) {
  const std::size_t n = w.size();
  const auto traced = detail::positions_of(w, over);
  const auto kept = detail::complement(traced, n);
  const auto kept_map = detail::scatter_table(kept, n);
  const auto traced_map = detail::scatter_table(traced, n);
  LabelList labels;
  for (std::size_t p : kept) labels.push_back(w.labels()[p]);
  const auto dk = static_cast<Eigen::Index>(kept_map.size());
  Matrix m = Matrix::Zero(dk, dk);
  for (Eigen::Index c = 0; c < dk; ++c) {
    for (Eigen::Index r = 0; r < dk; ++r) {
      cplx acc = 0.0;
      for (Eigen::Index t : traced_map) acc += w.matrix()(kept_map[r] | t, kept_map[c] | t);
      m(r, c) = acc;
    }
  }
  return {std::move(labels), std::move(m)};
}

/// Transpose in the computational basis on the tensor factors in `over`.
inline LabeledOperator partial_transpose(const LabeledOperator& w, const LabelList& over) {
  const std::size_t n = w.size();
  const auto pos = detail::positions_of(w, over);
  Eigen::Index mask = 0;
  for (std::size_t p : pos) mask |= Eigen::Index{1} << detail::bit_of(p, n);
  const Eigen::Index d = w.dim();
  Matrix m(d, d);
  for (Eigen::Index c = 0; c < d; ++c) {
    for (Eigen::Index r = 0; r < d; ++r) {
      const Eigen::Index r2 = (r & ~mask) | (c & mask);
      const Eigen::Index c2 = (c & ~mask) | (r & mask);
      m(r, c) = w.matrix()(r2, c2);
    }
  }
  return {w.labels(), std::move(m)};
}

/// (identity_over / d_over) tensor Tr_over(w), re-embedded on w's label order.
inline LabeledOperator trace_and_replace(const LabeledOperator& w, const LabelList& over) {
  if (over.empty()) {
    detail::positions_of(w, over);
    return w;
  }
  double d_over = 1.0;
  for (Label l : over) d_over *= static_cast<double>(dimension(l));
  auto reduced = partial_trace(w, over);
  reduced *= cplx(1.0 / d_over);
  return embed(reduced, w.labels());
}

inline bool is_unitary(const Matrix& u, double tol = 1e-10) {
  if (u.rows() != u.cols()) return false;
  return max_abs_diff(u.adjoint() * u, Matrix::Identity(u.rows(), u.cols())) < tol;
}

/// [[U]] = (1 (x) U)|1>><<1|(1 (x) U)^dagger with |1>> = sum_j |jj>, labeled (in..., out...).
/// No transpose is applied; consumers transpose explicitly where the Born rule asks for it.
inline LabeledOperator choi_of_unitary(const LabeledOperator& u, const LabelList& out_labels) {
  if (!is_unitary(u.matrix())) throw DomainError("choi_of_unitary: input is not unitary");
  if (out_labels.size() != u.size()) throw DomainError("choi_of_unitary: output label count mismatch");
  for (std::size_t i = 0; i < out_labels.size(); ++i) {
    if (dimension(out_labels[i]) != dimension(u.labels()[i])) {
      throw DomainError("choi_of_unitary: output dimension mismatch");
    }
  }
  const Eigen::Index d = u.dim();
  Eigen::VectorXcd v(d * d);
  for (Eigen::Index j = 0; j < d; ++j) v.segment(j * d, d) = u.matrix().col(j);
  LabelList labels = u.labels();
  labels.insert(labels.end(), out_labels.begin(), out_labels.end());
  return {std::move(labels), v * v.adjoint()};
}

/// Link product a * b = Tr_shared[(a^{T_shared} (x) 1)(1 (x) b)], shared labels matched by name.
/// Result labels: a's unshared labels, then b's unshared labels.
inline LabeledOperator link_product(const LabeledOperator& a, const LabeledOperator& b) {
  LabelList shared, a_only, b_only;
  for (Label l : a.labels()) (b.has(l) ? shared : a_only).push_back(l);
  for (Label l : b.labels()) {
    if (!a.has(l)) b_only.push_back(l);
  }
  LabelList full = a_only;
  full.insert(full.end(), shared.begin(), shared.end());
  full.insert(full.end(), b_only.begin(), b_only.end());
  const auto a_full = embed(partial_transpose(a, shared), full);
  const auto b_full = embed(b, full);
  const LabeledOperator product(full, a_full.matrix() * b_full.matrix());
  return partial_trace(product, shared);
}

struct EigenDecomposition {
  Eigen::VectorXd values;  // ascending
  Matrix vectors;          // columns are orthonormal eigenvectors
};

inline EigenDecomposition hermitian_eig(const Matrix& w, double tol = 1e-10) {
  if (w.rows() != w.cols()) throw DomainError("hermitian_eig: matrix is not square");
  if ((w - w.adjoint()).cwiseAbs().maxCoeff() > tol) {
    throw DomainError("hermitian_eig: matrix is not Hermitian");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(w);
  if (solver.info() != Eigen::Success) throw InternalError("hermitian_eig: solver failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

inline EigenDecomposition hermitian_eig(const LabeledOperator& w, double tol = 1e-10) {
  return hermitian_eig(w.matrix(), tol);
}

inline Eigen::VectorXd hermitian_eigenvalues(const Matrix& w, double tol = 1e-10) {
  if ((w - w.adjoint()).cwiseAbs().maxCoeff() > tol) {
    throw DomainError("hermitian_eigenvalues: matrix is not Hermitian");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(w, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

// ---------------------------------------------------------------------------
// Text serialization
//
//   qcomb-operator v1
//   labels A_O B_I B_O C_I
//   <key> <value>            (zero or more metadata lines)
//   data <side>
//   (re,im) (re,im) ...      (one matrix row per line)
//   end

using Metadata = std::map<std::string, std::string>;

inline void write_operator(std::ostream& out, const LabeledOperator& w, const Metadata& meta = {}) {
  out << "qcomb-operator v1\nlabels";
  for (Label l : w.labels()) out << ' ' << label_name(l);
  out << '\n';
  for (const auto& [k, v] : meta) out << k << ' ' << v << '\n';
  out << "data " << w.dim() << '\n';
  for (Eigen::Index r = 0; r < w.dim(); ++r) {
    for (Eigen::Index c = 0; c < w.dim(); ++c) {
      const cplx z = w.matrix()(r, c);
      if (c) out << ' ';
      out << '(' << io::format_double(z.real()) << ',' << io::format_double(z.imag()) << ')';
    }
    out << '\n';
  }
  out << "end\n";
}

struct OperatorFile {
  LabeledOperator op;
  Metadata meta;
};

inline OperatorFile read_operator(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  auto next = [&](const char* what) -> std::string_view {
    if (!std::getline(in, line)) throw InputError(std::string("operator file: missing ") + what);
    ++lineno;
    return io::trim(line);
  };
  auto where = [&] { return "operator file line " + std::to_string(lineno); };

  if (next("header") != "qcomb-operator v1") throw InputError(where() + ": bad header");
  auto toks = io::split_ws(next("labels line"));
  if (toks.empty() || toks[0] != "labels") throw InputError(where() + ": expected 'labels'");
  LabelList labels;
  for (std::size_t i = 1; i < toks.size(); ++i) {
    const Label l = parse_label(toks[i]);
    if (std::find(labels.begin(), labels.end(), l) != labels.end()) {
      throw InputError(where() + ": duplicate label " + std::string(toks[i]));
    }
    labels.push_back(l);
  }

  Metadata meta;
  Eigen::Index side = -1;
  while (side < 0) {
    const auto l = next("data section");
    if (l.empty()) continue;
    const auto sp = l.find(' ');
    const auto key = l.substr(0, sp);
    const auto value = sp == std::string_view::npos ? std::string_view{} : io::trim(l.substr(sp));
    if (key == "data") {
      side = static_cast<Eigen::Index>(io::parse_int(value, where()));
    } else {
      meta.emplace(std::string(key), std::string(value));
    }
  }
  Eigen::Index expected = 1;
  for (Label l : labels) expected *= dimension(l);
  if (side != expected) throw InputError(where() + ": side does not match labels");

  Matrix m(side, side);
  for (Eigen::Index r = 0; r < side; ++r) {
    const auto row = io::split_ws(next("matrix row"));
    if (static_cast<Eigen::Index>(row.size()) != side) {
      throw InputError(where() + ": expected " + std::to_string(side) + " entries");
    }
    for (Eigen::Index c = 0; c < side; ++c) {
      auto tok = row[static_cast<std::size_t>(c)];
      if (tok.size() < 5 || tok.front() != '(' || tok.back() != ')') {
        throw InputError(where() + ": malformed entry '" + std::string(tok) + "'");
      }
      tok = tok.substr(1, tok.size() - 2);
      const auto comma = tok.find(',');
      if (comma == std::string_view::npos) throw InputError(where() + ": malformed entry");
      m(r, c) = cplx(io::parse_double(tok.substr(0, comma), where()),
                     io::parse_double(tok.substr(comma + 1), where()));
    }
  }
  if (next("end marker") != "end") throw InputError(where() + ": expected 'end'");
  return {LabeledOperator(std::move(labels), std::move(m)), std::move(meta)};
}

}  // namespace qcomb

#endif  // QCOMB_QOPS_HPP

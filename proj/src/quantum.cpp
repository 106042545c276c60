#include "qst/quantum.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace qst {

namespace {

Operator kron(const Operator& a, const Operator& b) {
  Operator out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Per-qubit label list for one concrete copy of a term. `shift` selects the
// translated copy for TIRing and must be 0 otherwise.
std::vector<Pauli> term_labels(const Term& term, const Topology& topology,
                               int shift) {
  std::vector<Pauli> labels(topology.n_qubits, Pauli::I);
  if (topology.kind == TopologyKind::TIRing) {
    if (term.is_pair) {
      labels[shift] = term.p1;
      labels[(shift + 1) % topology.n_qubits] = term.p2;
    } else {
      labels[shift] = term.p1;
    }
    return labels;
  }
  if (term.is_pair) {
    const auto& [i, j] = topology.edges[term.edge];
    labels[i] = term.p1;
    labels[j] = term.p2;
  } else {
    labels[term.qubit] = term.p1;
  }
  return labels;
}

void check_coeff_dims(const CoeffVector& h) {
  if (h.values.size() != h.topology.coeff_dim())
    throw DimensionError("coefficient vector has " +
                         std::to_string(h.values.size()) + " entries, topology needs " +
                         std::to_string(h.topology.coeff_dim()));
}

} // namespace

Operator pauli_matrix(Pauli p) {
  Operator m(2, 2);
  const Complex i(0.0, 1.0);
  switch (p) {
    case Pauli::X: m << 0, 1, 1, 0; break;
    case Pauli::Y: m << 0, -i, i, 0; break;
    case Pauli::Z: m << 1, 0, 0, -1; break;
    case Pauli::I: m << 1, 0, 0, 1; break;
  }
  return m;
}

Operator build_basis_element(const std::vector<Pauli>& labels) {
  if (labels.empty()) throw ValidationError("empty label list");
  if (std::all_of(labels.begin(), labels.end(),
                  [](Pauli p) { return p == Pauli::I; }))
    throw ValidationError("all-identity label list is not a basis element");
  Operator out = pauli_matrix(labels[0]);
  for (std::size_t q = 1; q < labels.size(); ++q)
    out = kron(out, pauli_matrix(labels[q]));
  return out;
}

TermBasis build_term_basis(const Topology& topology) {
  TermBasis basis{topology, {}, {}};
  const auto terms = canonical_terms(topology);
  if (topology.kind == TopologyKind::TIRing) {
    for (const Term& term : terms) {
      std::vector<Operator> copies;
      for (int shift = 0; shift < topology.n_qubits; ++shift)
        copies.push_back(build_basis_element(term_labels(term, topology, shift)));
      Operator sum = copies[0];
      for (std::size_t k = 1; k < copies.size(); ++k) sum += copies[k];
      basis.elements.push_back(std::move(sum));
      basis.translates.push_back(std::move(copies));
    }
    return basis;
  }
  for (const Term& term : terms)
    basis.elements.push_back(build_basis_element(term_labels(term, topology, 0)));
  return basis;
}

Operator build_hamiltonian(const CoeffVector& h) {
  return build_hamiltonian(h, build_term_basis(h.topology));
}

Operator build_hamiltonian(const CoeffVector& h, const TermBasis& basis) {
  check_coeff_dims(h);
  if (!(basis.topology == h.topology))
    throw DimensionError("term basis does not match coefficient topology");
  const Eigen::Index dim = Eigen::Index(1) << h.topology.n_qubits;
  Operator H = Operator::Zero(dim, dim);
  for (Eigen::Index i = 0; i < h.values.size(); ++i)
    H += h.values[i] * basis.elements[i];
  return H;
}

CoeffVector project_to_coeffs(const Operator& H, const Topology& topology) {
  const Eigen::Index dim = Eigen::Index(1) << topology.n_qubits;
  if (H.rows() != dim || H.cols() != dim)
    throw DimensionError("operator dimension does not match topology");
  const TermBasis basis = build_term_basis(topology);
  Eigen::VectorXd values(topology.coeff_dim());
  for (std::size_t i = 0; i < basis.elements.size(); ++i) {
    double norm = static_cast<double>(dim);
    if (topology.kind == TopologyKind::TIRing)
      norm *= static_cast<double>(basis.translates[i].size());
    values[static_cast<Eigen::Index>(i)] =
        (H * basis.elements[i]).trace().real() / norm;
  }
  return CoeffVector{topology, std::move(values)};
}

PureState ground_state(const Operator& H, double gap_tol) {
  if (H.rows() != H.cols()) throw DimensionError("Hamiltonian must be square");
  Eigen::SelfAdjointEigenSolver<Operator> solver(H);
  if (solver.info() != Eigen::Success)
    throw NumericalError("eigendecomposition failed");
  const Eigen::VectorXd& evals = solver.eigenvalues(); // ascending
  const double gap = evals[1] - evals[0];
  if (gap < gap_tol) throw DegenerateGroundState(gap, gap_tol);
  StateVec psi = solver.eigenvectors().col(0);
  for (Eigen::Index i = 0; i < psi.size(); ++i) {
    const double mag = std::abs(psi[i]);
    if (mag > 1e-12) {
      psi *= std::conj(psi[i]) / mag;
      break;
    }
  }
  psi.normalize();
  return PureState{std::move(psi), evals[0], gap};
}

Operator partial_trace(const Operator& rho, const std::vector<int>& keep,
                       int n_qubits) {
  const Eigen::Index dim = Eigen::Index(1) << n_qubits;
  if (rho.rows() != dim || rho.cols() != dim)
    throw DimensionError("density matrix dimension mismatch");
  for (std::size_t k = 0; k < keep.size(); ++k) {
    if (keep[k] < 0 || keep[k] >= n_qubits)
      throw DimensionError("qubit index out of range");
    if (k > 0 && keep[k] <= keep[k - 1])
      throw DimensionError("keep list must be strictly increasing");
  }
  std::vector<int> traced;
  for (int q = 0; q < n_qubits; ++q)
    if (!std::binary_search(keep.begin(), keep.end(), q)) traced.push_back(q);

  // Qubit 0 is the most significant bit of the basis index.
  auto compose = [&](Eigen::Index kept_bits, Eigen::Index env_bits) {
    Eigen::Index idx = 0;
    for (std::size_t k = 0; k < keep.size(); ++k)
      idx |= ((kept_bits >> (keep.size() - 1 - k)) & 1)
             << (n_qubits - 1 - keep[k]);
    for (std::size_t t = 0; t < traced.size(); ++t)
      idx |= ((env_bits >> (traced.size() - 1 - t)) & 1)
             << (n_qubits - 1 - traced[t]);
    return idx;
  };

  const Eigen::Index out_dim = Eigen::Index(1) << keep.size();
  const Eigen::Index env_dim = Eigen::Index(1) << traced.size();
  Operator out = Operator::Zero(out_dim, out_dim);
  for (Eigen::Index a = 0; a < out_dim; ++a)
    for (Eigen::Index b = 0; b < out_dim; ++b)
      for (Eigen::Index e = 0; e < env_dim; ++e)
        out(a, b) += rho(compose(a, e), compose(b, e));
  return out;
}

MeasurementVector measure_local(const PureState& psi, const Topology& topology) {
  return measure_local(psi, build_term_basis(topology));
}

MeasurementVector measure_local(const PureState& psi, const TermBasis& basis) {
  const Topology& topology = basis.topology;
  const Eigen::Index dim = Eigen::Index(1) << topology.n_qubits;
  if (psi.amplitudes.size() != dim)
    throw DimensionError("state dimension does not match topology");
  if (std::abs(psi.amplitudes.norm() - 1.0) > 1e-10)
    throw ValidationError("state is not normalized");

  Eigen::VectorXd values(topology.coeff_dim());
  for (std::size_t i = 0; i < basis.elements.size(); ++i) {
    Complex expect = psi.amplitudes.dot(basis.elements[i] * psi.amplitudes);
    if (topology.kind == TopologyKind::TIRing)
      expect /= static_cast<double>(basis.translates[i].size());
    if (std::abs(expect.imag()) > 1e-10)
      throw NumericalError("expectation value has nonzero imaginary part");
    values[static_cast<Eigen::Index>(i)] = expect.real();
  }
  return MeasurementVector{topology, std::move(values)};
}

double fidelity_f1(const Operator& rho1, const Operator& rho2) {
  if (rho1.rows() != rho2.rows() || rho1.cols() != rho2.cols())
    throw DimensionError("fidelity inputs must have equal dimensions");
  const double n1 = (rho1 * rho1).trace().real();
  const double n2 = (rho2 * rho2).trace().real();
  if (n1 <= 0.0 || n2 <= 0.0)
    throw ZeroNormError("fidelity_f1 undefined for zero matrix");
  return (rho1 * rho2).trace().real() / (std::sqrt(n1) * std::sqrt(n2));
}

namespace {

Eigen::VectorXd clamped_psd_eigenvalues(const Eigen::VectorXd& evals,
                                        const char* what) {
  Eigen::VectorXd out = evals;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (out[i] < -1e-10)
      throw NotPSDError(std::string(what) + ": eigenvalue " +
                        std::to_string(out[i]) + " below -1e-10");
    if (out[i] < 0.0) out[i] = 0.0;
  }
  // Zero the eigensolver's noise floor: spurious values of order
  // eps * ||M|| would otherwise be amplified by the square root.
  const double floor = out.maxCoeff() * 1e-13;
  for (Eigen::Index i = 0; i < out.size(); ++i)
    if (out[i] < floor) out[i] = 0.0;
  return out;
}

} // namespace

double fidelity_f2(const Operator& rho1, const Operator& rho2) {
  if (rho1.rows() != rho2.rows() || rho1.cols() != rho2.cols())
    throw DimensionError("fidelity inputs must have equal dimensions");
  Eigen::SelfAdjointEigenSolver<Operator> es1(rho1);
  const Eigen::VectorXd lam1 = clamped_psd_eigenvalues(es1.eigenvalues(), "rho1");
  const Operator sqrt1 = es1.eigenvectors() *
                         lam1.cwiseSqrt().asDiagonal() *
                         es1.eigenvectors().adjoint();
  Eigen::SelfAdjointEigenSolver<Operator> es2(sqrt1 * rho2 * sqrt1);
  const Eigen::VectorXd lam2 =
      clamped_psd_eigenvalues(es2.eigenvalues(), "sqrt(rho1) rho2 sqrt(rho1)");
  return lam2.cwiseSqrt().sum();
}

} // namespace qst

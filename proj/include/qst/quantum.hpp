#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "qst/topology.hpp"

namespace qst {

using Complex = std::complex<double>;
using Operator = Eigen::MatrixXcd;
using StateVec = Eigen::VectorXcd;

// Hamiltonian coefficients h = {omega, J} in canonical term order.
struct CoeffVector {
  Topology topology;
  Eigen::VectorXd values;
};

// Deduplicated 1- and 2-body Pauli expectation values in canonical term
// order; same dimension as CoeffVector for every topology.
struct MeasurementVector {
  Topology topology;
  Eigen::VectorXd values;
};

// Normalized ground state with its eigenvalue and spectral gap. Global
// phase is fixed: the first amplitude above 1e-12 is real and positive.
struct PureState {
  StateVec amplitudes;
  double energy;
  double gap;
};

// 2x2 Pauli matrix for a label (I allowed here).
Operator pauli_matrix(Pauli p);

// Tensor product over all qubits of the given single-qubit labels, qubit 0
// being the leftmost (most significant) factor. Rejects the all-identity
// list, which is excluded from the operator basis.
Operator build_basis_element(const std::vector<Pauli>& labels);

// Dense basis elements for every canonical term of a topology, cached by
// the caller. For TIRing each entry is the sum of the term's translated
// copies (and `translates` lists the individual copies for site-averaged
// measurement).
struct TermBasis {
  Topology topology;
  std::vector<Operator> elements;
  std::vector<std::vector<Operator>> translates; // TIRing only, else empty
};

TermBasis build_term_basis(const Topology& topology);

Operator build_hamiltonian(const CoeffVector& h);
Operator build_hamiltonian(const CoeffVector& h, const TermBasis& basis);

// Inverse of build_hamiltonian via Pauli orthogonality: coefficient for
// basis element B is Tr(H B) / 2^n. TIRing shared slots divide by the
// number of translated copies as well.
CoeffVector project_to_coeffs(const Operator& H, const Topology& topology);

// Eigenvector of the smallest eigenvalue. Throws DegenerateGroundState if
// the spectral gap falls below gap_tol.
PureState ground_state(const Operator& H, double gap_tol = 1e-6);

// Partial trace keeping the listed qubits (sorted, distinct).
Operator partial_trace(const Operator& rho, const std::vector<int>& keep,
                       int n_qubits);

MeasurementVector measure_local(const PureState& psi, const Topology& topology);
MeasurementVector measure_local(const PureState& psi, const TermBasis& basis);

// Normalized Hilbert-Schmidt overlap Tr(r1 r2)/sqrt(Tr r1^2 Tr r2^2).
// Defined for non-positive inputs; throws ZeroNormError on a zero matrix.
double fidelity_f1(const Operator& rho1, const Operator& rho2);

// Uhlmann fidelity Tr sqrt(sqrt(r1) r2 sqrt(r1)). Eigenvalues in
// [-1e-10, 0) are clamped to zero; anything lower throws NotPSDError.
double fidelity_f2(const Operator& rho1, const Operator& rho2);

inline Operator projector(const StateVec& psi) { return psi * psi.adjoint(); }

} // namespace qst

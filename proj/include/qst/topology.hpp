#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "qst/errors.hpp"

namespace qst {

// Pauli indices follow the convention X=1, Y=2, Z=3, I=4. Identity only
// appears implicitly (a two-body basis element with one identity factor is
// listed as a single-body term).
enum class Pauli : int { X = 1, Y = 2, Z = 3, I = 4 };

enum class TopologyKind { FullGraph, OpenChain, TIRing };

// Interaction structure of a 2-local Hamiltonian. Determines which
// coefficient slots exist and fixes their canonical order.
struct Topology {
  TopologyKind kind;
  int n_qubits;
  std::vector<std::pair<int, int>> edges; // ordered, i < j (ring wraps)

  static Topology full_graph(int n);
  static Topology open_chain(int n);
  static Topology ti_ring(int n);

  static Topology from_kind(TopologyKind kind, int n);

  // Number of coefficient / measurement slots in canonical order.
  int coeff_dim() const;

  bool operator==(const Topology& other) const {
    return kind == other.kind && n_qubits == other.n_qubits;
  }
};

std::string to_string(TopologyKind kind);
TopologyKind topology_kind_from_string(const std::string& s);

// One slot of the canonical coefficient/measurement order. For TIRing the
// slot is shared across all sites (single) or bonds (pair).
struct Term {
  bool is_pair;
  int qubit;        // single-body site (ignored for TIRing singles)
  Pauli p1;         // single-body Pauli, or first factor of a pair
  int edge;         // index into topology.edges for pair terms
  Pauli p2;         // second factor of a pair

  static Term single(int qubit, Pauli p) {
    return Term{false, qubit, p, -1, Pauli::I};
  }
  static Term pair(int edge, Pauli m, Pauli n) {
    return Term{true, -1, m, edge, n};
  }
};

// Canonical term order: all single-body terms sorted by (qubit, X<Y<Z),
// then all two-body terms sorted by (edge, first Pauli, second Pauli).
// For TIRing there is one shared slot per Pauli / Pauli pair (dim 12).
std::vector<Term> canonical_terms(const Topology& topology);

} // namespace qst

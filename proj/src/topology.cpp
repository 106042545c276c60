#include "qst/topology.hpp"

namespace qst {

namespace {

const std::array<Pauli, 3> kPaulis = {Pauli::X, Pauli::Y, Pauli::Z};

} // namespace

Topology Topology::full_graph(int n) {
  if (n < 2) throw ValidationError("full graph topology needs n >= 2");
  Topology t{TopologyKind::FullGraph, n, {}};
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) t.edges.emplace_back(i, j);
  return t;
}

Topology Topology::open_chain(int n) {
  if (n < 2) throw ValidationError("open chain topology needs n >= 2");
  Topology t{TopologyKind::OpenChain, n, {}};
  for (int i = 0; i + 1 < n; ++i) t.edges.emplace_back(i, i + 1);
  return t;
}

Topology Topology::ti_ring(int n) {
  if (n < 3) throw ValidationError("ti ring topology needs n >= 3");
  Topology t{TopologyKind::TIRing, n, {}};
  for (int i = 0; i < n; ++i) t.edges.emplace_back(i, (i + 1) % n);
  return t;
}

Topology Topology::from_kind(TopologyKind kind, int n) {
  switch (kind) {
    case TopologyKind::FullGraph: return full_graph(n);
    case TopologyKind::OpenChain: return open_chain(n);
    case TopologyKind::TIRing: return ti_ring(n);
  }
  throw ValidationError("unknown topology kind");
}

int Topology::coeff_dim() const {
  if (kind == TopologyKind::TIRing) return 12;
  return 3 * n_qubits + 9 * static_cast<int>(edges.size());
}

std::string to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::FullGraph: return "full";
    case TopologyKind::OpenChain: return "chain";
    case TopologyKind::TIRing: return "ti_ring";
  }
  return "?";
}

TopologyKind topology_kind_from_string(const std::string& s) {
  if (s == "full") return TopologyKind::FullGraph;
  if (s == "chain") return TopologyKind::OpenChain;
  if (s == "ti_ring") return TopologyKind::TIRing;
  throw ValidationError("unknown topology kind: " + s);
}

std::vector<Term> canonical_terms(const Topology& topology) {
  std::vector<Term> terms;
  if (topology.kind == TopologyKind::TIRing) {
    for (Pauli p : kPaulis) terms.push_back(Term::single(-1, p));
    for (Pauli m : kPaulis)
      for (Pauli n : kPaulis) terms.push_back(Term::pair(-1, m, n));
    return terms;
  }
  for (int q = 0; q < topology.n_qubits; ++q)
    for (Pauli p : kPaulis) terms.push_back(Term::single(q, p));
  for (int e = 0; e < static_cast<int>(topology.edges.size()); ++e)
    for (Pauli m : kPaulis)
      for (Pauli n : kPaulis) terms.push_back(Term::pair(e, m, n));
  return terms;
}

} // namespace qst

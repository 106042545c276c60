#pragma once

#include <string>
#include <vector>

#include "qst/dataset.hpp"
#include "qst/nn.hpp"
#include "qst/quantum.hpp"

namespace qst {

struct RecordEval {
  double f1 = 0.0;
  double f2 = 0.0;
  double cos_angle = 0.0;
  double gap = 0.0; // spectral gap of the predicted Hamiltonian
  bool failed = false;
};

struct Aggregate {
  double mean = 0.0;
  double max = 0.0;
  double min = 0.0;
  double stddev = 0.0;
};

struct EvalReport {
  std::vector<RecordEval> records;
  Aggregate f1;
  Aggregate f2;
  int failures = 0; // excluded from the fidelity aggregates
};

struct ReconstructResult {
  bool failed = false;
  StateVec psi;
  double gap = 0.0;
};

// Ground state of the Hamiltonian built from predicted coefficients; a
// degenerate spectrum flags the record as failed instead of throwing.
ReconstructResult reconstruct_state(const CoeffVector& h_pred, double gap_tol);

// Stack measurement vectors / coefficient vectors as matrix rows.
Eigen::MatrixXd measurement_matrix(const std::vector<DatasetRecord>& records);
Eigen::MatrixXd coefficient_matrix(const std::vector<DatasetRecord>& records);

// Per record: predict -> reconstruct -> fidelities against the ground state
// rebuilt from the stored true h.
EvalReport evaluate_model(const ModelParams& params,
                          const std::vector<DatasetRecord>& records,
                          const Topology& topology, double gap_tol,
                          int workers = 1);

struct SweepGrid {
  std::vector<int> sizes;
  std::vector<int> epochs;
  std::vector<int> batch_sizes;
  TrainConfig base_config; // epochs/batch overridden per cell
  double gap_tol = 1e-6;
};

struct SweepCell {
  int size;
  int epochs;
  int batch_size;
  EvalReport report;
};

// Each cell trains on a prefix of base_dataset (so smaller cells are strict
// subsets of larger ones) and evaluates on the shared test set.
std::vector<SweepCell> run_sweep(const SweepGrid& grid,
                                 const DatasetFile& base_dataset,
                                 const DatasetFile& test_dataset,
                                 int workers = 1);

struct NoisePoint {
  double sigma;
  EvalReport report;
};

std::vector<NoisePoint> noise_robustness_eval(const ModelParams& params,
                                              const std::vector<DatasetRecord>& records,
                                              const Topology& topology,
                                              const std::vector<double>& sigmas,
                                              std::uint64_t seed, double gap_tol,
                                              int workers = 1);

// Serialization for reports. `config_json` is echoed into the artifact for
// provenance (comment line in CSV, field in JSON).
std::string report_to_csv(const EvalReport& report, const std::string& config_json);
std::string report_to_json(const EvalReport& report, const std::string& config_json);
std::string sweep_to_csv(const std::vector<SweepCell>& cells,
                         const std::string& config_json);
std::string noise_to_csv(const std::vector<NoisePoint>& points,
                         const std::string& config_json);

} // namespace qst

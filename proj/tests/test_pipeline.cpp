#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "qst/dataset.hpp"
#include "qst/pipeline.hpp"

using namespace qst;

namespace {

SamplingSpec full4_spec() {
  SamplingSpec spec;
  spec.topology = Topology::full_graph(4);
  return spec;
}

// Identity network: evaluating it on records whose measurement slot holds
// the true coefficients makes a perfect-prediction harness.
ModelParams identity_model(int dim) {
  ModelParams params;
  params.weights.push_back(Eigen::MatrixXd::Identity(dim, dim));
  params.biases.push_back(Eigen::VectorXd::Zero(dim));
  return params;
}

std::vector<DatasetRecord> oracle_records(const DatasetFile& file) {
  std::vector<DatasetRecord> records = file.records;
  for (auto& r : records) r.m.values = r.h.values;
  return records;
}

} // namespace

TEST_CASE("reconstruct_state is scale invariant") {
  const DatasetRecord r = generate_record(full4_spec(), 8);
  const ReconstructResult base = reconstruct_state(r.h, 1e-6);
  REQUIRE_FALSE(base.failed);

  CoeffVector scaled = r.h;
  scaled.values *= 2.5;
  const ReconstructResult res = reconstruct_state(scaled, 1e-6);
  REQUIRE_FALSE(res.failed);
  CHECK(fidelity_f2(projector(base.psi), projector(res.psi)) ==
        doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("degenerate prediction is flagged, not thrown") {
  const Topology t = Topology::full_graph(2);
  CoeffVector h{t, Eigen::VectorXd::Zero(15)};
  h.values[2] = 1.0; // sigma_z on qubit 0 only: twofold degenerate
  const ReconstructResult res = reconstruct_state(h, 1e-6);
  CHECK(res.failed);

  Eigen::VectorXd bad = h.values;
  bad[0] = std::nan("");
  CHECK_THROWS_AS(reconstruct_state(CoeffVector{t, bad}, 1e-6), ValidationError);
}

TEST_CASE("oracle closure: true coefficients reconstruct perfectly") {
  const DatasetFile file = generate_dataset(full4_spec(), 100, 31, 4);
  const TermBasis basis = build_term_basis(file.spec.topology);
  for (const DatasetRecord& r : file.records) {
    const ReconstructResult res = reconstruct_state(r.h, file.spec.gap_tol);
    REQUIRE_FALSE(res.failed);
    const PureState truth = ground_state(build_hamiltonian(r.h, basis), file.spec.gap_tol);
    const Operator rho_t = projector(truth.amplitudes);
    const Operator rho_r = projector(res.psi);
    CHECK(fidelity_f1(rho_t, rho_r) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(fidelity_f2(rho_t, rho_r) == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("evaluate_model with a perfect oracle model") {
  const DatasetFile file = generate_dataset(full4_spec(), 40, 57, 4);
  const auto records = oracle_records(file);
  const EvalReport report =
      evaluate_model(identity_model(66), records, file.spec.topology, 1e-6);
  CHECK(report.failures == 0);
  CHECK(report.f1.mean == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(report.f2.mean == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("random untrained model scores poorly") {
  const DatasetFile file = generate_dataset(full4_spec(), 50, 77, 4);
  const ModelParams random_model = init_params(LayerSpec{{66, 300, 300, 66}}, 5);
  const EvalReport report =
      evaluate_model(random_model, file.records, file.spec.topology, 1e-6);
  CHECK(report.f1.mean < 0.9);
}

TEST_CASE("evaluation is invariant under output scaling") {
  const DatasetFile file = generate_dataset(full4_spec(), 30, 91, 4);
  const ModelParams model = init_params(LayerSpec{{66, 40, 66}}, 3);
  ModelParams scaled = model;
  scaled.weights.back() *= 7.0;
  scaled.biases.back() *= 7.0;

  const EvalReport a = evaluate_model(model, file.records, file.spec.topology, 1e-6);
  const EvalReport b = evaluate_model(scaled, file.records, file.spec.topology, 1e-6);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].failed == b.records[i].failed);
    if (!a.records[i].failed) {
      CHECK(a.records[i].f1 == doctest::Approx(b.records[i].f1).epsilon(1e-10));
      CHECK(a.records[i].f2 == doctest::Approx(b.records[i].f2).epsilon(1e-10));
    }
  }
}

TEST_CASE("aggregates recompute from per-record values") {
  const DatasetFile file = generate_dataset(full4_spec(), 30, 13, 4);
  const ModelParams model = init_params(LayerSpec{{66, 40, 66}}, 3);
  const EvalReport report =
      evaluate_model(model, file.records, file.spec.topology, 1e-6);

  std::vector<double> f1s;
  for (const auto& r : report.records)
    if (!r.failed) f1s.push_back(r.f1);
  double mean = 0.0;
  for (double f : f1s) mean += f;
  mean /= static_cast<double>(f1s.size());
  double var = 0.0;
  for (double f : f1s) var += (f - mean) * (f - mean);
  CHECK(report.f1.mean == mean);
  CHECK(report.f1.stddev == std::sqrt(var / static_cast<double>(f1s.size())));
  CHECK(report.f1.min <= report.f1.mean);
  CHECK(report.f1.mean <= report.f1.max);

  // Worker count must not change results.
  const EvalReport parallel =
      evaluate_model(model, file.records, file.spec.topology, 1e-6, 4);
  CHECK(parallel.f1.mean == report.f1.mean);
  CHECK(parallel.f2.stddev == report.f2.stddev);
}

TEST_CASE("single-cell sweep equals direct train plus evaluate") {
  const DatasetFile base = generate_dataset(full4_spec(), 60, 101, 4);
  const DatasetFile test = generate_dataset(full4_spec(), 20, 102, 4);

  SweepGrid grid;
  grid.sizes = {50};
  grid.epochs = {3};
  grid.batch_sizes = {16};
  grid.base_config.layer_spec = LayerSpec{{66, 30, 66}};
  grid.base_config.seed = 9;
  const auto cells = run_sweep(grid, base, test);
  REQUIRE(cells.size() == 1);

  TrainConfig config = grid.base_config;
  config.epochs = 3;
  config.batch_size = 16;
  const TrainResult direct =
      train(measurement_matrix(base.records).topRows(50),
            coefficient_matrix(base.records).topRows(50), config);
  const EvalReport report =
      evaluate_model(direct.params, test.records, test.spec.topology, grid.gap_tol);
  CHECK(cells[0].report.f1.mean == report.f1.mean);
  CHECK(cells[0].report.f2.mean == report.f2.mean);

  SweepGrid too_big = grid;
  too_big.sizes = {500};
  CHECK_THROWS_AS(run_sweep(too_big, base, test), ValidationError);
}

TEST_CASE("noise robustness evaluation") {
  const DatasetFile file = generate_dataset(full4_spec(), 25, 19, 4);
  const auto records = oracle_records(file);
  const ModelParams model = identity_model(66);

  const auto points = noise_robustness_eval(model, records, file.spec.topology,
                                            {0.0, 0.02, 0.05}, 7, 1e-6);
  REQUIRE(points.size() == 3);
  const EvalReport direct = evaluate_model(model, records, file.spec.topology, 1e-6);
  CHECK(points[0].report.f1.mean == direct.f1.mean);
  CHECK(points[0].report.f2.mean == direct.f2.mean);
  // Fidelity does not improve under noise.
  CHECK(points[1].report.f1.mean <= points[0].report.f1.mean + 1e-9);
  CHECK(points[2].report.f1.mean <= points[0].report.f1.mean + 1e-9);
}

TEST_CASE("report serialization") {
  const DatasetFile file = generate_dataset(full4_spec(), 5, 23, 1);
  const EvalReport report = evaluate_model(identity_model(66), oracle_records(file),
                                           file.spec.topology, 1e-6);
  const std::string csv = report_to_csv(report, R"({"run":"test"})");
  CHECK(csv.find("# config {\"run\":\"test\"}") == 0);
  CHECK(csv.find("record_index,f1,f2,cos_angle,gap,failed") != std::string::npos);

  const std::string j = report_to_json(report, R"({"run":"test"})");
  CHECK(j.find("\"mean\"") != std::string::npos);
  CHECK(j.find("\"failures\"") != std::string::npos);
  CHECK(j.find("\"run\"") != std::string::npos);
}

#include "qst/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "qst/rng.hpp"

namespace qst {

using nlohmann::json;

ReconstructResult reconstruct_state(const CoeffVector& h_pred, double gap_tol) {
  if (!h_pred.values.allFinite())
    throw ValidationError("predicted coefficients contain non-finite entries");
  const Operator H = build_hamiltonian(h_pred);
  try {
    PureState psi = ground_state(H, gap_tol);
    return ReconstructResult{false, std::move(psi.amplitudes), psi.gap};
  } catch (const DegenerateGroundState& e) {
    return ReconstructResult{true, {}, e.gap};
  }
}

Eigen::MatrixXd measurement_matrix(const std::vector<DatasetRecord>& records) {
  if (records.empty()) return {};
  Eigen::MatrixXd x(records.size(), records[0].m.values.size());
  for (std::size_t i = 0; i < records.size(); ++i)
    x.row(static_cast<Eigen::Index>(i)) = records[i].m.values.transpose();
  return x;
}

Eigen::MatrixXd coefficient_matrix(const std::vector<DatasetRecord>& records) {
  if (records.empty()) return {};
  Eigen::MatrixXd y(records.size(), records[0].h.values.size());
  for (std::size_t i = 0; i < records.size(); ++i)
    y.row(static_cast<Eigen::Index>(i)) = records[i].h.values.transpose();
  return y;
}

namespace {

Aggregate aggregate(const std::vector<double>& xs) {
  Aggregate a;
  if (xs.empty()) return a;
  a.max = *std::max_element(xs.begin(), xs.end());
  a.min = *std::min_element(xs.begin(), xs.end());
  double sum = 0.0;
  for (double x : xs) sum += x;
  a.mean = sum / static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - a.mean) * (x - a.mean);
  a.stddev = std::sqrt(var / static_cast<double>(xs.size()));
  return a;
}

RecordEval eval_one(const ModelParams& params, const DatasetRecord& record,
                    const TermBasis& basis, double gap_tol) {
  RecordEval out;
  const Eigen::VectorXd pred = forward(params, record.m.values);
  CoeffVector h_pred{basis.topology, pred};

  const double np = pred.norm();
  const double nt = record.h.values.norm();
  out.cos_angle = (np > 0.0 && nt > 0.0) ? pred.dot(record.h.values) / (np * nt) : 0.0;

  if (!pred.allFinite()) {
    out.failed = true;
    return out;
  }
  const Operator H_pred = build_hamiltonian(h_pred, basis);
  try {
    const PureState psi_pred = ground_state(H_pred, gap_tol);
    out.gap = psi_pred.gap;
    const PureState psi_true = ground_state(build_hamiltonian(record.h, basis), gap_tol);
    const Operator rho_true = projector(psi_true.amplitudes);
    const Operator rho_pred = projector(psi_pred.amplitudes);
    out.f1 = fidelity_f1(rho_true, rho_pred);
    out.f2 = fidelity_f2(rho_true, rho_pred);
  } catch (const DegenerateGroundState& e) {
    out.failed = true;
    out.gap = e.gap;
  }
  return out;
}

EvalReport finalize(std::vector<RecordEval> evals) {
  EvalReport report;
  report.records = std::move(evals);
  std::vector<double> f1s, f2s;
  for (const RecordEval& r : report.records) {
    if (r.failed) {
      ++report.failures;
      continue;
    }
    f1s.push_back(r.f1);
    f2s.push_back(r.f2);
  }
  report.f1 = aggregate(f1s);
  report.f2 = aggregate(f2s);
  return report;
}

} // namespace

EvalReport evaluate_model(const ModelParams& params,
                          const std::vector<DatasetRecord>& records,
                          const Topology& topology, double gap_tol, int workers) {
  std::vector<RecordEval> evals(records.size());
  if (workers < 1) workers = 1;
  workers = std::min<int>(workers, static_cast<int>(records.size()));

  auto run = [&](int w) {
    const TermBasis basis = build_term_basis(topology);
    for (std::size_t i = static_cast<std::size_t>(w); i < records.size();
         i += static_cast<std::size_t>(workers))
      evals[i] = eval_one(params, records[i], basis, gap_tol);
  };
  if (workers <= 1) {
    run(0);
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) threads.emplace_back(run, w);
    for (auto& t : threads) t.join();
  }
  return finalize(std::move(evals));
}

std::vector<SweepCell> run_sweep(const SweepGrid& grid,
                                 const DatasetFile& base_dataset,
                                 const DatasetFile& test_dataset, int workers) {
  if (grid.sizes.empty() || grid.epochs.empty() || grid.batch_sizes.empty())
    throw ValidationError("sweep grid axes must be nonempty");
  const int max_size = *std::max_element(grid.sizes.begin(), grid.sizes.end());
  if (static_cast<std::size_t>(max_size) > base_dataset.records.size())
    throw ValidationError("base dataset smaller than largest sweep size");

  const Eigen::MatrixXd base_x = measurement_matrix(base_dataset.records);
  const Eigen::MatrixXd base_y = coefficient_matrix(base_dataset.records);

  std::vector<SweepCell> cells;
  for (int size : grid.sizes)
    for (int epochs : grid.epochs)
      for (int batch : grid.batch_sizes) {
        TrainConfig config = grid.base_config;
        config.epochs = epochs;
        config.batch_size = batch;
        const TrainResult trained =
            train(base_x.topRows(size), base_y.topRows(size), config);
        EvalReport report = evaluate_model(trained.params, test_dataset.records,
                                           test_dataset.spec.topology,
                                           grid.gap_tol, workers);
        cells.push_back(SweepCell{size, epochs, batch, std::move(report)});
      }
  return cells;
}

std::vector<NoisePoint> noise_robustness_eval(const ModelParams& params,
                                              const std::vector<DatasetRecord>& records,
                                              const Topology& topology,
                                              const std::vector<double>& sigmas,
                                              std::uint64_t seed, double gap_tol,
                                              int workers) {
  std::vector<NoisePoint> points;
  for (std::size_t s = 0; s < sigmas.size(); ++s) {
    if (sigmas[s] < 0.0) throw ValidationError("sigma must be >= 0");
    std::vector<DatasetRecord> noisy = records;
    for (std::size_t i = 0; i < noisy.size(); ++i)
      noisy[i].m = add_measurement_noise(
          noisy[i].m, sigmas[s], mix_seed(mix_seed(seed, s), i));
    points.push_back(NoisePoint{
        sigmas[s], evaluate_model(params, noisy, topology, gap_tol, workers)});
  }
  return points;
}

namespace {

std::string config_comment(const std::string& config_json) {
  return "# config " + config_json + "\n";
}

std::ostringstream csv_stream() {
  std::ostringstream out;
  out.precision(17); // float64 round-trip
  return out;
}

json aggregate_to_json(const Aggregate& a) {
  return json{{"max", a.max}, {"min", a.min}, {"std", a.stddev}, {"mean", a.mean}};
}

} // namespace

std::string report_to_csv(const EvalReport& report, const std::string& config_json) {
  std::ostringstream out = csv_stream();
  out << config_comment(config_json);
  out << "record_index,f1,f2,cos_angle,gap,failed\n";
  for (std::size_t i = 0; i < report.records.size(); ++i) {
    const RecordEval& r = report.records[i];
    out << i << ',' << r.f1 << ',' << r.f2 << ',' << r.cos_angle << ',' << r.gap
        << ',' << (r.failed ? 1 : 0) << '\n';
  }
  return out.str();
}

std::string report_to_json(const EvalReport& report, const std::string& config_json) {
  json j{{"f1", aggregate_to_json(report.f1)},
         {"f2", aggregate_to_json(report.f2)},
         {"failures", report.failures},
         {"count", report.records.size()}};
  try {
    j["config"] = json::parse(config_json);
  } catch (const json::exception&) {
    j["config"] = config_json;
  }
  return j.dump(2);
}

std::string sweep_to_csv(const std::vector<SweepCell>& cells,
                         const std::string& config_json) {
  std::ostringstream out = csv_stream();
  out << config_comment(config_json);
  // Table layout: one row per (size, batch), f1/f2 columns per epoch value.
  std::vector<int> epochs;
  for (const SweepCell& c : cells)
    if (std::find(epochs.begin(), epochs.end(), c.epochs) == epochs.end())
      epochs.push_back(c.epochs);
  std::sort(epochs.begin(), epochs.end());

  out << "size,batch";
  for (int e : epochs) out << ",f1_epoch" << e << ",f2_epoch" << e;
  out << ",failures\n";

  std::vector<std::pair<int, int>> rows;
  for (const SweepCell& c : cells) {
    std::pair<int, int> key{c.size, c.batch_size};
    if (std::find(rows.begin(), rows.end(), key) == rows.end()) rows.push_back(key);
  }
  for (const auto& [size, batch] : rows) {
    out << size << ',' << batch;
    int failures = 0;
    for (int e : epochs) {
      const auto it = std::find_if(cells.begin(), cells.end(), [&](const SweepCell& c) {
        return c.size == size && c.batch_size == batch && c.epochs == e;
      });
      if (it == cells.end()) {
        out << ",,";
      } else {
        out << ',' << it->report.f1.mean << ',' << it->report.f2.mean;
        failures += it->report.failures;
      }
    }
    out << ',' << failures << '\n';
  }
  return out.str();
}

std::string noise_to_csv(const std::vector<NoisePoint>& points,
                         const std::string& config_json) {
  std::ostringstream out = csv_stream();
  out << config_comment(config_json);
  out << "sigma,mean_f1,mean_f2,std_f1,std_f2,failures\n";
  for (const NoisePoint& p : points)
    out << p.sigma << ',' << p.report.f1.mean << ',' << p.report.f2.mean << ','
        << p.report.f1.stddev << ',' << p.report.f2.stddev << ','
        << p.report.failures << '\n';
  return out.str();
}

} // namespace qst

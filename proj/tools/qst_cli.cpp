#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qst/dataset.hpp"
#include "qst/nn.hpp"
#include "qst/pipeline.hpp"
#include "qst/quantum.hpp"

using nlohmann::json;

namespace {

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw qst::ValidationError("cannot open config file " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw qst::ValidationError(std::string("malformed config JSON: ") + e.what());
  }
}

// Config supplies defaults; explicit flags win.
template <typename T>
void apply_cfg(const CLI::App* cmd, const json& cfg, const std::string& flag,
               const std::string& key, T& var) {
  if (cmd->count(flag) == 0 && cfg.contains(key)) var = cfg.at(key).get<T>();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw qst::Error("cannot open " + path + " for writing");
  out << content;
  if (!out) throw qst::Error("write failed for " + path);
}

struct CommonOpts {
  std::string config_path;
  std::uint64_t seed = 0;
  int workers = 1;
  double gap_tol = 1e-6;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "JSON config file (flags override)");
  cmd->add_option("--seed", opts.seed, "master seed");
  cmd->add_option("--workers", opts.workers, "worker thread count");
  cmd->add_option("--gap-tol", opts.gap_tol, "spectral gap tolerance");
}

qst::SamplingSpec spec_from_opts(const std::string& topology, int n_qubits,
                                 double mean_lo, double mean_hi, double std_lo,
                                 double std_hi, double gap_tol, int max_resamples) {
  qst::SamplingSpec spec;
  spec.topology = qst::Topology::from_kind(
      qst::topology_kind_from_string(topology), n_qubits);
  spec.mean_range = {mean_lo, mean_hi};
  spec.std_range = {std_lo, std_hi};
  spec.gap_tol = gap_tol;
  spec.max_resamples = max_resamples;
  spec.validate();
  return spec;
}

std::vector<int> default_hidden(int io_dim) {
  // Paper-style widths: 66-300-300-66 for the 4-qubit full graph,
  // 75-150-300-300-150-75 for the 7-qubit chain.
  if (io_dim == 75) return {150, 300, 300, 150};
  return {300, 300};
}

qst::LayerSpec make_layer_spec(int io_dim, const std::vector<int>& hidden) {
  qst::LayerSpec spec;
  spec.sizes.push_back(io_dim);
  const std::vector<int>& h = hidden.empty() ? default_hidden(io_dim) : hidden;
  spec.sizes.insert(spec.sizes.end(), h.begin(), h.end());
  spec.sizes.push_back(io_dim);
  spec.validate();
  return spec;
}

json topology_json(const qst::Topology& t) {
  return json{{"kind", qst::to_string(t.kind)}, {"n", t.n_qubits}};
}

int run(int argc, char** argv) {
  CLI::App app{"Neural-network quantum state tomography from 2-local measurements"};
  app.require_subcommand(1);

  // --- gen ---
  auto* gen = app.add_subcommand("gen", "generate a random-Hamiltonian dataset");
  CommonOpts gen_common;
  add_common(gen, gen_common);
  std::string gen_topology = "full";
  int gen_n = 4, gen_count = 0, gen_max_resamples = 64;
  double gen_mean_lo = -1.0, gen_mean_hi = 1.0, gen_std_lo = 0.5, gen_std_hi = 1.5;
  std::string gen_out;
  gen->add_option("--topology", gen_topology, "full|chain|ti_ring");
  gen->add_option("--n-qubits", gen_n, "number of qubits");
  gen->add_option("--count", gen_count, "number of records");
  gen->add_option("--out", gen_out, "output JSONL path")->required();
  gen->add_option("--mean-lo", gen_mean_lo);
  gen->add_option("--mean-hi", gen_mean_hi);
  gen->add_option("--std-lo", gen_std_lo);
  gen->add_option("--std-hi", gen_std_hi);
  gen->add_option("--max-resamples", gen_max_resamples);

  // --- train ---
  auto* train_cmd = app.add_subcommand("train", "train a network on a dataset");
  CommonOpts train_common;
  add_common(train_cmd, train_common);
  std::string train_data, train_out, train_history;
  int train_epochs = 100, train_batch = 512;
  double train_lr = 0.001, train_val_fraction = 0.2;
  std::vector<int> train_hidden;
  train_cmd->add_option("--data", train_data, "training dataset (JSONL)")->required();
  train_cmd->add_option("--out", train_out, "checkpoint output path")->required();
  train_cmd->add_option("--history", train_history, "per-epoch loss CSV path");
  train_cmd->add_option("--epochs", train_epochs);
  train_cmd->add_option("--batch", train_batch);
  train_cmd->add_option("--lr", train_lr);
  train_cmd->add_option("--val-fraction", train_val_fraction);
  train_cmd->add_option("--hidden", train_hidden, "hidden layer widths")->delimiter(',');

  // --- eval ---
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a test set");
  CommonOpts eval_common;
  add_common(eval_cmd, eval_common);
  std::string eval_ckpt, eval_data, eval_csv, eval_json;
  eval_cmd->add_option("--checkpoint", eval_ckpt)->required();
  eval_cmd->add_option("--data", eval_data, "test dataset (JSONL)")->required();
  eval_cmd->add_option("--out-csv", eval_csv, "per-record CSV path");
  eval_cmd->add_option("--out-json", eval_json, "aggregate JSON path");

  // --- predict ---
  auto* predict_cmd =
      app.add_subcommand("predict", "predict coefficients from one measurement vector");
  CommonOpts predict_common;
  add_common(predict_cmd, predict_common);
  std::string predict_ckpt, predict_in, predict_out;
  predict_cmd->add_option("--checkpoint", predict_ckpt)->required();
  predict_cmd->add_option("--input", predict_in,
                          "JSON file with measurement vector (array or {\"m\": [...]})")
      ->required();
  predict_cmd->add_option("--out", predict_out, "output JSON path");

  // --- sweep ---
  auto* sweep_cmd = app.add_subcommand("sweep", "train/evaluate over a parameter grid");
  CommonOpts sweep_common;
  add_common(sweep_cmd, sweep_common);
  std::string sweep_base, sweep_test, sweep_out;
  std::vector<int> sweep_sizes, sweep_epochs{100}, sweep_batches{512}, sweep_hidden;
  double sweep_lr = 0.001;
  sweep_cmd->add_option("--base", sweep_base, "base training dataset")->required();
  sweep_cmd->add_option("--test", sweep_test, "shared test dataset")->required();
  sweep_cmd->add_option("--out", sweep_out, "sweep table CSV path")->required();
  sweep_cmd->add_option("--sizes", sweep_sizes, "training set sizes")
      ->delimiter(',')->required();
  sweep_cmd->add_option("--epochs", sweep_epochs)->delimiter(',');
  sweep_cmd->add_option("--batches", sweep_batches)->delimiter(',');
  sweep_cmd->add_option("--lr", sweep_lr);
  sweep_cmd->add_option("--hidden", sweep_hidden)->delimiter(',');

  // --- noise-eval ---
  auto* noise_cmd =
      app.add_subcommand("noise-eval", "evaluate under synthetic measurement noise");
  CommonOpts noise_common;
  add_common(noise_cmd, noise_common);
  std::string noise_ckpt, noise_data, noise_out;
  std::vector<double> noise_sigmas;
  noise_cmd->add_option("--checkpoint", noise_ckpt)->required();
  noise_cmd->add_option("--data", noise_data)->required();
  noise_cmd->add_option("--out", noise_out, "noise curve CSV path")->required();
  noise_cmd->add_option("--sigmas", noise_sigmas)->delimiter(',')->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2; // usage errors have a stable exit code
  }

  if (gen->parsed()) {
    const json cfg = load_config(gen_common.config_path);
    apply_cfg(gen, cfg, "--topology", "topology", gen_topology);
    apply_cfg(gen, cfg, "--n-qubits", "n_qubits", gen_n);
    apply_cfg(gen, cfg, "--count", "count", gen_count);
    apply_cfg(gen, cfg, "--seed", "seed", gen_common.seed);
    apply_cfg(gen, cfg, "--workers", "workers", gen_common.workers);
    apply_cfg(gen, cfg, "--gap-tol", "gap_tol", gen_common.gap_tol);
    apply_cfg(gen, cfg, "--mean-lo", "mean_lo", gen_mean_lo);
    apply_cfg(gen, cfg, "--mean-hi", "mean_hi", gen_mean_hi);
    apply_cfg(gen, cfg, "--std-lo", "std_lo", gen_std_lo);
    apply_cfg(gen, cfg, "--std-hi", "std_hi", gen_std_hi);
    apply_cfg(gen, cfg, "--max-resamples", "max_resamples", gen_max_resamples);
    if (gen_count < 1) throw qst::ValidationError("--count must be >= 1");

    const qst::SamplingSpec spec =
        spec_from_opts(gen_topology, gen_n, gen_mean_lo, gen_mean_hi, gen_std_lo,
                       gen_std_hi, gen_common.gap_tol, gen_max_resamples);
    const auto t0 = std::chrono::steady_clock::now();
    const qst::DatasetFile file =
        qst::generate_dataset(spec, gen_count, gen_common.seed, gen_common.workers);
    qst::write_dataset(file, gen_out);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    double mean_gap = 0.0;
    for (const auto& r : file.records) mean_gap += r.gap;
    mean_gap /= static_cast<double>(file.records.size());
    std::cout << "wrote " << file.records.size() << " records to " << gen_out
              << " (mean gap " << mean_gap << ", " << secs << " s)\n";
    return 0;
  }

  if (train_cmd->parsed()) {
    const json cfg = load_config(train_common.config_path);
    apply_cfg(train_cmd, cfg, "--epochs", "epochs", train_epochs);
    apply_cfg(train_cmd, cfg, "--batch", "batch_size", train_batch);
    apply_cfg(train_cmd, cfg, "--lr", "lr", train_lr);
    apply_cfg(train_cmd, cfg, "--seed", "seed", train_common.seed);
    apply_cfg(train_cmd, cfg, "--val-fraction", "validation_fraction", train_val_fraction);
    apply_cfg(train_cmd, cfg, "--hidden", "hidden", train_hidden);

    const qst::DatasetFile data = qst::read_dataset(train_data);
    if (data.records.empty()) throw qst::ValidationError("training dataset is empty");
    qst::TrainConfig config;
    config.layer_spec = make_layer_spec(data.spec.topology.coeff_dim(), train_hidden);
    config.epochs = train_epochs;
    config.batch_size = train_batch;
    config.lr = train_lr;
    config.seed = train_common.seed;
    config.validation_fraction = train_val_fraction;

    const json resolved{{"command", "train"},
                        {"data", train_data},
                        {"topology", topology_json(data.spec.topology)},
                        {"layer_sizes", config.layer_spec.sizes},
                        {"epochs", config.epochs},
                        {"batch_size", config.batch_size},
                        {"lr", config.lr},
                        {"seed", config.seed},
                        {"validation_fraction", config.validation_fraction}};

    const auto t0 = std::chrono::steady_clock::now();
    const qst::TrainResult result = qst::train(
        qst::measurement_matrix(data.records), qst::coefficient_matrix(data.records),
        config);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    qst::save_checkpoint(result.params, train_out, resolved.dump());
    if (!train_history.empty()) {
      std::ostringstream hist;
      hist.precision(17);
      hist << "# config " << resolved.dump() << "\n";
      hist << "epoch,train_loss,val_loss\n";
      for (std::size_t e = 0; e < result.history.size(); ++e)
        hist << (e + 1) << ',' << result.history[e].train_loss << ','
             << result.history[e].val_loss << '\n';
      write_file(train_history, hist.str());
    }
    std::cout << "trained " << config.epochs << " epochs in " << secs
              << " s, final train loss " << result.history.back().train_loss
              << ", val loss " << result.history.back().val_loss << ", checkpoint "
              << train_out << "\n";
    return 0;
  }

  if (eval_cmd->parsed()) {
    const json cfg = load_config(eval_common.config_path);
    apply_cfg(eval_cmd, cfg, "--workers", "workers", eval_common.workers);
    apply_cfg(eval_cmd, cfg, "--gap-tol", "gap_tol", eval_common.gap_tol);

    const auto [params, meta] = qst::load_checkpoint(eval_ckpt);
    const qst::DatasetFile data = qst::read_dataset(eval_data);
    if (data.records.empty()) throw qst::ValidationError("test dataset is empty");
    if (data.spec.topology.coeff_dim() != params.layer_spec().input_dim())
      throw qst::DimensionError("checkpoint input dim does not match dataset");

    const json resolved{{"command", "eval"}, {"checkpoint", eval_ckpt},
                        {"checkpoint_meta", json::parse(meta)},
                        {"data", eval_data}, {"gap_tol", eval_common.gap_tol}};
    const qst::EvalReport report =
        qst::evaluate_model(params, data.records, data.spec.topology,
                            eval_common.gap_tol, eval_common.workers);
    if (!eval_csv.empty()) write_file(eval_csv, qst::report_to_csv(report, resolved.dump()));
    if (!eval_json.empty())
      write_file(eval_json, qst::report_to_json(report, resolved.dump()));
    std::cout << "f1 mean " << report.f1.mean << " max " << report.f1.max << " min "
              << report.f1.min << " std " << report.f1.stddev << " | f2 mean "
              << report.f2.mean << " max " << report.f2.max << " min "
              << report.f2.min << " std " << report.f2.stddev << " | failures "
              << report.failures << "/" << report.records.size() << "\n";
    return 0;
  }

  if (predict_cmd->parsed()) {
    const auto [params, meta] = qst::load_checkpoint(predict_ckpt);
    const json meta_json = json::parse(meta);
    if (!meta_json.contains("topology"))
      throw qst::ValidationError("checkpoint lacks topology metadata");
    const qst::Topology topology = qst::Topology::from_kind(
        qst::topology_kind_from_string(
            meta_json.at("topology").at("kind").get<std::string>()),
        meta_json.at("topology").at("n").get<int>());

    std::ifstream in(predict_in);
    if (!in) throw qst::ValidationError("cannot open " + predict_in);
    json input;
    try {
      input = json::parse(in);
    } catch (const json::exception& e) {
      throw qst::ValidationError(std::string("malformed input JSON: ") + e.what());
    }
    const json& arr = input.is_array() ? input : input.at("m");
    Eigen::VectorXd m(static_cast<Eigen::Index>(arr.size()));
    for (Eigen::Index i = 0; i < m.size(); ++i)
      m[i] = arr[static_cast<std::size_t>(i)].get<double>();
    if (m.size() != params.layer_spec().input_dim())
      throw qst::ValidationError("measurement vector length does not match checkpoint");
    for (Eigen::Index i = 0; i < m.size(); ++i)
      if (m[i] < -1.0 - 1e-9 || m[i] > 1.0 + 1e-9)
        throw qst::ValidationError("measurement entry outside [-1, 1]");

    const Eigen::VectorXd pred = qst::forward(params, m);
    const qst::CoeffVector h_pred{topology, pred};
    const qst::ReconstructResult rec =
        qst::reconstruct_state(h_pred, predict_common.gap_tol);

    json out{{"config", json{{"command", "predict"}, {"checkpoint", predict_ckpt},
                             {"input", predict_in}, {"gap_tol", predict_common.gap_tol}}},
             {"topology", topology_json(topology)},
             {"h_pred", std::vector<double>(pred.data(), pred.data() + pred.size())},
             {"degenerate", rec.failed},
             {"gap", rec.gap}};
    if (!rec.failed) {
      json amps = json::array();
      for (Eigen::Index i = 0; i < rec.psi.size(); ++i)
        amps.push_back({rec.psi[i].real(), rec.psi[i].imag()});
      out["amplitudes"] = std::move(amps);
    }
    if (!predict_out.empty()) write_file(predict_out, out.dump(2));
    std::cout << (rec.failed ? "degenerate reconstruction, gap "
                             : "predicted gap ")
              << rec.gap << "\n";
    return 0;
  }

  if (sweep_cmd->parsed()) {
    const json cfg = load_config(sweep_common.config_path);
    apply_cfg(sweep_cmd, cfg, "--sizes", "sizes", sweep_sizes);
    apply_cfg(sweep_cmd, cfg, "--epochs", "epochs", sweep_epochs);
    apply_cfg(sweep_cmd, cfg, "--batches", "batches", sweep_batches);
    apply_cfg(sweep_cmd, cfg, "--lr", "lr", sweep_lr);
    apply_cfg(sweep_cmd, cfg, "--seed", "seed", sweep_common.seed);
    apply_cfg(sweep_cmd, cfg, "--hidden", "hidden", sweep_hidden);

    auto dedup = [](std::vector<int>& v, const char* what) {
      std::vector<int> unique;
      for (int x : v)
        if (std::find(unique.begin(), unique.end(), x) == unique.end())
          unique.push_back(x);
        else
          std::cerr << "warning: duplicate " << what << " value " << x << " ignored\n";
      v = unique;
    };
    dedup(sweep_sizes, "size");
    dedup(sweep_epochs, "epoch");
    dedup(sweep_batches, "batch");

    const qst::DatasetFile base = qst::read_dataset(sweep_base);
    const qst::DatasetFile test = qst::read_dataset(sweep_test);
    qst::SweepGrid grid;
    grid.sizes = sweep_sizes;
    grid.epochs = sweep_epochs;
    grid.batch_sizes = sweep_batches;
    grid.gap_tol = sweep_common.gap_tol;
    grid.base_config.layer_spec =
        make_layer_spec(base.spec.topology.coeff_dim(), sweep_hidden);
    grid.base_config.lr = sweep_lr;
    grid.base_config.seed = sweep_common.seed;

    const json resolved{{"command", "sweep"}, {"base", sweep_base}, {"test", sweep_test},
                        {"sizes", grid.sizes}, {"epochs", grid.epochs},
                        {"batches", grid.batch_sizes},
                        {"layer_sizes", grid.base_config.layer_spec.sizes},
                        {"lr", sweep_lr}, {"seed", sweep_common.seed},
                        {"gap_tol", grid.gap_tol}};
    const auto cells = qst::run_sweep(grid, base, test, sweep_common.workers);
    write_file(sweep_out, qst::sweep_to_csv(cells, resolved.dump()));
    for (const auto& c : cells)
      std::cout << "size " << c.size << " epochs " << c.epochs << " batch "
                << c.batch_size << ": f1 " << c.report.f1.mean << " f2 "
                << c.report.f2.mean << " failures " << c.report.failures << "\n";
    return 0;
  }

  if (noise_cmd->parsed()) {
    const auto [params, meta] = qst::load_checkpoint(noise_ckpt);
    const qst::DatasetFile data = qst::read_dataset(noise_data);
    const json resolved{{"command", "noise-eval"}, {"checkpoint", noise_ckpt},
                        {"data", noise_data}, {"sigmas", noise_sigmas},
                        {"seed", noise_common.seed}, {"gap_tol", noise_common.gap_tol}};
    const auto points = qst::noise_robustness_eval(
        params, data.records, data.spec.topology, noise_sigmas, noise_common.seed,
        noise_common.gap_tol, noise_common.workers);
    write_file(noise_out, qst::noise_to_csv(points, resolved.dump()));
    for (const auto& p : points)
      std::cout << "sigma " << p.sigma << ": f1 " << p.report.f1.mean << " f2 "
                << p.report.f2.mean << "\n";
    return 0;
  }

  return 0;
}

} // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const qst::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

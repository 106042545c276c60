#include "qst/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "qst/rng.hpp"

namespace qst {

using nlohmann::json;

void SamplingSpec::validate() const {
  if (mean_range.first > mean_range.second)
    throw ValidationError("mean_range lower bound exceeds upper bound");
  if (std_range.first <= 0.0)
    throw ValidationError("std_range lower bound must be positive");
  if (std_range.first > std_range.second)
    throw ValidationError("std_range lower bound exceeds upper bound");
  if (max_resamples < 1) throw ValidationError("max_resamples must be >= 1");
}

CoeffVector sample_coeffs(const SamplingSpec& spec, std::uint64_t record_seed) {
  spec.validate();
  SplitMix64 rng(record_seed);
  const double mu = rng.next_uniform(spec.mean_range.first, spec.mean_range.second);
  const double s = rng.next_uniform(spec.std_range.first, spec.std_range.second);
  Eigen::VectorXd values(spec.topology.coeff_dim());
  for (Eigen::Index i = 0; i < values.size(); ++i)
    values[i] = rng.next_normal(mu, s);
  return CoeffVector{spec.topology, std::move(values)};
}

DatasetRecord generate_record(const SamplingSpec& spec, std::uint64_t record_seed,
                              const TermBasis& basis) {
  spec.validate();
  for (int attempt = 0; attempt < spec.max_resamples; ++attempt) {
    const std::uint64_t seed =
        attempt == 0 ? record_seed : mix_seed(record_seed, static_cast<std::uint64_t>(attempt));
    CoeffVector h = sample_coeffs(spec, seed);
    const Operator H = build_hamiltonian(h, basis);
    try {
      PureState psi = ground_state(H, spec.gap_tol);
      MeasurementVector m = measure_local(psi, basis);
      return DatasetRecord{record_seed, std::move(h), std::move(m), psi.energy,
                           psi.gap};
    } catch (const DegenerateGroundState&) {
      continue;
    }
  }
  throw GenerationFailed(record_seed, spec.max_resamples);
}

DatasetRecord generate_record(const SamplingSpec& spec, std::uint64_t record_seed) {
  return generate_record(spec, record_seed, build_term_basis(spec.topology));
}

DatasetFile generate_dataset(const SamplingSpec& spec, int n_records,
                             std::uint64_t master_seed, int workers) {
  spec.validate();
  if (n_records < 1) throw ValidationError("n_records must be >= 1");
  if (workers < 1) workers = 1;
  workers = std::min(workers, n_records);

  DatasetFile file;
  file.spec = spec;
  file.master_seed = master_seed;
  file.records.resize(static_cast<std::size_t>(n_records));

  auto worker = [&](int w) {
    const TermBasis basis = build_term_basis(spec.topology);
    for (int i = w; i < n_records; i += workers)
      file.records[static_cast<std::size_t>(i)] =
          generate_record(spec, mix_seed(master_seed, static_cast<std::uint64_t>(i)), basis);
  };

  if (workers == 1) {
    worker(0);
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) threads.emplace_back(worker, w);
    for (auto& t : threads) t.join();
  }
  return file;
}

std::pair<DatasetFile, DatasetFile> split_dataset(const DatasetFile& file,
                                                  double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ValidationError("train_fraction must be in (0, 1)");
  const std::size_t n = file.records.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  SplitMix64 rng(mix_seed(file.master_seed, 0x5917ULL));
  for (std::size_t i = n; i > 1; --i)
    std::swap(order[i - 1], order[rng.next_u64() % i]);

  const std::size_t n_train =
      static_cast<std::size_t>(train_fraction * static_cast<double>(n));
  DatasetFile train{file.version, file.spec, file.master_seed, {}};
  DatasetFile valid{file.version, file.spec, file.master_seed, {}};
  for (std::size_t i = 0; i < n; ++i)
    (i < n_train ? train : valid).records.push_back(file.records[order[i]]);
  return {std::move(train), std::move(valid)};
}

MeasurementVector add_measurement_noise(const MeasurementVector& m, double sigma,
                                        std::uint64_t seed) {
  if (sigma < 0.0) throw ValidationError("sigma must be >= 0");
  MeasurementVector out = m;
  if (sigma == 0.0) return out;
  SplitMix64 rng(seed);
  for (Eigen::Index i = 0; i < out.values.size(); ++i)
    out.values[i] = std::clamp(out.values[i] + rng.next_normal(0.0, sigma), -1.0, 1.0);
  return out;
}

namespace {

json spec_to_json(const SamplingSpec& spec) {
  return json{{"mean_range", {spec.mean_range.first, spec.mean_range.second}},
              {"std_range", {spec.std_range.first, spec.std_range.second}},
              {"gap_tol", spec.gap_tol},
              {"max_resamples", spec.max_resamples}};
}

SamplingSpec spec_from_json(const json& topo, const json& j) {
  SamplingSpec spec;
  spec.topology = Topology::from_kind(
      topology_kind_from_string(topo.at("kind").get<std::string>()),
      topo.at("n").get<int>());
  spec.mean_range = {j.at("mean_range")[0].get<double>(),
                     j.at("mean_range")[1].get<double>()};
  spec.std_range = {j.at("std_range")[0].get<double>(),
                    j.at("std_range")[1].get<double>()};
  spec.gap_tol = j.at("gap_tol").get<double>();
  spec.max_resamples = j.at("max_resamples").get<int>();
  return spec;
}

std::vector<double> to_vec(const Eigen::VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

Eigen::VectorXd from_vec(const json& arr) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v[i] = arr[static_cast<std::size_t>(i)].get<double>();
  return v;
}

} // namespace

std::string serialize_dataset(const DatasetFile& file) {
  std::ostringstream out;
  const json header{{"version", file.version},
                    {"topology",
                     {{"kind", to_string(file.spec.topology.kind)},
                      {"n", file.spec.topology.n_qubits}}},
                    {"spec", spec_to_json(file.spec)},
                    {"master_seed", file.master_seed},
                    {"count", file.records.size()}};
  out << header.dump() << '\n';
  for (const DatasetRecord& r : file.records) {
    const json line{{"seed", r.record_seed}, {"h", to_vec(r.h.values)},
                    {"m", to_vec(r.m.values)}, {"energy", r.energy},
                    {"gap", r.gap}};
    out << line.dump() << '\n';
  }
  return out.str();
}

void write_dataset(const DatasetFile& file, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << serialize_dataset(file);
  if (!out) throw Error("write failed for " + path);
}

DatasetFile parse_dataset(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line))
    throw TruncatedError("dataset is empty (missing header)");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed dataset header: ") + e.what());
  }
  DatasetFile file;
  file.version = header.at("version").get<int>();
  if (file.version != 1)
    throw VersionError("unsupported dataset version " + std::to_string(file.version));
  file.spec = spec_from_json(header.at("topology"), header.at("spec"));
  file.master_seed = header.at("master_seed").get<std::uint64_t>();
  const std::size_t count = header.at("count").get<std::size_t>();

  const Eigen::Index dim = file.spec.topology.coeff_dim();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw FormatError(std::string("malformed dataset record: ") + e.what());
    }
    DatasetRecord r{rec.at("seed").get<std::uint64_t>(),
                    CoeffVector{file.spec.topology, from_vec(rec.at("h"))},
                    MeasurementVector{file.spec.topology, from_vec(rec.at("m"))},
                    rec.at("energy").get<double>(), rec.at("gap").get<double>()};
    if (r.h.values.size() != dim || r.m.values.size() != dim)
      throw TopologyMismatchError("record arrays do not match header topology");
    file.records.push_back(std::move(r));
  }
  if (file.records.size() != count)
    throw TruncatedError("header promises " + std::to_string(count) +
                         " records, found " + std::to_string(file.records.size()));
  return file;
}

DatasetFile read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str());
}

} // namespace qst

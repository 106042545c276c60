#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qst/quantum.hpp"
#include "qst/topology.hpp"

namespace qst {

// How random Hamiltonians are drawn: each record picks its own mean mu
// uniformly from mean_range and std s from std_range, then draws every
// coefficient i.i.d. Normal(mu, s^2).
struct SamplingSpec {
  Topology topology;
  std::pair<double, double> mean_range{-1.0, 1.0};
  std::pair<double, double> std_range{0.5, 1.5};
  double gap_tol = 1e-6;
  int max_resamples = 64;

  void validate() const;
};

struct DatasetRecord {
  std::uint64_t record_seed;
  CoeffVector h;
  MeasurementVector m;
  double energy;
  double gap;
};

struct DatasetFile {
  int version = 1;
  SamplingSpec spec;
  std::uint64_t master_seed = 0;
  std::vector<DatasetRecord> records;
};

CoeffVector sample_coeffs(const SamplingSpec& spec, std::uint64_t record_seed);

// Samples until the ground state is non-degenerate; attempt k>0 reseeds
// with mix(record_seed, k). Throws GenerationFailed when max_resamples is
// exhausted.
DatasetRecord generate_record(const SamplingSpec& spec, std::uint64_t record_seed,
                              const TermBasis& basis);
DatasetRecord generate_record(const SamplingSpec& spec, std::uint64_t record_seed);

// Record i uses seed mix(master_seed, i); the output is identical for any
// worker count.
DatasetFile generate_dataset(const SamplingSpec& spec, int n_records,
                             std::uint64_t master_seed, int workers = 1);

// Seeded shuffle keyed on the file's master seed, then a contiguous cut at
// floor(train_fraction * count).
std::pair<DatasetFile, DatasetFile> split_dataset(const DatasetFile& file,
                                                  double train_fraction);

MeasurementVector add_measurement_noise(const MeasurementVector& m, double sigma,
                                        std::uint64_t seed);

// JSON-lines persistence: one header line, one line per record, float64
// values round-tripped exactly.
void write_dataset(const DatasetFile& file, const std::string& path);
std::string serialize_dataset(const DatasetFile& file);
DatasetFile read_dataset(const std::string& path);
DatasetFile parse_dataset(const std::string& text);

} // namespace qst

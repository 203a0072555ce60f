#pragma once

// End-to-end orchestration: run configuration, dataset generation and
// persistence, splitting, and the train / eval / simulate drivers behind the CLI.

#include "sfrc/evaluate.hpp"
#include "sfrc/homogenize.hpp"
#include "sfrc/sampling.hpp"
#include "sfrc/surrogate.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace sfrc {

struct NetworkConfig {
  std::vector<int> hidden{64, 64};
  double dropout = 0.5;
  std::uint64_t init_seed = 7;
};

struct SplitFractions {
  double train = 0.80;
  double val = 0.1975;
  double test = 0.0025;
};

struct PathsConfig {
  std::string dataset = "data/dataset.sfrd";
  std::string checkpoint = "out/model.sfnn";
  std::string history = "out/history.csv";
  std::string eval_dir = "out/eval";
};

/// Single material-point run for the `simulate` subcommand.
struct SimulateConfig {
  std::string sample;                            // virtual-sample label; empty = use orientation below
  std::array<double, 6> orientation{1.0 / 3, 1.0 / 3, 1.0 / 3, 0, 0, 0};  // a11 a22 a33 a12 a13 a23
  double volume_fraction = 0.12;
  std::string load_case = "uniaxial_11";         // or "custom" with `controls`
  double eps_c = 0.035;
  int cycles = 1;
  int steps_per_quarter = 50;
  std::array<ComponentControl, 6> controls;      // used when load_case == "custom"
  std::string output = "out/simulate.csv";
  std::string dataset;                           // optional container output
};

struct RunConfig {
  MatrixParams material;
  FiberParams fiber;
  GenerationConfig generation;
  int workers = 0;  // 0 = hardware concurrency
  HomogenizerOptions homogenizer;
  DriverOptions driver;
  NetworkConfig network;
  TrainConfig training;
  SplitFractions split;
  CampaignOptions campaigns;
  PathsConfig paths;
  SimulateConfig simulate;
  bool symmetry_augmentation = false;  // training.symmetry_augmentation
  bool shared_output_scale = false;    // training.shared_output_scale

  void validate() const;
  OracleConfig oracle() const { return {material, fiber, homogenizer, driver}; }
};

/// JSON with sections material, generation, homogenizer, network, training,
/// paths (plus optional evaluation and simulate). Missing keys keep defaults;
/// unknown keys are rejected.
RunConfig config_from_json(const std::string& text);
RunConfig load_config(const std::string& path);
std::string config_to_json(const RunConfig& config);

LoadCase load_case_from_string(const std::string& name);

// ---- dataset container -----------------------------------------------------

constexpr std::uint32_t kDatasetVersion = 1;

void write_dataset(const std::string& path, const std::vector<SampleRecord>& records);
std::vector<SampleRecord> read_dataset(const std::string& path);

/// Streaming writer: records must be appended in index order.
class DatasetWriter {
 public:
  DatasetWriter(const std::string& path, std::uint64_t count);
  void append(const SampleRecord& record);
  void close();
  ~DatasetWriter();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Oracle simulation of a record's strain path (all components imposed). Sets
/// stress and status; oracle faults mark the record failed instead of throwing.
void simulate_record(SampleRecord& record, const RunConfig& config);

struct Split {
  std::vector<std::size_t> train, val, test;
};

/// Random disjoint partition of the usable (non-failed) indices. Sizes are the
/// rounded fractions; an empty test split borrows one record (with a warning on
/// `warnings`).
Split split_indices(const std::vector<RecordStatus>& status, const SplitFractions& fractions, std::uint64_t seed,
                    std::vector<std::string>* warnings = nullptr);

struct Manifest {
  std::uint32_t format_version = kDatasetVersion;
  std::uint64_t master_seed = 0;
  std::uint64_t count = 0;
  std::uint64_t failed = 0;
  std::vector<std::uint64_t> seeds;
  Split split;
  std::string config_json;  // full config snapshot
};

std::string manifest_path(const std::string& dataset_path);
void write_manifest(const std::string& path, const Manifest& m);
Manifest read_manifest(const std::string& path);

struct GenerationReport {
  std::uint64_t count = 0;
  std::uint64_t failed = 0;
  double seconds = 0.0;
  std::vector<std::string> warnings;
};

/// Generates, simulates and writes `generation.sample_count` records to
/// `path` (plus the manifest). Workers draw records by index; the writer
/// emits them in index order, so the file is independent of the worker count.
GenerationReport generate_dataset(const RunConfig& config, const std::string& path,
                                  const std::function<void(std::uint64_t done, std::uint64_t total)>& progress = {});

// ---- training / evaluation drivers -----------------------------------------

std::vector<Sequence> to_sequences(const std::vector<SampleRecord>& records, const std::vector<std::size_t>& indices);

/// Random rotation Q and sign s applied to one (strain, orientation) -> stress
/// sequence: eps -> s Q eps Q^T, a -> Q a Q^T, sigma -> s Q sigma Q^T. The
/// homogenization model is objective and odd in the strain path, so the
/// transformed sequence is an exact oracle sample.
void symmetry_augment(Sequence& sequence, Rng& rng);

struct TrainOutcome {
  TrainResult result;
  double test_cost = 0.0;
};

/// Builds, trains and checkpoints a model from a generated dataset.
TrainOutcome train_from_dataset(const RunConfig& config, const std::string& dataset_path,
                                const std::string& checkpoint_path, const std::string& history_path,
                                const std::function<void(const EpochRecord&)>& on_epoch = {});

struct EvaluationSummary {
  std::vector<CaseResult> test_set;
  std::vector<CaseResult> one_cycle;
  std::vector<CaseResult> cyclic;
  std::vector<CaseResult> extrapolation;
  std::vector<CaseResult> resampling;
  std::string report;  // human-readable summary text
};

struct EvaluationOptions {
  bool test_set = true;
  bool one_cycle = true;
  bool cyclic = true;
  bool extrapolation = true;
  bool resampling = true;
  bool write_series = true;  // per-case CSVs under <out>/series
};

/// Runs the campaigns for a checkpoint and writes CSVs and summary.txt to `out_dir`.
EvaluationSummary evaluate_checkpoint(const RunConfig& config, const std::string& checkpoint_path,
                                      const std::string& dataset_path, const std::string& out_dir,
                                      const EvaluationOptions& opts = {});

/// Material-point simulation described by config.simulate; writes the CSV (and
/// optionally a one-record container). Returns the strain/stress series.
CaseResult run_simulation(const RunConfig& config);

}  // namespace sfrc

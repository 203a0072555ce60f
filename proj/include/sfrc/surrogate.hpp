#pragma once

// Stacked GRU sequence regressor (13 features -> 6 stresses per step) with
// hand-written backpropagation through time and an ADAM training loop.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace sfrc {

using Rng = std::mt19937_64;

/// One training example: inputs (T x F), targets (T x 6) in physical units.
struct Sequence {
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd targets;
};

/// Per-channel z-score statistics. Channels with zero spread keep std = 1.
struct Normalizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;

  bool fitted() const { return mean.size() > 0; }
  /// Rows of every matrix are samples.
  static Normalizer fit(const std::vector<const Eigen::MatrixXd*>& data);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& rows) const;
  Eigen::MatrixXd invert(const Eigen::MatrixXd& rows) const;
};

/// Masks for the last GRU layer's output, one (hidden x B) block per step.
using DropoutMask = Eigen::MatrixXd;

class GruModel {
 public:
  GruModel(int input_width, std::vector<int> hidden, int output_width, double dropout);

  int input_width() const { return input_; }
  int output_width() const { return output_; }
  const std::vector<int>& hidden() const { return hidden_; }
  double dropout() const { return dropout_; }

  /// Glorot-uniform input and head weights, orthogonal recurrent weights, zero biases.
  void initialize(Rng& rng);

  /// `shared_output_scale`: one output std for all columns (RMS of the
  /// per-column stds), so the loss weighs components by their physical size.
  void fit_normalizers(const std::vector<Sequence>& training, bool shared_output_scale = false);
  const Normalizer& input_normalizer() const { return in_norm_; }
  const Normalizer& output_normalizer() const { return out_norm_; }
  void set_normalizers(Normalizer in, Normalizer out);

  /// Physical-unit prediction for one T x F series (dropout off).
  Eigen::MatrixXd predict(const Eigen::MatrixXd& inputs) const;
  /// Same with dropout drawn from `rng` (training-mode forward).
  Eigen::MatrixXd predict_training(const Eigen::MatrixXd& inputs, Rng& rng) const;

  /// Objective on a batch of equal-length sequences, measured on normalized
  /// targets: mean over the batch of sum((pred - y)^2) / (2T), plus l2 * sum(w^2)
  /// over weight matrices. `mask` (if given) fixes the dropout mask; otherwise
  /// `rng` (if given) draws one; with neither dropout is off. Fills `grad`
  /// when non-null. Returns {total, data term}.
  struct Cost {
    double total = 0.0;
    double data = 0.0;
  };
  Cost evaluate(const std::vector<const Sequence*>& batch, double l2, const DropoutMask* mask, Rng* rng,
                Eigen::VectorXd* grad) const;

  /// Data-term cost averaged over sequences, no dropout, no L2.
  double mean_cost(const std::vector<Sequence>& data, int batch_size = 32) const;

  Eigen::VectorXd& parameters() { return params_; }
  const Eigen::VectorXd& parameters() const { return params_; }
  /// 1 for weight-matrix entries, 0 for biases.
  const Eigen::VectorXd& weight_mask() const { return weight_mask_; }

  struct Block {
    std::string name;
    Eigen::Index offset;
    int rows;
    int cols;
    bool weight;
  };
  const std::vector<Block>& blocks() const { return blocks_; }

  void save(const std::string& path) const;
  static GruModel load(const std::string& path);

 private:
  struct Tape;
  Eigen::Map<const Eigen::MatrixXd> block(const Eigen::VectorXd& v, int index) const;
  Eigen::Map<Eigen::MatrixXd> block(Eigen::VectorXd& v, int index) const;
  void forward(const Eigen::MatrixXd& x, int steps, int batch, const DropoutMask* mask, Tape& tape) const;

  int input_;
  std::vector<int> hidden_;
  int output_;
  double dropout_;
  std::vector<Block> blocks_;  // per layer: W, U, b; then head V, c
  Eigen::VectorXd params_;
  Eigen::VectorXd weight_mask_;
  Normalizer in_norm_;
  Normalizer out_norm_;
};

/// Data term of one sequence: sum of squared errors / (2 T).
double sequence_cost(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target);

/// Rescales `g` to `max_norm` if its norm exceeds it. Returns the original norm.
double clip_global_norm(Eigen::VectorXd& g, double max_norm);

struct TrainConfig {
  double learning_rate = 5e-4;
  double decay = 0.9;
  int decay_every = 10;
  int batch_size = 32;
  double l2 = 1e-4;
  double clip_norm = 1.0;
  int epochs = 50;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 1;

  void validate() const;
  /// Epochs are 1-based.
  double learning_rate_at(int epoch) const;
};

class Adam {
 public:
  Adam(Eigen::Index size, double beta1, double beta2, double eps);
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr);

 private:
  Eigen::VectorXd m_, v_;
  double beta1_, beta2_, eps_;
  long t_ = 0;
};

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double train_cost = 0.0;  // mean data cost over the epoch's batches
  double val_cost = 0.0;    // data cost, no dropout
  double wall_time = 0.0;   // seconds since training start
};

struct TrainResult {
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_val_cost = 0.0;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mini-batch ADAM with per-epoch shuffling; returns with the best-validation
/// parameters loaded (last epoch's if `validation` is empty). Normalizers must
/// already be fitted.
/// Transforms a training sequence in place before it enters a batch (fresh copy
/// per use). Must preserve the label relation, e.g. an exact symmetry.
using Augmenter = std::function<void(Sequence&, Rng&)>;

TrainResult train(GruModel& model, const std::vector<Sequence>& training, const std::vector<Sequence>& validation,
                  const TrainConfig& config, const std::function<void(const EpochRecord&)>& on_epoch = {},
                  const Augmenter& augment = {});

void write_history_csv(const std::string& path, const std::vector<EpochRecord>& history);

}  // namespace sfrc

#include "sfrc/surrogate.hpp"

#include "sfrc/binio.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace sfrc {

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;

Eigen::ArrayXXd sigmoid(const Eigen::ArrayXXd& a) { return 1.0 / (1.0 + (-a).exp()); }

}  // namespace

Normalizer Normalizer::fit(const std::vector<const Eigen::MatrixXd*>& data) {
  if (data.empty()) throw std::invalid_argument("Normalizer::fit: no data");
  const Eigen::Index width = data.front()->cols();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(width);
  double count = 0.0;
  for (const auto* m : data) {
    if (m->cols() != width) throw std::invalid_argument("Normalizer::fit: inconsistent widths");
    sum += m->colwise().sum().transpose();
    count += static_cast<double>(m->rows());
  }
  if (count == 0.0) throw std::invalid_argument("Normalizer::fit: no rows");
  Normalizer n;
  n.mean = sum / count;
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(width);
  for (const auto* m : data) sq += (m->rowwise() - n.mean.transpose()).colwise().squaredNorm().transpose();
  n.std = (sq / count).cwiseSqrt();
  for (Eigen::Index i = 0; i < width; ++i)
    if (!(n.std(i) > 1e-12 * std::max(1.0, std::abs(n.mean(i))))) n.std(i) = 1.0;
  return n;
}

Eigen::MatrixXd Normalizer::apply(const Eigen::MatrixXd& rows) const {
  if (!fitted()) throw std::logic_error("Normalizer: not fitted");
  if (rows.cols() != mean.size()) throw std::invalid_argument("Normalizer: width mismatch");
  return ((rows.rowwise() - mean.transpose()).array().rowwise() / std.transpose().array()).matrix();
}

Eigen::MatrixXd Normalizer::invert(const Eigen::MatrixXd& rows) const {
  if (!fitted()) throw std::logic_error("Normalizer: not fitted");
  if (rows.cols() != mean.size()) throw std::invalid_argument("Normalizer: width mismatch");
  return ((rows.array().rowwise() * std.transpose().array()).matrix().rowwise() + mean.transpose());
}

struct GruModel::Tape {
  int steps = 0;
  int batch = 0;
  std::vector<Eigen::MatrixXd> x;  // layer inputs, width x (T B)
  std::vector<Eigen::MatrixXd> h;  // states, h x ((T + 1) B), first block zero
  std::vector<Eigen::MatrixXd> z, r, n;
  Eigen::MatrixXd top;  // last layer output after dropout
  Eigen::MatrixXd y;    // normalized prediction, out x (T B)
};

GruModel::GruModel(int input_width, std::vector<int> hidden, int output_width, double dropout)
    : input_(input_width), hidden_(std::move(hidden)), output_(output_width), dropout_(dropout) {
  if (input_ < 1 || output_ < 1 || hidden_.empty())
    throw std::invalid_argument("GruModel: widths must be positive and at least one layer given");
  for (int h : hidden_)
    if (h < 1) throw std::invalid_argument("GruModel: hidden widths must be positive");
  if (!(dropout_ >= 0.0 && dropout_ < 1.0)) throw std::invalid_argument("GruModel: dropout outside [0, 1)");
  Eigen::Index offset = 0;
  auto add = [&](std::string name, int rows, int cols, bool weight) {
    blocks_.push_back({std::move(name), offset, rows, cols, weight});
    offset += static_cast<Eigen::Index>(rows) * cols;
  };
  int in = input_;
  for (std::size_t l = 0; l < hidden_.size(); ++l) {
    const int h = hidden_[l];
    const std::string p = "gru" + std::to_string(l) + ".";
    add(p + "W", 3 * h, in, true);
    add(p + "U", 3 * h, h, true);
    add(p + "b", 3 * h, 1, false);
    in = h;
  }
  add("head.V", output_, in, true);
  add("head.c", output_, 1, false);
  params_ = Eigen::VectorXd::Zero(offset);
  weight_mask_ = Eigen::VectorXd::Zero(offset);
  for (const auto& b : blocks_)
    if (b.weight) weight_mask_.segment(b.offset, static_cast<Eigen::Index>(b.rows) * b.cols).setOnes();
}

Eigen::Map<const Eigen::MatrixXd> GruModel::block(const Eigen::VectorXd& v, int index) const {
  const Block& b = blocks_[index];
  return {v.data() + b.offset, b.rows, b.cols};
}

Eigen::Map<Eigen::MatrixXd> GruModel::block(Eigen::VectorXd& v, int index) const {
  const Block& b = blocks_[index];
  return {v.data() + b.offset, b.rows, b.cols};
}

void GruModel::initialize(Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  auto glorot = [&](Eigen::Ref<Eigen::MatrixXd> m, int fan_in, int fan_out) {
    const double lim = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> u(-lim, lim);
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = u(rng);
  };
  auto orthogonal = [&](Eigen::Ref<Eigen::MatrixXd> m) {
    Eigen::MatrixXd g(m.rows(), m.cols());
    for (Eigen::Index j = 0; j < g.cols(); ++j)
      for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = normal(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR();
    for (Eigen::Index j = 0; j < q.cols(); ++j)
      if (r(j, j) < 0.0) q.col(j) *= -1.0;
    m = q;
  };
  params_.setZero();
  int in = input_;
  for (std::size_t l = 0; l < hidden_.size(); ++l) {
    const int h = hidden_[l];
    auto w = block(params_, 3 * l);
    auto u = block(params_, 3 * l + 1);
    for (int g = 0; g < 3; ++g) {
      glorot(w.middleRows(g * h, h), in, h);
      orthogonal(u.middleRows(g * h, h));
    }
    in = h;
  }
  glorot(block(params_, 3 * hidden_.size()), in, output_);
}

void GruModel::fit_normalizers(const std::vector<Sequence>& training, bool shared_output_scale) {
  std::vector<const Eigen::MatrixXd*> xs, ys;
  for (const auto& s : training) {
    xs.push_back(&s.inputs);
    ys.push_back(&s.targets);
  }
  Normalizer out = Normalizer::fit(ys);
  if (shared_output_scale) out.std.setConstant(std::sqrt(out.std.squaredNorm() / static_cast<double>(out.std.size())));
  set_normalizers(Normalizer::fit(xs), std::move(out));
}

void GruModel::set_normalizers(Normalizer in, Normalizer out) {
  if (in.mean.size() != input_ || in.std.size() != input_ || out.mean.size() != output_ ||
      out.std.size() != output_)
    throw std::invalid_argument("GruModel: normalizer width mismatch");
  if ((in.std.array() <= 0.0).any() || (out.std.array() <= 0.0).any())
    throw std::invalid_argument("GruModel: normalizer std must be positive");
  in_norm_ = std::move(in);
  out_norm_ = std::move(out);
}

void GruModel::forward(const Eigen::MatrixXd& x, int steps, int batch, const DropoutMask* mask, Tape& tape) const {
  const std::size_t layers = hidden_.size();
  tape.steps = steps;
  tape.batch = batch;
  tape.x.resize(layers);
  tape.h.resize(layers);
  tape.z.resize(layers);
  tape.r.resize(layers);
  tape.n.resize(layers);
  tape.x[0] = x;
  for (std::size_t l = 0; l < layers; ++l) {
    const int h = hidden_[l];
    const auto w = block(params_, 3 * l);
    const auto u = block(params_, 3 * l + 1);
    const auto b = block(params_, 3 * l + 2);
    Eigen::MatrixXd a = w * tape.x[l];
    a.colwise() += b.col(0);
    auto& hs = tape.h[l];
    hs.setZero(h, static_cast<Eigen::Index>(steps + 1) * batch);
    tape.z[l].resize(h, static_cast<Eigen::Index>(steps) * batch);
    tape.r[l].resize(h, static_cast<Eigen::Index>(steps) * batch);
    tape.n[l].resize(h, static_cast<Eigen::Index>(steps) * batch);
    for (int t = 0; t < steps; ++t) {
      const Eigen::Index c = static_cast<Eigen::Index>(t) * batch;
      const auto hp = hs.middleCols(c, batch);
      const Eigen::MatrixXd zr = a.block(0, c, 2 * h, batch) + u.topRows(2 * h) * hp;
      const Eigen::ArrayXXd z = sigmoid(zr.topRows(h).array());
      const Eigen::ArrayXXd r = sigmoid(zr.bottomRows(h).array());
      const Eigen::MatrixXd rh = (r * hp.array()).matrix();
      const Eigen::ArrayXXd n = (a.block(2 * h, c, h, batch) + u.bottomRows(h) * rh).array().tanh();
      hs.middleCols(c + batch, batch) = (z * hp.array() + (1.0 - z) * n).matrix();
      tape.z[l].middleCols(c, batch) = z.matrix();
      tape.r[l].middleCols(c, batch) = r.matrix();
      tape.n[l].middleCols(c, batch) = n.matrix();
    }
    if (l + 1 < layers) tape.x[l + 1] = hs.rightCols(static_cast<Eigen::Index>(steps) * batch);
  }
  tape.top = tape.h.back().rightCols(static_cast<Eigen::Index>(steps) * batch);
  if (mask) {
    if (mask->rows() != tape.top.rows() || mask->cols() != tape.top.cols())
      throw std::invalid_argument("GruModel: dropout mask shape mismatch");
    tape.top.array() *= mask->array();
  }
  tape.y = block(params_, 3 * layers) * tape.top;
  tape.y.colwise() += block(params_, 3 * layers + 1).col(0);
}

Eigen::MatrixXd GruModel::predict(const Eigen::MatrixXd& inputs) const {
  if (inputs.cols() != input_) throw std::invalid_argument("GruModel::predict: input width mismatch");
  if (!inputs.allFinite()) throw std::invalid_argument("GruModel::predict: non-finite input");
  Tape tape;
  forward(in_norm_.apply(inputs).transpose(), static_cast<int>(inputs.rows()), 1, nullptr, tape);
  return out_norm_.invert(tape.y.transpose());
}

Eigen::MatrixXd GruModel::predict_training(const Eigen::MatrixXd& inputs, Rng& rng) const {
  if (inputs.cols() != input_) throw std::invalid_argument("GruModel::predict: input width mismatch");
  const auto steps = inputs.rows();
  DropoutMask mask = DropoutMask::Ones(hidden_.back(), steps);
  if (dropout_ > 0.0) {
    std::bernoulli_distribution keep(1.0 - dropout_);
    for (Eigen::Index j = 0; j < mask.cols(); ++j)
      for (Eigen::Index i = 0; i < mask.rows(); ++i) mask(i, j) = keep(rng) ? 1.0 / (1.0 - dropout_) : 0.0;
  }
  Tape tape;
  forward(in_norm_.apply(inputs).transpose(), static_cast<int>(steps), 1, &mask, tape);
  return out_norm_.invert(tape.y.transpose());
}

GruModel::Cost GruModel::evaluate(const std::vector<const Sequence*>& batch, double l2, const DropoutMask* mask,
                                  Rng* rng, Eigen::VectorXd* grad) const {
  if (batch.empty()) throw std::invalid_argument("GruModel::evaluate: empty batch");
  const int steps = static_cast<int>(batch.front()->inputs.rows());
  const int nb = static_cast<int>(batch.size());
  if (steps < 1) throw std::invalid_argument("GruModel::evaluate: empty sequence");
  Eigen::MatrixXd x(input_, static_cast<Eigen::Index>(steps) * nb);
  Eigen::MatrixXd y(output_, static_cast<Eigen::Index>(steps) * nb);
  for (int b = 0; b < nb; ++b) {
    const Sequence& s = *batch[b];
    if (s.inputs.rows() != steps || s.targets.rows() != steps || s.inputs.cols() != input_ ||
        s.targets.cols() != output_)
      throw std::invalid_argument("GruModel::evaluate: batch sequences must share shape");
    const Eigen::MatrixXd xn = in_norm_.apply(s.inputs);
    const Eigen::MatrixXd yn = out_norm_.apply(s.targets);
    for (int t = 0; t < steps; ++t) {
      x.col(static_cast<Eigen::Index>(t) * nb + b) = xn.row(t).transpose();
      y.col(static_cast<Eigen::Index>(t) * nb + b) = yn.row(t).transpose();
    }
  }

  DropoutMask drawn;
  if (!mask && rng && dropout_ > 0.0) {
    drawn.resize(hidden_.back(), x.cols());
    std::bernoulli_distribution keep(1.0 - dropout_);
    for (Eigen::Index j = 0; j < drawn.cols(); ++j)
      for (Eigen::Index i = 0; i < drawn.rows(); ++i) drawn(i, j) = keep(*rng) ? 1.0 / (1.0 - dropout_) : 0.0;
    mask = &drawn;
  }

  Tape tape;
  forward(x, steps, nb, mask, tape);
  const Eigen::MatrixXd err = tape.y - y;
  const double scale = 1.0 / (static_cast<double>(steps) * nb);
  Cost cost;
  cost.data = 0.5 * scale * err.squaredNorm();
  cost.total = cost.data + l2 * params_.cwiseProduct(weight_mask_).squaredNorm();
  if (!grad) return cost;

  Eigen::VectorXd& g = *grad;
  g.setZero(params_.size());
  const std::size_t layers = hidden_.size();
  const Eigen::MatrixXd dy = scale * err;
  block(g, 3 * layers).noalias() = dy * tape.top.transpose();
  block(g, 3 * layers + 1) = dy.rowwise().sum();
  Eigen::MatrixXd dh_out = block(params_, 3 * layers).transpose() * dy;
  if (mask) dh_out.array() *= mask->array();

  for (std::size_t li = layers; li-- > 0;) {
    const int h = hidden_[li];
    const auto w = block(params_, 3 * li);
    const auto u = block(params_, 3 * li + 1);
    auto gw = block(g, 3 * li);
    auto gu = block(g, 3 * li + 1);
    auto gb = block(g, 3 * li + 2);
    Eigen::MatrixXd da(3 * h, static_cast<Eigen::Index>(steps) * nb);
    Eigen::MatrixXd carry = Eigen::MatrixXd::Zero(h, nb);
    for (int t = steps - 1; t >= 0; --t) {
      const Eigen::Index c = static_cast<Eigen::Index>(t) * nb;
      const Eigen::ArrayXXd hp = tape.h[li].middleCols(c, nb).array();
      const Eigen::ArrayXXd z = tape.z[li].middleCols(c, nb).array();
      const Eigen::ArrayXXd r = tape.r[li].middleCols(c, nb).array();
      const Eigen::ArrayXXd n = tape.n[li].middleCols(c, nb).array();
      const Eigen::ArrayXXd dh = (dh_out.middleCols(c, nb) + carry).array();

      const Eigen::MatrixXd dn = (dh * (1.0 - z) * (1.0 - n * n)).matrix();
      const Eigen::MatrixXd dz = (dh * (hp - n) * z * (1.0 - z)).matrix();
      const Eigen::MatrixXd drh = u.bottomRows(h).transpose() * dn;
      const Eigen::MatrixXd dr = (drh.array() * hp * r * (1.0 - r)).matrix();
      da.block(0, c, h, nb) = dz;
      da.block(h, c, h, nb) = dr;
      da.block(2 * h, c, h, nb) = dn;

      gu.bottomRows(h).noalias() += dn * (r * hp).matrix().transpose();
      gu.topRows(2 * h).noalias() += da.block(0, c, 2 * h, nb) * hp.matrix().transpose();
      carry = (dh * z + drh.array() * r).matrix();
      carry.noalias() += u.topRows(2 * h).transpose() * da.block(0, c, 2 * h, nb);
    }
    gw.noalias() = da * tape.x[li].transpose();
    gb = da.rowwise().sum();
    if (li > 0) dh_out = w.transpose() * da;
  }
  g += 2.0 * l2 * params_.cwiseProduct(weight_mask_);
  return cost;
}

double GruModel::mean_cost(const std::vector<Sequence>& data, int batch_size) const {
  if (data.empty()) return 0.0;
  double total = 0.0;
  std::size_t i = 0;
  while (i < data.size()) {
    std::vector<const Sequence*> chunk{&data[i]};
    std::size_t j = i + 1;
    while (j < data.size() && chunk.size() < static_cast<std::size_t>(batch_size) &&
           data[j].inputs.rows() == data[i].inputs.rows()) {
      chunk.push_back(&data[j]);
      ++j;
    }
    total += evaluate(chunk, 0.0, nullptr, nullptr, nullptr).data * static_cast<double>(chunk.size());
    i = j;
  }
  return total / static_cast<double>(data.size());
}

void GruModel::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("GruModel::save: cannot open " + path);
  os.write("SFNN", 4);
  binio::put<std::uint32_t>(os, kCheckpointVersion);
  binio::put<std::uint32_t>(os, static_cast<std::uint32_t>(input_));
  binio::put<std::uint32_t>(os, static_cast<std::uint32_t>(output_));
  binio::put<std::uint32_t>(os, static_cast<std::uint32_t>(hidden_.size()));
  for (int h : hidden_) binio::put<std::uint32_t>(os, static_cast<std::uint32_t>(h));
  binio::put<double>(os, dropout_);
  binio::put<std::uint8_t>(os, in_norm_.fitted() ? 1 : 0);
  if (in_norm_.fitted()) {
    for (const Eigen::VectorXd* v : {&in_norm_.mean, &in_norm_.std, &out_norm_.mean, &out_norm_.std})
      binio::put_doubles(os, v->data(), static_cast<std::size_t>(v->size()));
  }
  binio::put<std::uint64_t>(os, static_cast<std::uint64_t>(params_.size()));
  binio::put_doubles(os, params_.data(), static_cast<std::size_t>(params_.size()));
  if (!os) throw std::runtime_error("GruModel::save: write failed for " + path);
}

GruModel GruModel::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("GruModel::load: cannot open " + path);
  binio::expect_magic(is, "SFNN");
  const auto version = binio::get<std::uint32_t>(is);
  if (version != kCheckpointVersion)
    throw std::runtime_error("GruModel::load: unsupported checkpoint version " + std::to_string(version));
  const int input = static_cast<int>(binio::get<std::uint32_t>(is));
  const int output = static_cast<int>(binio::get<std::uint32_t>(is));
  const auto layers = binio::get<std::uint32_t>(is);
  if (layers == 0 || layers > 1024) throw std::runtime_error("GruModel::load: implausible layer count");
  std::vector<int> hidden;
  for (std::uint32_t l = 0; l < layers; ++l) hidden.push_back(static_cast<int>(binio::get<std::uint32_t>(is)));
  const double dropout = binio::get<double>(is);
  GruModel model(input, hidden, output, dropout);
  if (binio::get<std::uint8_t>(is)) {
    Normalizer in, out;
    in.mean.resize(input);
    in.std.resize(input);
    out.mean.resize(output);
    out.std.resize(output);
    for (Eigen::VectorXd* v : {&in.mean, &in.std, &out.mean, &out.std})
      binio::get_doubles(is, v->data(), static_cast<std::size_t>(v->size()));
    model.set_normalizers(std::move(in), std::move(out));
  }
  const auto count = binio::get<std::uint64_t>(is);
  if (count != static_cast<std::uint64_t>(model.params_.size()))
    throw std::runtime_error("GruModel::load: parameter count does not match the declared widths");
  binio::get_doubles(is, model.params_.data(), count);
  if (!model.params_.allFinite()) throw std::runtime_error("GruModel::load: non-finite parameters");
  return model;
}

double sequence_cost(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw std::invalid_argument("sequence_cost: shape mismatch");
  if (pred.rows() == 0) return 0.0;
  return (pred - target).squaredNorm() / (2.0 * static_cast<double>(pred.rows()));
}

double clip_global_norm(Eigen::VectorXd& g, double max_norm) {
  const double norm = g.norm();
  if (norm > max_norm && norm > 0.0) g *= max_norm / norm;
  return norm;
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !(decay > 0.0) || decay_every < 1 || batch_size < 1 || !(l2 >= 0.0) ||
      !(clip_norm > 0.0) || epochs < 1 || !(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) ||
      !(adam_eps > 0.0))
    throw std::invalid_argument("TrainConfig: invalid hyperparameters");
}

double TrainConfig::learning_rate_at(int epoch) const {
  return learning_rate * std::pow(decay, (epoch - 1) / decay_every);
}

Adam::Adam(Eigen::Index size, double beta1, double beta2, double eps)
    : m_(Eigen::VectorXd::Zero(size)), v_(Eigen::VectorXd::Zero(size)), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr) {
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params.array() -= lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

TrainResult train(GruModel& model, const std::vector<Sequence>& training, const std::vector<Sequence>& validation,
                  const TrainConfig& config, const std::function<void(const EpochRecord&)>& on_epoch,
                  const Augmenter& augment) {
  config.validate();
  if (training.empty()) throw std::invalid_argument("train: empty training set");
  if (!model.input_normalizer().fitted()) throw std::logic_error("train: normalizers not fitted");

  Rng rng(config.seed);
  Rng augment_rng(config.seed ^ 0x6a09e667f3bcc909ULL);  // separate stream: plain runs are unaffected
  std::vector<Sequence> augmented;
  Adam adam(model.parameters().size(), config.beta1, config.beta2, config.adam_eps);
  std::vector<std::size_t> order(training.size());
  std::iota(order.begin(), order.end(), 0);
  Eigen::VectorXd grad, best = model.parameters();
  TrainResult result;
  result.best_val_cost = std::numeric_limits<double>::infinity();
  const auto start = std::chrono::steady_clock::now();

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const double lr = config.learning_rate_at(epoch);
    std::shuffle(order.begin(), order.end(), rng);
    double sum = 0.0;
    int batches = 0;
    for (std::size_t i = 0; i < order.size(); i += static_cast<std::size_t>(config.batch_size)) {
      std::vector<const Sequence*> batch;
      augmented.clear();
      for (std::size_t j = i; j < std::min(order.size(), i + config.batch_size); ++j) {
        if (augment) {
          augmented.push_back(training[order[j]]);
          augment(augmented.back(), augment_rng);
        } else {
          batch.push_back(&training[order[j]]);
        }
      }
      if (augment)
        for (const auto& s : augmented) batch.push_back(&s);
      const auto cost = model.evaluate(batch, config.l2, nullptr, &rng, &grad);
      if (!std::isfinite(cost.total) || !grad.allFinite()) {
        std::ostringstream msg;
        msg << "train: divergence at epoch " << epoch << ", batch " << batches << " (cost " << cost.total
            << ", lr " << lr << ")";
        throw DivergenceError(msg.str());
      }
      clip_global_norm(grad, config.clip_norm);
      adam.step(model.parameters(), grad, lr);
      sum += cost.data;
      ++batches;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.train_cost = sum / batches;
    rec.val_cost = validation.empty() ? rec.train_cost : model.mean_cost(validation, config.batch_size);
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!std::isfinite(rec.val_cost)) throw DivergenceError("train: non-finite validation cost at epoch " + std::to_string(epoch));
    if (rec.val_cost < result.best_val_cost) {
      result.best_val_cost = rec.val_cost;
      result.best_epoch = epoch;
      best = model.parameters();
    }
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  if (!validation.empty()) model.parameters() = best;
  return result;
}

void write_history_csv(const std::string& path, const std::vector<EpochRecord>& history) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_history_csv: cannot open " + path);
  os << "epoch,lr,train_cost,val_cost,wall_time\n" << std::setprecision(10);
  for (const auto& r : history)
    os << r.epoch << ',' << r.lr << ',' << r.train_cost << ',' << r.val_cost << ',' << r.wall_time << '\n';
}

}  // namespace sfrc

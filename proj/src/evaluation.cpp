#include "idstyle/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace idstyle {

namespace {

double ratio(int num, int den) { return den == 0 ? 0.0 : static_cast<double>(num) / den; }

}  // namespace

double AttributeAccuracy::accuracy_positive() const { return ratio(to_positive_correct, to_positive); }
double AttributeAccuracy::accuracy_negative() const { return ratio(to_negative_correct, to_negative); }
double AttributeAccuracy::accuracy() const {
  return ratio(to_positive_correct + to_negative_correct, to_positive + to_negative);
}

double cosine_similarity(const Matrix& a, const Matrix& b) {
  const double aa = a.squaredNorm();
  const double bb = b.squaredNorm();
  if (aa == 0.0 && bb == 0.0) return 1.0;
  if (aa == 0.0 || bb == 0.0) return 0.0;
  // sqrt(fl(x·x)) == x exactly, so identical inputs give exactly 1.
  return a.cwiseProduct(b).sum() / std::sqrt(aa * bb);
}

double identity_similarity(const SyntheticWorld& world, const Matrix& original, const Matrix& edited) {
  return cosine_similarity(world.identify(world.generate(original)), world.identify(world.generate(edited)));
}

Matrix topk_filter(const Matrix& delta, int k) {
  if (k < 0 || k > delta.cols()) {
    throw std::out_of_range("topk_filter: k=" + std::to_string(k) + " outside [0, " + std::to_string(delta.cols()) +
                            "]");
  }
  Matrix out = Matrix::Zero(delta.rows(), delta.cols());
  std::vector<Eigen::Index> order(static_cast<std::size_t>(delta.cols()));
  for (Eigen::Index i = 0; i < delta.rows(); ++i) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      return std::abs(delta(i, a)) > std::abs(delta(i, b));
    });
    for (int j = 0; j < k; ++j) {
      const Eigen::Index c = order[static_cast<std::size_t>(j)];
      out(i, c) = delta(i, c);
    }
  }
  return out;
}

EvalReport evaluate(const Checkpoint& ckpt, int n_samples, std::uint64_t seed, const EditTransform& transform) {
  if (n_samples <= 0) throw std::invalid_argument("evaluate: n_samples must be positive");
  if (!(transform.intensity > 0.0)) throw std::invalid_argument("evaluate: intensity must be positive");
  const SyntheticWorld& world = ckpt.world;
  const Editor editor = ckpt.editor();
  const int m_count = editor.dims().attributes;
  const int d = editor.dims().dim;
  if (transform.k > d) throw std::out_of_range("evaluate: k exceeds latent dim");

  EvalReport report;
  report.samples = n_samples;
  report.seed = seed;
  for (int m = 0; m < m_count; ++m) {
    AttributeAccuracy a;
    a.name = m < static_cast<int>(ckpt.config.attribute_names.size())
                 ? ckpt.config.attribute_names[static_cast<std::size_t>(m)]
                 : "attr" + std::to_string(m);
    report.attributes.push_back(a);
  }

  double identity_sum = 0.0;
  double distance_sum = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    Rng rng = Rng::stream(seed, Stream::Evaluation, static_cast<std::uint64_t>(s));
    const Matrix w = world.sample_wplus(rng);
    const std::vector<int> labels = world.annotate(w);
    std::vector<int> targets(labels.size());
    std::transform(labels.begin(), labels.end(), targets.begin(), [](int l) { return -l; });
    const std::vector<Matrix> incs = editor.increments(w, targets);

    const Matrix identity0 = world.identify(world.generate(w));
    for (int m = 0; m < m_count; ++m) {
      Matrix inc = incs[static_cast<std::size_t>(m)];
      if (transform.k >= 0 && transform.k < d) inc = topk_filter(inc, transform.k);
      if (transform.intensity != 1.0) inc *= transform.intensity;
      const Matrix edited = w + inc;
      const Matrix image = world.generate(edited);
      const double logit = world.classify(image)(0, m);
      const int target = targets[static_cast<std::size_t>(m)];
      const bool correct = (logit >= 0 ? 1 : -1) == target;

      AttributeAccuracy& acc = report.attributes[static_cast<std::size_t>(m)];
      if (target > 0) {
        ++acc.to_positive;
        acc.to_positive_correct += correct;
      } else {
        ++acc.to_negative;
        acc.to_negative_correct += correct;
      }
      const double sim = cosine_similarity(identity0, world.identify(image));
      const double dist = inc.norm();
      acc.identity_similarity += sim;
      acc.neighborhood_distance += dist;
      identity_sum += sim;
      distance_sum += dist;
    }
  }
  const double edits = static_cast<double>(n_samples) * m_count;
  double acc_sum = 0.0;
  for (auto& a : report.attributes) {
    acc_sum += a.accuracy();
    a.identity_similarity /= n_samples;
    a.neighborhood_distance /= n_samples;
  }
  report.mean_accuracy = acc_sum / m_count;
  report.identity_similarity = identity_sum / edits;
  report.neighborhood_distance = distance_sum / edits;
  return report;
}

Matrix angle_matrix(const Matrix& directions) {
  const Eigen::Index m = directions.rows();
  for (Eigen::Index i = 0; i < m; ++i) {
    if (directions.row(i).squaredNorm() == 0.0) {
      throw std::invalid_argument("angle_matrix: direction " + std::to_string(i) + " is zero");
    }
  }
  Matrix out(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      if (i == j) {
        out(i, j) = 0.0;
        continue;
      }
      const double c = std::clamp(cosine_similarity(directions.row(i), directions.row(j)), -1.0, 1.0);
      out(i, j) = std::acos(c) * 180.0 / std::numbers::pi;
    }
  }
  return out;
}

Matrix angle_matrix(const Checkpoint& ckpt) { return angle_matrix(ckpt.editor().normalized_directions()); }

SweepResult sweep(const Checkpoint& ckpt, std::span<const int> ks, std::span<const double> intensities,
                  int n_samples, std::uint64_t seed) {
  const int d = ckpt.config.world.dim;
  std::vector<int> k_sorted(ks.begin(), ks.end());
  std::vector<double> i_sorted(intensities.begin(), intensities.end());
  std::sort(k_sorted.begin(), k_sorted.end());
  std::sort(i_sorted.begin(), i_sorted.end());
  for (int k : k_sorted) {
    if (k < 0 || k > d) throw std::out_of_range("sweep: k=" + std::to_string(k) + " outside [0, " + std::to_string(d) + "]");
  }
  for (double x : i_sorted) {
    if (!(x > 0.0)) throw std::invalid_argument("sweep: intensities must be positive");
  }
  SweepResult out;
  for (int k : k_sorted) {
    for (double x : i_sorted) {
      const EvalReport r = evaluate(ckpt, n_samples, seed, EditTransform{k, x});
      out.rows.push_back({k, x, r.mean_accuracy, r.identity_similarity});
    }
  }
  return out;
}

SweepResult topk_sweep(const Checkpoint& ckpt, std::span<const int> ks, int n_samples, std::uint64_t seed) {
  const double unit[] = {1.0};
  return sweep(ckpt, ks, unit, n_samples, seed);
}

SweepResult intensity_sweep(const Checkpoint& ckpt, int k, std::span<const double> intensities, int n_samples,
                            std::uint64_t seed) {
  const int one[] = {k};
  return sweep(ckpt, one, intensities, n_samples, seed);
}

double mean_l1_l2_ratio(const Matrix& directions) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < directions.rows(); ++i) {
    total += directions.row(i).cwiseAbs().sum() / directions.row(i).norm();
  }
  return total / static_cast<double>(directions.rows());
}

std::string format_number(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

void write_eval_csv(std::ostream& out, const EvalReport& r) {
  out << "attribute,edits_to_positive,accuracy_to_positive,edits_to_negative,accuracy_to_negative,accuracy,"
         "identity_similarity,neighborhood_distance,samples,seed\n";
  for (const auto& a : r.attributes) {
    out << a.name << ',' << a.to_positive << ',' << format_number(a.accuracy_positive()) << ',' << a.to_negative
        << ',' << format_number(a.accuracy_negative()) << ',' << format_number(a.accuracy()) << ','
        << format_number(a.identity_similarity) << ',' << format_number(a.neighborhood_distance) << ','
        << r.samples << ',' << r.seed << '\n';
  }
  int pos = 0, pos_ok = 0, neg = 0, neg_ok = 0;
  for (const auto& a : r.attributes) {
    pos += a.to_positive;
    pos_ok += a.to_positive_correct;
    neg += a.to_negative;
    neg_ok += a.to_negative_correct;
  }
  out << "mean," << pos << ',' << format_number(ratio(pos_ok, pos)) << ',' << neg << ','
      << format_number(ratio(neg_ok, neg)) << ',' << format_number(r.mean_accuracy) << ','
      << format_number(r.identity_similarity) << ',' << format_number(r.neighborhood_distance) << ',' << r.samples
      << ',' << r.seed << '\n';
}

void write_angles_csv(std::ostream& out, const Matrix& angles, std::span<const std::string> names) {
  out << "attribute";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (Eigen::Index i = 0; i < angles.rows(); ++i) {
    out << names[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < angles.cols(); ++j) out << ',' << format_number(angles(i, j));
    out << '\n';
  }
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
  out << "k,intensity,accuracy,identity_similarity\n";
  for (const auto& row : result.rows) {
    out << row.k << ',' << format_number(row.intensity) << ',' << format_number(row.accuracy) << ','
        << format_number(row.identity_similarity) << '\n';
  }
}

}  // namespace idstyle

#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "perturbench/ctc.hpp"
#include "perturbench/rng.hpp"

namespace {

// Collapse an alignment path: drop consecutive repeats, then blanks.
std::vector<int> collapse(const std::vector<int>& path, int blank) {
  std::vector<int> out;
  int prev = -1;
  for (int label : path) {
    if (label != prev && label != blank) out.push_back(label);
    prev = label;
  }
  return out;
}

// Total probability of the target by brute force: walk every vocab^frames
// alignment path and sum the product of per-frame probabilities for paths
// collapsing to the target. Only viable for tiny cases.
double enumerate_probability(const Eigen::MatrixXd& log_probs,
                             const std::vector<int>& target, int blank) {
  const Eigen::Index frames = log_probs.rows();
  const Eigen::Index vocab = log_probs.cols();
  double total = 0.0;
  std::vector<int> path(static_cast<std::size_t>(frames), 0);
  while (true) {
    if (collapse(path, blank) == target) {
      double p = 1.0;
      for (Eigen::Index t = 0; t < frames; ++t)
        p *= std::exp(log_probs(t, path[static_cast<std::size_t>(t)]));
      total += p;
    }
    Eigen::Index pos = frames - 1;
    while (pos >= 0 && path[static_cast<std::size_t>(pos)] == vocab - 1) {
      path[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
    ++path[static_cast<std::size_t>(pos)];
  }
  return total;
}

Eigen::MatrixXd random_log_probs(Eigen::Index frames, Eigen::Index vocab,
                                 perturbench::Rng& rng) {
  Eigen::MatrixXd p(frames, vocab);
  for (Eigen::Index t = 0; t < frames; ++t) {
    double row_sum = 0.0;
    for (Eigen::Index v = 0; v < vocab; ++v) {
      p(t, v) = rng.exponential();
      row_sum += p(t, v);
    }
    for (Eigen::Index v = 0; v < vocab; ++v) p(t, v) = std::log(p(t, v) / row_sum);
  }
  return p;
}

// All targets over labels {1 .. vocab-1} up to the given length.
std::vector<std::vector<int>> all_targets(int vocab, int max_len) {
  std::vector<std::vector<int>> out = {{}};
  std::size_t start = 0;
  for (int len = 1; len <= max_len; ++len) {
    const std::size_t end = out.size();
    for (std::size_t i = start; i < end; ++i)
      for (int label = 1; label < vocab; ++label) {
        auto next = out[i];
        next.push_back(label);
        out.push_back(std::move(next));
      }
    start = end;
  }
  return out;
}

}  // namespace

TEST_CASE("ctc loss equals alignment enumeration on every small case") {
  perturbench::Rng rng(31);
  for (int vocab = 2; vocab <= 4; ++vocab) {
    const auto targets = all_targets(vocab, 3);
    for (Eigen::Index frames = 1; frames <= 5; ++frames) {
      for (const auto& target : targets) {
        const Eigen::MatrixXd log_probs = random_log_probs(frames, vocab, rng);
        const double oracle = enumerate_probability(log_probs, target, 0);
        CAPTURE(vocab);
        CAPTURE(frames);
        CAPTURE(target.size());
        if (oracle == 0.0) {
          REQUIRE_THROWS_AS(perturbench::ctc_loss(log_probs, target),
                            perturbench::CtcLengthError);
        } else {
          const double loss = perturbench::ctc_loss(log_probs, target);
          REQUIRE(loss == doctest::Approx(-std::log(oracle)).epsilon(1e-9));
        }
      }
    }
  }
}

TEST_CASE("empty target sums only the all-blank path") {
  perturbench::Rng rng(5);
  const Eigen::MatrixXd log_probs = random_log_probs(6, 3, rng);
  const double loss = perturbench::ctc_loss(log_probs, {});
  CHECK(loss == doctest::Approx(-log_probs.col(0).sum()).epsilon(1e-12));
}

TEST_CASE("two frames against one label adds three alignments") {
  Eigen::MatrixXd lp(2, 2);
  lp << std::log(0.3), std::log(0.7), std::log(0.4), std::log(0.6);
  // Paths collapsing to {1}: (1,1), (1,0), (0,1).
  const double expected = 0.7 * 0.6 + 0.7 * 0.4 + 0.3 * 0.6;
  CHECK(perturbench::ctc_loss(lp, {1}) ==
        doctest::Approx(-std::log(expected)).epsilon(1e-12));
}

TEST_CASE("repeated labels need a separating blank") {
  perturbench::Rng rng(9);
  const Eigen::MatrixXd two = random_log_probs(2, 3, rng);
  CHECK_THROWS_AS(perturbench::ctc_loss(two, {1, 1}),
                  perturbench::CtcLengthError);
  // With exactly three frames the only alignment is label, blank, label.
  const Eigen::MatrixXd three = random_log_probs(3, 3, rng);
  const double loss = perturbench::ctc_loss(three, {1, 1});
  CHECK(loss == doctest::Approx(-(three(0, 1) + three(1, 0) + three(2, 1)))
                    .epsilon(1e-12));
  // Distinct labels fit in two frames.
  CHECK_NOTHROW(perturbench::ctc_loss(two, {1, 2}));
}

TEST_CASE("ctc rejects invalid targets and signals infeasible paths") {
  perturbench::Rng rng(13);
  const Eigen::MatrixXd lp = random_log_probs(4, 3, rng);
  CHECK_THROWS_AS(perturbench::ctc_loss(lp, {0}), std::invalid_argument);
  CHECK_THROWS_AS(perturbench::ctc_loss(lp, {3}), std::invalid_argument);
  CHECK_THROWS_AS(perturbench::ctc_loss(lp, {-1}), std::invalid_argument);
  CHECK_THROWS_AS(perturbench::ctc_loss(Eigen::MatrixXd(0, 3), {1}),
                  std::invalid_argument);

  // Too long for the frame budget.
  CHECK_THROWS_AS(perturbench::ctc_loss(lp, {1, 2, 1, 2, 1}),
                  perturbench::CtcLengthError);

  // Length fits but the only label has zero probability everywhere.
  Eigen::MatrixXd blocked(2, 2);
  const double neg_inf = -std::numeric_limits<double>::infinity();
  blocked << 0.0, neg_inf, 0.0, neg_inf;
  CHECK_THROWS_AS(perturbench::ctc_loss(blocked, {1}), std::runtime_error);
}

TEST_CASE("ctc gradient matches central finite differences") {
  perturbench::Rng rng(41);
  const std::vector<std::vector<int>> targets = {
      {1}, {1, 2}, {2, 2}, {1, 2, 1}, {3, 1, 2}};
  for (const auto& target : targets) {
    const Eigen::Index vocab = 4;
    const Eigen::Index frames = 6;
    Eigen::MatrixXd lp = random_log_probs(frames, vocab, rng);
    Eigen::MatrixXd grad;
    const double loss = perturbench::ctc_loss(lp, target, &grad);
    REQUIRE(grad.rows() == frames);
    REQUIRE(grad.cols() == vocab);
    CHECK(std::isfinite(loss));

    const double h = 1e-6;
    for (Eigen::Index t = 0; t < frames; ++t) {
      for (Eigen::Index v = 0; v < vocab; ++v) {
        Eigen::MatrixXd up = lp, down = lp;
        up(t, v) += h;
        down(t, v) -= h;
        const double fd = (perturbench::ctc_loss(up, target) -
                           perturbench::ctc_loss(down, target)) /
                          (2.0 * h);
        CAPTURE(t);
        CAPTURE(v);
        REQUIRE(grad(t, v) == doctest::Approx(fd).epsilon(1e-5));
      }
      // Per-frame occupancy sums to the full path mass, so each gradient row
      // sums to -1.
      CHECK(grad.row(t).sum() == doctest::Approx(-1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("greedy decode collapses repeats and drops blanks") {
  auto row = [](int vocab, int label) {
    Eigen::RowVectorXd r = Eigen::RowVectorXd::Constant(vocab, std::log(0.01));
    r(label) = std::log(0.9);
    return r;
  };
  Eigen::MatrixXd lp(7, 3);
  lp.row(0) = row(3, 0);
  lp.row(1) = row(3, 1);
  lp.row(2) = row(3, 1);
  lp.row(3) = row(3, 0);
  lp.row(4) = row(3, 2);
  lp.row(5) = row(3, 2);
  lp.row(6) = row(3, 1);
  CHECK(perturbench::ctc_greedy_decode(lp) == std::vector<int>{1, 2, 1});

  Eigen::MatrixXd blanks(4, 3);
  for (int t = 0; t < 4; ++t) blanks.row(t) = row(3, 0);
  CHECK(perturbench::ctc_greedy_decode(blanks).empty());

  // Separated repeats survive the collapse.
  Eigen::MatrixXd sep(3, 3);
  sep.row(0) = row(3, 1);
  sep.row(1) = row(3, 0);
  sep.row(2) = row(3, 1);
  CHECK(perturbench::ctc_greedy_decode(sep) == std::vector<int>{1, 1});
}

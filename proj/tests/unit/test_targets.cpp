#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "perturbench/metrics.hpp"
#include "perturbench/rng.hpp"
#include "perturbench/targets.hpp"
#include "perturbench/text.hpp"

namespace {

perturbench::AudioSample utterance(const std::string& id,
                                   const std::string& transcript) {
  perturbench::AudioSample s;
  s.id = id;
  s.transcript = transcript;
  s.waveform = Eigen::VectorXd::Zero(8);
  return s;
}

std::size_t norm_chars(const std::string& text) {
  return perturbench::normalize_text(text, perturbench::TextLevel::character)
      .size();
}

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "perturbench-targets-test";
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("length matching picks the closest candidate, earliest on ties") {
  perturbench::TargetCorpus corpus;
  corpus.candidates = {"NO", "ONE TEN", "SEA SEASON", "A DOZEN NOTES HERE"};

  perturbench::Rng rng(3);
  const std::vector<std::string> vocab = {"ON",   "SAT",  "TUNE", "STONE",
                                          "SEAS", "DONUT", "A",    "NOTES"};
  std::vector<perturbench::AudioSample> utterances;
  for (int i = 0; i < 40; ++i) {
    std::string transcript;
    const auto word_count = 1 + rng.below(4);
    for (std::uint64_t w = 0; w < word_count; ++w) {
      if (w > 0) transcript += " ";
      transcript += vocab[rng.below(vocab.size())];
    }
    utterances.push_back(utterance("u" + std::to_string(i), transcript));
  }

  const auto targets =
      perturbench::assign_length_matched_targets(utterances, corpus);
  REQUIRE(targets.size() == utterances.size());

  for (std::size_t i = 0; i < utterances.size(); ++i) {
    // Brute-force reassignment: strict-minimum absolute gap in normalized
    // character length, first candidate wins ties.
    const long ref_len = static_cast<long>(norm_chars(utterances[i].transcript));
    std::size_t expected = 0;
    long best_gap = 1 << 20;
    for (std::size_t c = 0; c < corpus.candidates.size(); ++c) {
      const long gap =
          std::abs(static_cast<long>(norm_chars(corpus.candidates[c])) - ref_len);
      if (gap < best_gap) {
        expected = c;
        best_gap = gap;
      }
    }
    CAPTURE(utterances[i].transcript);
    CHECK(targets[i].kind == perturbench::AttackTarget::Kind::transcript);
    CHECK(targets[i].text == corpus.candidates[expected]);
  }
}

TEST_CASE("shipped 13-candidate corpus matches exhaustive length search") {
  const auto corpus = perturbench::TargetCorpus::from_file(
      std::filesystem::path(PERTURBENCH_DATA_DIR) / "target_corpus.txt");
  corpus.validate();
  REQUIRE(corpus.candidates.size() == 13);

  // Ten synthetic utterances spanning very short to longer than every
  // candidate, so each length regime of the corpus gets exercised.
  std::vector<perturbench::AudioSample> utterances;
  const std::vector<std::string> vocab = {"SUN",  "OCEAN", "NOTES",
                                          "DUNE", "TOAST", "BEAN"};
  perturbench::Rng rng(11);
  for (int i = 0; i < 10; ++i) {
    std::string transcript;
    const int words = 1 + 2 * i;
    for (int w = 0; w < words; ++w) {
      if (w > 0) transcript += " ";
      transcript += vocab[rng.below(vocab.size())];
    }
    utterances.push_back(utterance("u" + std::to_string(i), transcript));
  }

  const auto targets =
      perturbench::assign_length_matched_targets(utterances, corpus);
  REQUIRE(targets.size() == utterances.size());
  for (std::size_t i = 0; i < utterances.size(); ++i) {
    const long ref_len = static_cast<long>(norm_chars(utterances[i].transcript));
    std::size_t expected = 0;
    long best_gap = 1 << 20;
    for (std::size_t c = 0; c < corpus.candidates.size(); ++c) {
      const long gap =
          std::abs(static_cast<long>(norm_chars(corpus.candidates[c])) - ref_len);
      if (gap < best_gap) {
        expected = c;
        best_gap = gap;
      }
    }
    CAPTURE(utterances[i].transcript);
    CHECK(targets[i].text == corpus.candidates[expected]);
  }
}

TEST_CASE("length match tie goes to the earlier corpus entry") {
  perturbench::TargetCorpus corpus;
  corpus.candidates = {"ABC", "XYZ"};  // same normalized length
  const auto targets = perturbench::assign_length_matched_targets(
      {utterance("a", "HI"), utterance("b", "HELLO")}, corpus);
  CHECK(targets[0].text == "ABC");
  CHECK(targets[1].text == "ABC");
}

TEST_CASE("target corpus validation and file round trip") {
  perturbench::TargetCorpus empty;
  CHECK_THROWS_AS(empty.validate(), std::invalid_argument);
  perturbench::TargetCorpus dup;
  dup.candidates = {"A", "B", "A"};
  CHECK_THROWS_AS(dup.validate(), std::invalid_argument);

  perturbench::TargetCorpus corpus;
  corpus.candidates = {"OPEN THE DOOR", "SEND IT NOW", "STOP"};
  const auto path = temp_dir() / "corpus.txt";
  corpus.to_file(path);
  const auto loaded = perturbench::TargetCorpus::from_file(path);
  CHECK(loaded.candidates == corpus.candidates);

  // Blank lines and CR line endings are tolerated on read.
  const auto messy = temp_dir() / "messy.txt";
  std::ofstream out(messy, std::ios::binary);
  out << "ONE\r\n\r\nTWO\nTHREE";
  out.close();
  const auto parsed = perturbench::TargetCorpus::from_file(messy);
  CHECK(parsed.candidates == std::vector<std::string>{"ONE", "TWO", "THREE"});

  CHECK_THROWS_AS(
      perturbench::TargetCorpus::from_file(temp_dir() / "missing.txt"),
      std::runtime_error);
}

TEST_CASE("prefix targets prepend the word") {
  const auto full = perturbench::make_prefix_target("OPEN THE DOOR", "BUT");
  CHECK(full.kind == perturbench::AttackTarget::Kind::prefix);
  CHECK(full.text == "BUT OPEN THE DOOR");

  const auto bare = perturbench::make_prefix_target("", "BUT");
  CHECK(bare.text == "BUT");

  CHECK_THROWS_AS(perturbench::make_prefix_target("x", "TWO WORDS"),
                  std::invalid_argument);
  CHECK_THROWS_AS(perturbench::make_prefix_target("x", ""),
                  std::invalid_argument);
  CHECK_THROWS_AS(perturbench::make_prefix_target("x", "   "),
                  std::invalid_argument);
}

TEST_CASE("prefix success checks the normalized first word") {
  CHECK(perturbench::prefix_success("BUT THE SEA", "BUT"));
  CHECK(perturbench::prefix_success("but the sea", "But"));
  CHECK(perturbench::prefix_success("  but, yes", "BUT"));
  CHECK_FALSE(perturbench::prefix_success("THE BUT SEA", "BUT"));
  CHECK_FALSE(perturbench::prefix_success("BUTTER UP", "BUT"));
  CHECK_FALSE(perturbench::prefix_success("", "BUT"));
  CHECK_THROWS_AS(perturbench::prefix_success("x", "A B"),
                  std::invalid_argument);
}

TEST_CASE("prefix eligibility drops utterances already starting with the word") {
  const std::vector<perturbench::AudioSample> pool = {
      utterance("a", "BUT ONE"), utterance("b", "ONE BUT"),
      utterance("c", "but two"), utterance("d", "NOTES")};
  const auto kept = perturbench::filter_prefix_eligible(pool, "BUT");
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].id == "b");
  CHECK(kept[1].id == "d");
}

TEST_CASE("simplex samples are nonnegative and sum to one") {
  perturbench::Rng rng(7);
  for (int k : {1, 2, 3, 8}) {
    for (int trial = 0; trial < 50; ++trial) {
      const Eigen::VectorXd v = perturbench::sample_simplex(k, rng);
      REQUIRE(v.size() == k);
      CHECK(v.minCoeff() > 0.0);
      CHECK(v.sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  CHECK(perturbench::sample_simplex(1, rng)(0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(perturbench::sample_simplex(0, rng), std::invalid_argument);
}

TEST_CASE("simplex coordinates are exchangeable with mean 1/k") {
  perturbench::Rng rng(19);
  const int draws = 30000;
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (int i = 0; i < draws; ++i) mean += perturbench::sample_simplex(3, rng);
  mean /= draws;
  for (int c = 0; c < 3; ++c)
    CHECK(mean(c) == doctest::Approx(1.0 / 3.0).epsilon(0.03));
}

TEST_CASE("simplex first coordinate is uniform for k=2") {
  // For two unit exponentials, X1/(X1+X2) is Uniform(0,1); check the
  // empirical CDF stays close to the identity.
  perturbench::Rng rng(29);
  const int n = 20000;
  std::vector<double> draws(n);
  for (int i = 0; i < n; ++i) draws[static_cast<std::size_t>(i)] =
      perturbench::sample_simplex(2, rng)(0);
  std::sort(draws.begin(), draws.end());
  double ks = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = draws[static_cast<std::size_t>(i)];
    ks = std::max(ks, std::abs((i + 1.0) / n - x));
    ks = std::max(ks, std::abs(x - static_cast<double>(i) / n));
  }
  CHECK(ks < 0.015);
}

TEST_CASE("top-k targets hold descending mass on k distinct classes") {
  perturbench::Rng rng(37);
  for (int trial = 0; trial < 200; ++trial) {
    const int classes = 4 + static_cast<int>(rng.below(8));
    const int k = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
    const auto target = perturbench::sample_topk_target(classes, k, rng);
    CHECK(target.kind == perturbench::AttackTarget::Kind::class_distribution);
    CHECK(target.k == k);
    REQUIRE(target.distribution.size() == classes);
    CHECK(target.distribution.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(target.distribution.minCoeff() >= 0.0);
    CHECK((target.distribution.array() > 0.0).count() == k);

    // The ranked prefix must consist of the k positive-mass classes in
    // strictly descending mass order.
    const auto order = perturbench::descending_argsort(target.distribution);
    for (int i = 0; i < k; ++i) {
      CHECK(target.distribution(order[static_cast<std::size_t>(i)]) > 0.0);
      if (i > 0)
        CHECK(target.distribution(order[static_cast<std::size_t>(i - 1)]) >=
              target.distribution(order[static_cast<std::size_t>(i)]));
    }
  }
  CHECK_THROWS_AS(perturbench::sample_topk_target(5, 0, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(perturbench::sample_topk_target(5, 6, rng),
                  std::invalid_argument);
}

TEST_CASE("top-1 class is roughly uniform across draws") {
  perturbench::Rng rng(43);
  const int classes = 5;
  std::vector<int> counts(classes, 0);
  const int draws = 20000;
  for (int i = 0; i < draws; ++i) {
    const auto target = perturbench::sample_topk_target(classes, 2, rng);
    Eigen::Index top;
    target.distribution.maxCoeff(&top);
    ++counts[static_cast<std::size_t>(top)];
  }
  for (int c : counts)
    CHECK(c == doctest::Approx(draws / classes).epsilon(0.06));
}

#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "kocl/check/oracles.hpp"
#include "kocl/errors.hpp"
#include "kocl/stream_runner.hpp"
#include "kocl/synthetic.hpp"

using namespace kocl;

namespace {

Dataset random_dataset(std::size_t n, Eigen::Index m, Eigen::Index k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Eigen::Index> label(0, k - 1);
  Dataset d;
  d.num_classes = k;
  d.features = check::random_matrix(static_cast<Eigen::Index>(n), m, rng);
  for (std::size_t i = 0; i < n; ++i) d.labels.push_back(static_cast<double>(label(rng)));
  return d;
}

ClassifierOptions learning(std::uint64_t seed = 7) {
  ClassifierOptions o;
  o.learn_alpha = true;
  o.alpha_lr = 0.05;
  o.delta_lr = 0.2;
  o.seed = seed;
  return o;
}

}  // namespace

TEST_CASE("chunks of one reproduce per-point observe") {
  const Dataset d = random_dataset(80, 3, 4, 1);
  RunConfig rc;
  rc.chunk_size = 1;
  PrequentialRunner runner(ClassifierFilter(3, 4, learning()), rc);
  ClassifierFilter f(3, 4, learning());
  runner.run_stream(make_chunks(d, 1));
  for (std::size_t i = 0; i < d.size(); ++i) {
    const ClassStep s = f.observe(d.features.row(static_cast<Eigen::Index>(i)).transpose(),
                                  static_cast<Eigen::Index>(d.labels[i]));
    REQUIRE(s.log_predictive == runner.metrics().point_log_predictive()[i]);
    REQUIRE(s.gamma == runner.gamma_trace()[i]);
  }
  CHECK(f.state().mean() == runner.filter().state().mean());
  CHECK(f.alpha() == runner.filter().alpha());
}

TEST_CASE("transition placement is irrelevant without forgetting") {
  const Dataset d = random_dataset(60, 3, 3, 2);
  ClassifierOptions o;
  o.learn_delta = false;
  RunConfig a;
  RunConfig b;
  b.transition = TransitionMode::LastStepMarkov;
  PrequentialRunner ra(ClassifierFilter(3, 3, o), a);
  PrequentialRunner rb(ClassifierFilter(3, 3, o), b);
  ra.run_stream(make_chunks(d, 10));
  rb.run_stream(make_chunks(d, 10));
  CHECK(ra.filter().state().mean() == rb.filter().state().mean());
  CHECK(ra.metrics().point_log_predictive() == rb.metrics().point_log_predictive());
}

TEST_CASE("predictions within a chunk do not depend on its labels") {
  const Dataset d = random_dataset(40, 3, 4, 3);
  std::vector<StreamChunk> chunks = make_chunks(d, 10);
  std::vector<StreamChunk> permuted = chunks;
  std::rotate(permuted[2].labels.begin(), permuted[2].labels.begin() + 3, permuted[2].labels.end());
  PrequentialRunner a(ClassifierFilter(3, 4, learning()), RunConfig{});
  PrequentialRunner b(ClassifierFilter(3, 4, learning()), RunConfig{});
  a.run_stream(chunks);
  b.run_stream(permuted);
  for (std::size_t i = 0; i < 30; ++i) REQUIRE(a.point_probs()[i] == b.point_probs()[i]);
  CHECK(a.point_probs()[35] != b.point_probs()[35]);
}

TEST_CASE("replay augmentation") {
  std::mt19937_64 rng(4);
  const Dataset d = random_dataset(30, 2, 3, 4);
  const std::vector<StreamChunk> chunks = make_chunks(d, 10);

  SUBCASE("empty buffer passes the chunk through") {
    ReplayBuffer buf(100);
    const StreamChunk out = replay_augment(chunks[0], buf, 10, rng);
    CHECK(out.features == chunks[0].features);
    CHECK(out.labels == chunks[0].labels);
    CHECK(out.stream_index == chunks[0].stream_index);
    CHECK(buf.size() == 10);
  }
  SUBCASE("full sample doubles the chunk and keeps it first") {
    ReplayBuffer buf(100);
    replay_augment(chunks[0], buf, 10, rng);
    replay_augment(chunks[1], buf, 10, rng);
    const StreamChunk out = replay_augment(chunks[2], buf, 10, rng);
    REQUIRE(out.size() == 20);
    CHECK(out.features.topRows(10) == chunks[2].features);
    const std::set<std::size_t> replayed(out.stream_index.begin() + 10, out.stream_index.end());
    CHECK(replayed.size() == 10);
    CHECK(*replayed.rbegin() < 20);
    for (std::size_t j = 10; j < 20; ++j) {
      const auto src = static_cast<Eigen::Index>(out.stream_index[j]);
      CHECK(out.features.row(static_cast<Eigen::Index>(j)) == d.features.row(src));
      CHECK(out.labels[j] == d.labels[out.stream_index[j]]);
    }
  }
  SUBCASE("buffer is first-in first-out") {
    ReplayBuffer buf(100);
    const Dataset long_stream = random_dataset(150, 2, 3, 5);
    for (const StreamChunk& c : make_chunks(long_stream, 1)) replay_augment(c, buf, 0, rng);
    REQUIRE(buf.size() == 100);
    for (std::size_t i = 0; i < 100; ++i) CHECK(buf.entries()[i].stream_index == 50 + i);
  }
  CHECK_THROWS_AS(ReplayBuffer(0), ConfigError);
}

TEST_CASE("replayed points come from the past and are never scored") {
  const Dataset d = random_dataset(300, 3, 4, 6);
  RunConfig rc;
  rc.replay = ReplayConfig{100, 10};
  PrequentialRunner runner(ClassifierFilter(3, 4, learning()), rc);
  runner.run_stream(make_chunks(d, 10));
  const auto& log = runner.replay_log();
  REQUIRE(log.size() == 30);
  CHECK(log[0].empty());
  for (std::size_t c = 1; c < log.size(); ++c) {
    CHECK(log[c].size() == 10);
    for (std::size_t idx : log[c]) {
      CHECK(idx < 10 * c);
      CHECK(idx + 100 >= 10 * c);  // still inside the FIFO window
    }
  }
  CHECK(runner.metrics().n_seen() == 300);
  CHECK(runner.metrics().correctness().size() == 300);
  CHECK(runner.gamma_trace().size() == 300);
  CHECK(runner.metrics().history().back().trained_points == 20);
}

TEST_CASE("accuracy agrees with the stored predictions") {
  const Dataset d = random_dataset(200, 3, 4, 8);
  PrequentialRunner runner(ClassifierFilter(3, 4, learning()), RunConfig{});
  runner.run_stream(make_chunks(d, 10));
  std::size_t correct = 0;
  std::size_t flagged = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    correct += argmax(runner.point_probs()[i]) == static_cast<Eigen::Index>(d.labels[i]);
    flagged += runner.metrics().correctness()[i];
  }
  CHECK(correct == runner.metrics().n_correct());
  CHECK(flagged == runner.metrics().n_correct());
  CHECK(runner.metrics().running_accuracy() == static_cast<double>(correct) / 200.0);
}

TEST_CASE("runs are deterministic") {
  const Dataset d = random_dataset(150, 3, 4, 9);
  RunConfig rc;
  rc.replay = ReplayConfig{50, 5};
  rc.replay_seed = 3;
  PrequentialRunner a(ClassifierFilter(3, 4, learning()), rc);
  PrequentialRunner b(ClassifierFilter(3, 4, learning()), rc);
  a.run_stream(make_chunks(d, 10));
  b.run_stream(make_chunks(d, 10));
  CHECK(a.metrics().point_log_predictive() == b.metrics().point_log_predictive());
  CHECK(a.gamma_trace() == b.gamma_trace());
  CHECK(a.replay_log() == b.replay_log());
  CHECK(a.filter().state().mean() == b.filter().state().mean());
}

TEST_CASE("bad chunks are rejected before any state changes") {
  const Dataset d = random_dataset(20, 3, 4, 10);
  PrequentialRunner runner(ClassifierFilter(3, 4, learning()), RunConfig{});
  runner.run_chunk(make_chunks(d, 10)[0]);
  const Matrix mean = runner.filter().state().mean();

  StreamChunk wide = make_chunks(d, 10)[1];
  wide.features.conservativeResize(Eigen::NoChange, 4);
  CHECK_THROWS_AS(runner.run_chunk(wide), DomainError);

  StreamChunk bad_label = make_chunks(d, 10)[1];
  bad_label.labels[9] = 4.0;
  CHECK_THROWS_AS(runner.run_chunk(bad_label), DataError);
  bad_label.labels[9] = 1.5;
  CHECK_THROWS_AS(runner.run_chunk(bad_label), DataError);

  StreamChunk empty;
  empty.features.resize(0, 3);
  CHECK_THROWS_AS(runner.run_chunk(empty), DataError);

  CHECK(runner.metrics().n_seen() == 10);
  CHECK(runner.filter().state().mean() == mean);
}

TEST_CASE("run_stream over one chunk equals run_chunk") {
  const Dataset d = random_dataset(10, 3, 4, 11);
  PrequentialRunner a(ClassifierFilter(3, 4, learning()), RunConfig{});
  PrequentialRunner b(ClassifierFilter(3, 4, learning()), RunConfig{});
  const std::vector<StreamChunk> chunks = make_chunks(d, 10);
  a.run_chunk(chunks[0]);
  bool given = false;
  b.run_stream([&]() -> std::optional<StreamChunk> {
    if (given) return std::nullopt;
    given = true;
    return chunks[0];
  });
  CHECK(a.filter().state().mean() == b.filter().state().mean());
  CHECK(a.metrics().cumulative_log_predictive() == b.metrics().cumulative_log_predictive());
}

TEST_CASE("stationary stream keeps gamma near one") {
  SyntheticClassSpec spec = SyntheticClassSpec::split(1, 4, 8, 2000, 12);
  spec.center_scale = 2.0;
  spec.noise_scale = 0.5;
  Dataset d = gen_class_stream(spec);
  d.features = FeatureTransform{false, true}.apply(d.features);
  ClassifierOptions o;
  o.hp = Hyperparams::defaults_for(9, 4);
  o.delta_lr = 0.03;
  PrequentialRunner runner(ClassifierFilter(9, 4, o), RunConfig{});
  runner.run_stream(make_chunks(d, 10));
  std::vector<double> tail(runner.gamma_trace().begin() + 1000, runner.gamma_trace().end());
  std::nth_element(tail.begin(), tail.begin() + tail.size() / 2, tail.end());
  CHECK(tail[tail.size() / 2] > 0.99);
}

TEST_CASE("changing future labels leaves past scores bitwise unchanged") {
  const Dataset d = random_dataset(200, 3, 4, 13);
  Dataset mutated = d;
  for (std::size_t i = 120; i < 200; ++i) mutated.labels[i] = std::fmod(d.labels[i] + 1.0, 4.0);
  RunConfig rc;
  rc.replay = ReplayConfig{100, 10};
  PrequentialRunner a(ClassifierFilter(3, 4, learning()), rc);
  PrequentialRunner b(ClassifierFilter(3, 4, learning()), rc);
  a.run_stream(make_chunks(d, 10));
  b.run_stream(make_chunks(mutated, 10));
  for (std::size_t i = 0; i < 120; ++i) {
    REQUIRE(a.metrics().point_log_predictive()[i] == b.metrics().point_log_predictive()[i]);
    REQUIRE(a.point_probs()[i] == b.point_probs()[i]);
  }
  // The first mutated chunk is still scored by the same state.
  for (std::size_t i = 120; i < 130; ++i) REQUIRE(a.point_probs()[i] == b.point_probs()[i]);
}

TEST_CASE("run config validation") {
  RunConfig rc;
  rc.chunk_size = 0;
  CHECK_THROWS_AS(rc.validate(), ConfigError);
  rc.chunk_size = 5;
  rc.replay = ReplayConfig{10, 11};
  CHECK_THROWS_AS(rc.validate(), ConfigError);
}

#include <doctest.h>

#include <random>

#include "cogload/features.hpp"
#include "test_util.hpp"

using namespace cogload;

namespace {

Eigen::MatrixXf montage_frame(double base) {
  const auto& names = table_montage();
  Eigen::MatrixXf frames(1, names.size());
  for (std::size_t c = 0; c < names.size(); ++c)
    frames(0, c) = static_cast<float>(base + 0.01 * c);
  return frames;
}

}  // namespace

TEST_CASE("builtin groupings match the published sensor tables") {
  const ChannelGrouping& sd31 = builtin_grouping("sd31");
  CHECK(sd31.group_count() == 31);
  CHECK(sd31.pooling == Pooling::None);
  for (const auto& group : sd31.groups) CHECK(group.size() == 1);

  CHECK(builtin_grouping("p21").group_count() == 21);
  CHECK(builtin_grouping("p25").group_count() == 25);

  // Every referenced channel is in the montage, by the exact spelling.
  for (const auto& name : builtin_grouping_names())
    CHECK_NOTHROW(builtin_grouping(name).validate_against(table_montage()));

  // The 21-region table lists P8 in two groups; overlap is intentional.
  int p8_groups = 0;
  for (const auto& group : builtin_grouping("p21").groups)
    for (const auto& channel : group)
      if (channel == "P8") ++p8_groups;
  CHECK(p8_groups == 2);

  CHECK_THROWS_AS(builtin_grouping("p99"), ConfigError);
}

TEST_CASE("grouping JSON files round trip") {
  TempDir dir("grouping_files");
  for (const auto& name : builtin_grouping_names()) {
    const ChannelGrouping& original = builtin_grouping(name);
    save_grouping(original, dir / (name + ".json"));
    const ChannelGrouping loaded = load_grouping(dir / (name + ".json"));
    CHECK(loaded.name == original.name);
    CHECK(loaded.pooling == original.pooling);
    CHECK(loaded.groups == original.groups);
  }
}

TEST_CASE("apply_grouping produces one output per group") {
  const Eigen::MatrixXf frames = montage_frame(0.0);
  const FeatureMatrix p21 = apply_grouping(
      frames, builtin_grouping("p21").with_pooling(Pooling::Max),
      table_montage());
  CHECK(p21.cols() == 21);
  CHECK(p21.rows() == 1);

  const FeatureMatrix sd31 =
      apply_grouping(frames, builtin_grouping("sd31"), table_montage());
  CHECK(sd31.cols() == 31);
}

TEST_CASE("apply_grouping singleton and pooling arithmetic") {
  const std::vector<std::string> channels = {"FP1", "FP2", "Fz"};
  Eigen::MatrixXf frames(1, 3);
  frames << 0.2f, -0.4f, 7.0f;

  ChannelGrouping singleton;
  singleton.name = "fz";
  singleton.groups = {{"Fz"}};
  singleton.pooling = Pooling::None;
  CHECK(apply_grouping(frames, singleton, channels)(0, 0) ==
        static_cast<double>(7.0f));

  ChannelGrouping pair;
  pair.name = "frontal";
  pair.groups = {{"FP1", "FP2"}};
  pair.pooling = Pooling::Max;
  CHECK(apply_grouping(frames, pair, channels)(0, 0) ==
        doctest::Approx(0.2).epsilon(1e-7));
  pair.pooling = Pooling::Average;
  CHECK(apply_grouping(frames, pair, channels)(0, 0) ==
        doctest::Approx(-0.1).epsilon(1e-7));

  ChannelGrouping unknown;
  unknown.name = "bad";
  unknown.groups = {{"XX9"}};
  unknown.pooling = Pooling::Max;
  CHECK_THROWS_AS(apply_grouping(frames, unknown, channels), ConfigError);
}

TEST_CASE("max pooling dominates average pooling elementwise") {
  std::mt19937_64 rng(11);
  std::normal_distribution<float> normal(0.f, 1.f);
  Eigen::MatrixXf frames(50, table_montage().size());
  for (Eigen::Index t = 0; t < frames.rows(); ++t)
    for (Eigen::Index c = 0; c < frames.cols(); ++c)
      frames(t, c) = normal(rng);

  const auto& grouping = builtin_grouping("p25");
  const FeatureMatrix max_pooled = apply_grouping(
      frames, grouping.with_pooling(Pooling::Max), table_montage());
  const FeatureMatrix avg_pooled = apply_grouping(
      frames, grouping.with_pooling(Pooling::Average), table_montage());
  CHECK(((max_pooled - avg_pooled).array() >= -1e-12).all());
}

TEST_CASE("sma_smooth trailing means") {
  FeatureMatrix seq(3, 1);
  seq << 1, 3, 5;
  const FeatureMatrix out = sma_smooth(seq, 2);
  CHECK(out(0, 0) == doctest::Approx(1.0));
  CHECK(out(1, 0) == doctest::Approx(2.0));
  CHECK(out(2, 0) == doctest::Approx(4.0));

  CHECK((sma_smooth(seq, 1) - seq).cwiseAbs().maxCoeff() == 0.0);

  const FeatureMatrix constant = FeatureMatrix::Constant(10, 3, 2.5);
  for (int window : {1, 4, 16, 100})
    CHECK((sma_smooth(constant, window) - constant).cwiseAbs().maxCoeff() ==
          doctest::Approx(0.0).epsilon(1e-15));

  CHECK_THROWS_AS(sma_smooth(seq, 0), ConfigError);
}

TEST_CASE("sma_smooth is linear") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 1.0);
  FeatureMatrix x(40, 2), y(40, 2);
  for (Eigen::Index t = 0; t < 40; ++t)
    for (int d = 0; d < 2; ++d) {
      x(t, d) = normal(rng);
      y(t, d) = normal(rng);
    }
  const double a = 2.25, b = -0.75;
  const FeatureMatrix lhns = sma_smooth(a * x + b * y, 7);
  const FeatureMatrix rhs = a * sma_smooth(x, 7) + b * sma_smooth(y, 7);
  CHECK((lhns - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gmvn population statistics and floor") {
  FeatureMatrix a(1, 1), b(1, 1);
  a << 0.0;
  b << 2.0;
  const GmvnStats stats = fit_gmvn({a, b});
  CHECK(stats.mean[0] == doctest::Approx(1.0));
  CHECK(stats.std[0] == doctest::Approx(1.0));  // population: ((0-1)^2+(2-1)^2)/2

  const FeatureMatrix constant = FeatureMatrix::Constant(5, 2, 3.0);
  const GmvnStats degenerate = fit_gmvn({constant}, 1e-6);
  CHECK(degenerate.std[0] == 1e-6);
  CHECK(degenerate.std[1] == 1e-6);

  CHECK_THROWS_AS(fit_gmvn({}), DataError);
}

TEST_CASE("gmvn normalization identities") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal(2.0, 3.0);
  FeatureMatrix data(400, 3);
  for (Eigen::Index t = 0; t < data.rows(); ++t)
    for (int d = 0; d < 3; ++d) data(t, d) = normal(rng);

  const GmvnStats stats = fit_gmvn({data});
  const FeatureMatrix normalized = apply_gmvn(data, stats);
  for (int d = 0; d < 3; ++d) {
    CHECK(std::abs(normalized.col(d).mean()) < 1e-8);
    const double var = normalized.col(d).squaredNorm() / normalized.rows() -
                       normalized.col(d).mean() * normalized.col(d).mean();
    CHECK(var == doctest::Approx(1.0).epsilon(1e-6));
  }

  // Refit on normalized data is the identity in distribution.
  const GmvnStats refit = fit_gmvn({normalized});
  CHECK(refit.mean.cwiseAbs().maxCoeff() < 1e-8);
  CHECK((refit.std.array() - 1.0).abs().maxCoeff() < 1e-6);

  GmvnStats manual;
  manual.mean = Eigen::VectorXd::Constant(1, 1.0);
  manual.std = Eigen::VectorXd::Constant(1, 1.0);
  FeatureMatrix four(1, 1);
  four << 4.0;
  CHECK(apply_gmvn(four, manual)(0, 0) == doctest::Approx(3.0));

  GmvnStats identity;
  identity.mean = Eigen::VectorXd::Zero(3);
  identity.std = Eigen::VectorXd::Ones(3);
  CHECK((apply_gmvn(data, identity) - data).cwiseAbs().maxCoeff() == 0.0);

  FeatureMatrix wrong(1, 2);
  wrong << 1.0, 2.0;
  CHECK_THROWS_AS(apply_gmvn(wrong, manual), DataError);
}

TEST_CASE("append_deltas central differences with edge replication") {
  FeatureMatrix seq(3, 1);
  seq << 1, 2, 4;
  const FeatureMatrix out = append_deltas(seq);
  REQUIRE(out.cols() == 2);
  CHECK(out(0, 1) == doctest::Approx(0.5));
  CHECK(out(1, 1) == doctest::Approx(1.5));
  CHECK(out(2, 1) == doctest::Approx(1.0));

  // Left half recovers the input exactly.
  CHECK((out.leftCols(1) - seq).cwiseAbs().maxCoeff() == 0.0);

  const FeatureMatrix constant = FeatureMatrix::Constant(6, 4, -1.25);
  const FeatureMatrix const_out = append_deltas(constant);
  CHECK(const_out.rightCols(4).cwiseAbs().maxCoeff() == 0.0);
  CHECK(const_out.cols() == 8);

  FeatureMatrix wide(2, 21);
  wide.setRandom();
  CHECK(append_deltas(wide).cols() == 42);
}

TEST_CASE("featurization is bit deterministic") {
  std::mt19937_64 rng(23);
  std::normal_distribution<float> normal(0.f, 1.f);
  Eigen::MatrixXf frames(30, table_montage().size());
  for (Eigen::Index t = 0; t < frames.rows(); ++t)
    for (Eigen::Index c = 0; c < frames.cols(); ++c)
      frames(t, c) = normal(rng);

  auto featurize = [&] {
    const FeatureMatrix grouped = apply_grouping(
        frames, builtin_grouping("p21").with_pooling(Pooling::Max),
        table_montage());
    return append_deltas(sma_smooth(grouped, 16));
  };
  const FeatureMatrix a = featurize();
  const FeatureMatrix b = featurize();
  CHECK(std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0);
}

TEST_CASE("auto grouping covers synthetic channels") {
  const std::vector<std::string> channels = {"CH01", "CH02", "CH03", "CH04",
                                             "CH05"};
  const ChannelGrouping g = auto_grouping(channels, 3, Pooling::Max);
  CHECK(g.group_count() == 2);
  CHECK(g.groups[0].size() == 3);
  CHECK(g.groups[1].size() == 2);
  CHECK_NOTHROW(g.validate_against(channels));
}

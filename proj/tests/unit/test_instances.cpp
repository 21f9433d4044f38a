#include "ddtune/ddtune.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

using namespace ddtune;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("ddtune_" + name)).string();
}

Matrix random_distance(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix d = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) d(i, j) = d(j, i) = u(rng);
  return d;
}

}  // namespace

TEST(CombineDistance, VertexOfSimplexReturnsThatMatrix) {
  std::mt19937_64 rng(1);
  std::vector<Matrix> ds{random_distance(5, rng), random_distance(5, rng)};
  const std::vector<double> beta{1.0, 0.0};
  EXPECT_EQ(combine_distance(beta, ds), ds[0]);
}

TEST(CombineDistance, MidpointAverages) {
  Matrix a = Matrix::Zero(2, 2), b = Matrix::Zero(2, 2);
  a(0, 1) = a(1, 0) = 2.0;
  b(0, 1) = b(1, 0) = 4.0;
  const std::vector<Matrix> ds{a, b};
  const std::vector<double> beta{0.5, 0.5};
  EXPECT_EQ(combine_distance(beta, ds)(0, 1), 3.0);
}

TEST(CombineDistance, MatchesScalarLoop) {
  std::mt19937_64 rng(2);
  const std::vector<Matrix> ds{random_distance(4, rng), random_distance(4, rng)};
  const std::vector<double> beta{0.3, 0.7};
  const Matrix c = combine_distance(beta, ds);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const int lo = std::min(i, j), hi = std::max(i, j);
      const double want = 0.3 * ds[0](lo, hi) + 0.7 * ds[1](lo, hi);
      EXPECT_NEAR(c(i, j), want, 1e-15);
    }
}

TEST(CombineDistance, LinearInBeta) {
  std::mt19937_64 rng(3);
  const std::vector<Matrix> ds{random_distance(6, rng), random_distance(6, rng), random_distance(6, rng)};
  const std::vector<double> b1{0.2, 0.5, 0.3}, b2{0.6, 0.1, 0.3};
  for (double a : {0.0, 0.25, 0.5, 0.9, 1.0}) {
    std::vector<double> mix(3);
    for (int i = 0; i < 3; ++i) mix[i] = a * b1[i] + (1 - a) * b2[i];
    const Matrix lhs = combine_distance(mix, ds);
    const Matrix rhs = a * combine_distance(b1, ds) + (1 - a) * combine_distance(b2, ds);
    EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-14) << "a=" << a;
  }
}

TEST(CombineDistance, RejectsBadInputs) {
  std::mt19937_64 rng(4);
  const std::vector<Matrix> ds{random_distance(3, rng), random_distance(3, rng)};
  EXPECT_THROW(combine_distance(std::vector<double>{0.5, 0.6}, ds), InvalidArgument);
  EXPECT_THROW(combine_distance(std::vector<double>{1.0}, ds), InvalidArgument);
  EXPECT_THROW(combine_distance(std::vector<double>{1.5, -0.5}, ds), InvalidArgument);
  const std::vector<Matrix> mismatched{random_distance(3, rng), random_distance(4, rng)};
  EXPECT_THROW(combine_distance(std::vector<double>{0.5, 0.5}, mismatched), InvalidArgument);
  // Within the 1e-12 tolerance.
  EXPECT_NO_THROW(combine_distance(std::vector<double>{0.5, 0.5 + 5e-13}, ds));
}

TEST(GenClustering, MinimalInstance) {
  const auto inst = gen_clustering(7, 2, 1, 2, 1.0, ClusteringGenerator::UniformSmooth);
  EXPECT_EQ(inst.n(), 2);
  EXPECT_EQ(inst.L(), 1);
  const double d01 = inst.distances[0](0, 1);
  EXPECT_GE(d01, 0.0);
  EXPECT_LE(d01, 1.0);
  EXPECT_EQ(inst.target, (Partition{{0}, {1}}));
}

TEST(GenClustering, Deterministic) {
  for (auto g : {ClusteringGenerator::UniformSmooth, ClusteringGenerator::PlantedBlobs}) {
    EXPECT_EQ(gen_clustering(11, 9, 2, 3, 1.0, g), gen_clustering(11, 9, 2, 3, 1.0, g));
    EXPECT_FALSE(gen_clustering(11, 9, 2, 3, 1.0, g) == gen_clustering(12, 9, 2, 3, 1.0, g));
  }
}

TEST(GenClustering, UniformEntriesPassKsTest) {
  const auto inst = gen_clustering(1, 100, 2, 3, 1.0, ClusteringGenerator::UniformSmooth);
  std::vector<double> xs;
  for (const auto& d : inst.distances)
    for (int i = 0; i < 100; ++i)
      for (int j = i + 1; j < 100; ++j) xs.push_back(d(i, j));
  std::sort(xs.begin(), xs.end());
  const double N = static_cast<double>(xs.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    ks = std::max({ks, (i + 1) / N - xs[i], xs[i] - i / N});
  EXPECT_LT(ks, 0.05);
}

TEST(GenClustering, InvariantsHoldAcrossSeeds) {
  std::mt19937_64 rng(5);
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const int n = 2 + static_cast<int>(rng() % 9);
    const int k = 1 + static_cast<int>(rng() % n);
    const int L = 1 + static_cast<int>(rng() % 3);
    const auto gen = seed % 2 ? ClusteringGenerator::PlantedBlobs : ClusteringGenerator::UniformSmooth;
    const auto inst = gen_clustering(seed, n, L, k, 2.0, gen);
    ASSERT_NO_THROW(inst.validate()) << "seed " << seed;
    ASSERT_EQ(inst.k(), k);
  }
}

TEST(GenClustering, RejectsTooManyClusters) {
  EXPECT_THROW(gen_clustering(1, 3, 1, 4, 1.0, ClusteringGenerator::UniformSmooth), InvalidArgument);
  EXPECT_THROW(gen_clustering(1, 1, 1, 1, 1.0, ClusteringGenerator::UniformSmooth), InvalidArgument);
  EXPECT_THROW(gen_clustering(1, 4, 0, 1, 1.0, ClusteringGenerator::UniformSmooth), InvalidArgument);
}

TEST(GenClustering, KappaIsReciprocalOfR) {
  EXPECT_DOUBLE_EQ(gen_clustering(1, 4, 1, 2, 4.0, ClusteringGenerator::UniformSmooth).kappa(), 0.25);
}

TEST(GenSsl, MinimalInstance) {
  const auto inst = gen_ssl(3, 1, 1, 1, 1.0);
  EXPECT_EQ(inst.n(), 2);
  EXPECT_EQ(inst.labeled.size(), 1u);
  EXPECT_EQ(inst.unlabeled.size(), 1u);
  EXPECT_EQ(inst.eval_labels.size(), 1u);
  EXPECT_NO_THROW(inst.validate());
}

TEST(GenSsl, DeterministicAndValid) {
  EXPECT_EQ(gen_ssl(9, 4, 10, 2, 1.0), gen_ssl(9, 4, 10, 2, 1.0));
  for (std::uint64_t s = 0; s < 200; ++s) ASSERT_NO_THROW(gen_ssl(s, 3, 7, 2, 1.0).validate());
}

TEST(GenLogReg, BothClassesAcrossSeeds) {
  int balanced = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto inst = gen_logreg(s, 50, 5, 50, 2.0);
    const bool pos = (inst.y.array() > 0).any(), neg = (inst.y.array() < 0).any();
    balanced += pos && neg;
  }
  EXPECT_EQ(balanced, 20);
}

TEST(GenLogReg, DeterministicShapes) {
  const auto a = gen_logreg(4, 30, 3, 20, 1.0);
  EXPECT_EQ(a, gen_logreg(4, 30, 3, 20, 1.0));
  EXPECT_EQ(a.m(), 30);
  EXPECT_EQ(a.p(), 3);
  EXPECT_EQ(a.m_val(), 20);
  EXPECT_NO_THROW(a.validate());
}

TEST(GenLogReg, FeatureScaleOnlyRescalesRows) {
  const auto a = gen_logreg(4, 30, 3, 20, 2.0, 1.0);
  const auto b = gen_logreg(4, 30, 3, 20, 2.0, 12.0);
  EXPECT_EQ(a.y, b.y);
  EXPECT_LE((12.0 * a.X - b.X).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(InstanceIo, RoundTripsBitExactly) {
  const std::vector<AnyInstance> all{gen_clustering(1, 7, 2, 3, 1.0, ClusteringGenerator::UniformSmooth),
                                     gen_clustering(2, 7, 2, 3, 1.0, ClusteringGenerator::PlantedBlobs),
                                     gen_ssl(3, 3, 5, 2, 1.0), gen_logreg(4, 20, 4, 10, 2.0)};
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto path = temp_path("roundtrip_" + std::to_string(i) + ".json");
    save_instance(all[i], path, header_json(1, json{{"i", i}}));
    EXPECT_EQ(load_instance(path), all[i]) << i;
    std::filesystem::remove(path);
  }
}

TEST(InstanceIo, AsymmetricMatrixNamesTheEntry) {
  auto j = to_json(AnyInstance(gen_clustering(1, 4, 1, 2, 1.0, ClusteringGenerator::UniformSmooth)));
  j["distances"][0][1][2] = 0.123;
  try {
    instance_from_json(j);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("symmetry violated at (1,2)"), std::string::npos) << e.what();
    EXPECT_EQ(e.field(), "distances[0]");
  }
}

TEST(InstanceIo, MalformedFilesGiveParseErrors) {
  auto j = to_json(AnyInstance(gen_ssl(1, 2, 3, 1, 1.0)));
  auto missing = j;
  missing.erase("unlabeled");
  EXPECT_THROW(instance_from_json(missing), ParseError);
  auto bad_label = j;
  bad_label["labeled"][0][1] = 3;
  EXPECT_THROW(instance_from_json(bad_label), ParseError);
  auto bad_type = j;
  bad_type["type"] = "graph";
  EXPECT_THROW(instance_from_json(bad_type), ParseError);

  const auto path = temp_path("garbage.json");
  std::ofstream(path) << "{ not json";
  EXPECT_THROW(load_instance(path), ParseError);
  std::filesystem::remove(path);
  EXPECT_THROW(load_instance(temp_path("does_not_exist.json")), ParseError);
}

TEST(InstanceIo, CountMismatchIsReported) {
  auto j = to_json(AnyInstance(gen_logreg(1, 5, 2, 5, 1.0)));
  j["p"] = 3;
  try {
    instance_from_json(j);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.field(), "p");
  }
}

TEST(ParamPoint, Invariants) {
  EXPECT_NO_THROW(validate_param(LinkageScalarParam{kInf, {1.0}}, 1));
  EXPECT_THROW(validate_param(LinkageScalarParam{0.0, {1.0}}, 1), InvalidArgument);
  EXPECT_THROW(validate_param(LinkageScalarParam{5e-7, {1.0}}, 1), InvalidArgument);
  EXPECT_NO_THROW(validate_param(LinkageScalarParam{-1e-6, {1.0}}, 1));
  EXPECT_THROW(validate_param(LinkageScalarParam{1.0, {0.5, 0.4}}, 2), InvalidArgument);
  EXPECT_THROW(validate_param(SslParam{0.0, {1.0}}, 1), InvalidArgument);
  EXPECT_THROW(validate_param(LinkageVectorParam{{1.0}}, 2), InvalidArgument);
}

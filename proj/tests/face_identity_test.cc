#include "metasecure/face_identity.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "json.hpp"
#include "metasecure/errors.h"

namespace metasecure {
namespace {

std::vector<double> Gaussian(std::mt19937_64& rng, size_t n = kEmbeddingDim) {
  std::normal_distribution<double> g;
  std::vector<double> v(n);
  for (auto& x : v)
    x = g(rng);
  return v;
}

double Norm(std::span<const double> v) {
  double s = 0;
  for (double x : v)
    s += x * x;
  return std::sqrt(s);
}

// Test-side construction of a unit vector at cosine |cos| from unit |u|.
std::vector<double> AtCosine(const Embedding& u, double cos,
                             std::mt19937_64& rng) {
  std::vector<double> w = Gaussian(rng);
  double dot = 0;
  for (size_t i = 0; i < kEmbeddingDim; ++i)
    dot += w[i] * u[i];
  for (size_t i = 0; i < kEmbeddingDim; ++i)
    w[i] -= dot * u[i];
  double n = Norm(w);
  double sin = std::sqrt(1 - cos * cos);
  std::vector<double> out(kEmbeddingDim);
  for (size_t i = 0; i < kEmbeddingDim; ++i)
    out[i] = cos * u[i] + sin * w[i] / n;
  return out;
}

std::vector<double> Features(double score) {
  auto f = ReferencePadClassifier::FeaturesForScore(score);
  return {f.begin(), f.end()};
}

class FaceTest : public ::testing::Test {
 protected:
  FaceRegistry registry_;
  std::mt19937_64 rng_{42};
};

TEST_F(FaceTest, EnrollNormalizes) {
  std::vector<double> twos(kEmbeddingDim, 2.0);
  FaceTemplate t = registry_.EnrollTemplate("u1", twos);
  EXPECT_NEAR(Norm(t.vector), 1.0, 1e-12);
  EXPECT_NEAR(t.vector[0], 1.0 / std::sqrt(128.0), 1e-15);
  EXPECT_TRUE(registry_.HasTemplate("u1"));
}

TEST_F(FaceTest, EnrollRejectsBadVectors) {
  EXPECT_THROW(registry_.EnrollTemplate("u1", std::vector<double>(128, 0.0)),
               ValidationError);
  std::vector<double> nan(128, 1.0);
  nan[5] = std::nan("");
  EXPECT_THROW(registry_.EnrollTemplate("u1", nan), ValidationError);
  std::vector<double> inf(128, 1.0);
  inf[0] = INFINITY;
  EXPECT_THROW(registry_.EnrollTemplate("u1", inf), ValidationError);
  EXPECT_THROW(registry_.EnrollTemplate("u1", std::vector<double>(127, 1.0)),
               ValidationError);
  EXPECT_FALSE(registry_.HasTemplate("u1"));
}

TEST_F(FaceTest, ReEnrollmentReplaces) {
  auto v1 = Gaussian(rng_);
  auto v2 = Gaussian(rng_);
  registry_.EnrollTemplate("u1", v1);
  registry_.EnrollTemplate("u1", v2);
  auto live = Features(0.1);
  EXPECT_NEAR(registry_.VerifyFace("u1", v2, live).confidence, 1.0, 1e-12);
  EXPECT_LT(registry_.VerifyFace("u1", v1, live).confidence, 0.8);
}

TEST_F(FaceTest, MatchAnchors) {
  Embedding t = NormalizeEmbedding(Gaussian(rng_));
  std::vector<double> same(t.begin(), t.end());
  std::vector<double> anti(kEmbeddingDim);
  for (size_t i = 0; i < kEmbeddingDim; ++i)
    anti[i] = -t[i];
  EXPECT_NEAR(MatchConfidence(same, t), 1.0, 1e-12);
  EXPECT_NEAR(MatchConfidence(anti, t), 0.0, 1e-12);
  EXPECT_NEAR(MatchConfidence(AtCosine(t, 0.0, rng_), t), 0.5, 1e-12);
  EXPECT_THROW(MatchConfidence(std::vector<double>(64, 1.0), t),
               ValidationError);
}

TEST_F(FaceTest, MatchIsSymmetricAndScaleInvariant) {
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  for (int i = 0; i < 500; ++i) {
    auto a = Gaussian(rng_);
    auto b = Gaussian(rng_);
    double ab = MatchConfidence(a, b);
    ASSERT_NEAR(ab, MatchConfidence(b, a), 1e-12);
    ASSERT_GE(ab, 0.0);
    ASSERT_LE(ab, 1.0);
    double k = scale(rng_);
    auto ka = a;
    for (auto& x : ka)
      x *= k;
    ASSERT_NEAR(MatchConfidence(ka, b), ab, 1e-12);
  }
}

TEST_F(FaceTest, PadBands) {
  ReferencePadClassifier pad;
  EXPECT_EQ(pad.Classify(Features(0.1)).verdict, PadClass::kNotSpoof);
  EXPECT_EQ(pad.Classify(Features(0.9)).verdict, PadClass::kSpoof);
  EXPECT_EQ(pad.Classify(Features(0.5)).verdict, PadClass::kUncertain);
  EXPECT_NEAR(pad.Classify(Features(0.37)).spoof_score, 0.37, 1e-12);
  EXPECT_EQ(ClassifySpoofScore(0.3), PadClass::kNotSpoof);
  EXPECT_EQ(ClassifySpoofScore(0.7), PadClass::kSpoof);
  EXPECT_EQ(ClassifySpoofScore(0.3000001), PadClass::kUncertain);
  EXPECT_EQ(ClassifySpoofScore(0.6999999), PadClass::kUncertain);
  // Scores clamp into [0, 1].
  EXPECT_EQ(pad.Classify(std::vector<double>{9, 9, 9, -9}).spoof_score, 1.0);
  EXPECT_EQ(pad.Classify(std::vector<double>{-9, -9, -9, 9}).spoof_score, 0.0);
  EXPECT_THROW(pad.Classify(std::vector<double>{0.1, 0.1, 0.1}), ValidationError);
  EXPECT_THROW(pad.Classify(std::vector<double>{0.1, NAN, 0.1, 0.1}),
               ValidationError);
}

TEST_F(FaceTest, PadIsTheWeightedSum) {
  ReferencePadClassifier pad;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> f = {u(rng_), u(rng_), u(rng_), u(rng_)};
    double want =
        0.35 * f[0] + 0.25 * f[1] + 0.25 * f[2] + 0.15 * (1.0 - f[3]);
    PadVerdict v = pad.Classify(f);
    ASSERT_NEAR(v.spoof_score, want, 1e-12);
    PadClass cls = want >= 0.7   ? PadClass::kSpoof
                   : want <= 0.3 ? PadClass::kNotSpoof
                                 : PadClass::kUncertain;
    ASSERT_EQ(v.verdict, cls);
    ASSERT_EQ(pad.Classify(f).spoof_score, v.spoof_score);
  }
}

TEST_F(FaceTest, VerifyFace) {
  Embedding t = registry_.EnrollTemplate("u1", Gaussian(rng_)).vector;
  std::vector<double> same(t.begin(), t.end());

  FaceDecision live = registry_.VerifyFace("u1", same, Features(0.1));
  EXPECT_TRUE(live.accepted);
  EXPECT_NEAR(live.confidence, 1.0, 1e-12);
  EXPECT_EQ(live.pad.verdict, PadClass::kNotSpoof);

  FaceDecision spoof = registry_.VerifyFace("u1", same, Features(0.9));
  EXPECT_FALSE(spoof.accepted);
  EXPECT_EQ(spoof.confidence, 0.0);
  EXPECT_EQ(spoof.pad.verdict, PadClass::kSpoof);

  FaceDecision unsure = registry_.VerifyFace("u1", same, Features(0.5));
  EXPECT_FALSE(unsure.accepted);
  EXPECT_EQ(unsure.confidence, 0.0);

  EXPECT_THROW(registry_.VerifyFace("u2", same, Features(0.1)), NoTemplateError);
}

TEST_F(FaceTest, ThresholdAtEightyPercent) {
  Embedding t = registry_.EnrollTemplate("u1", Gaussian(rng_)).vector;
  // confidence c means cosine 2c - 1
  FaceDecision below =
      registry_.VerifyFace("u1", AtCosine(t, 2 * 0.79 - 1, rng_), Features(0.1));
  EXPECT_NEAR(below.confidence, 0.79, 1e-9);
  EXPECT_FALSE(below.accepted);
  FaceDecision above =
      registry_.VerifyFace("u1", AtCosine(t, 2 * 0.81 - 1, rng_), Features(0.1));
  EXPECT_NEAR(above.confidence, 0.81, 1e-9);
  EXPECT_TRUE(above.accepted);
}

TEST_F(FaceTest, GateDominatesAcrossInputs) {
  Embedding t = registry_.EnrollTemplate("u1", Gaussian(rng_)).vector;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    std::vector<double> probe =
        i % 2 ? AtCosine(t, 2 * u(rng_) - 1, rng_) : Gaussian(rng_);
    std::vector<double> f = {u(rng_), u(rng_), u(rng_), u(rng_)};
    FaceDecision d = registry_.VerifyFace("u1", probe, f);
    if (d.pad.verdict != PadClass::kNotSpoof)
      ASSERT_FALSE(d.accepted);
    if (d.accepted)
      ASSERT_GE(d.confidence, 0.80);
    ASSERT_EQ(d.accepted, d.pad.verdict == PadClass::kNotSpoof &&
                              MatchConfidence(probe, t) >= 0.80);
  }
}

// Score drawn from the band that classifies as |cls|.
double ScoreFor(PadClass cls, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> low(0.0, 0.3), high(0.7, 1.0),
      mid(0.31, 0.69);
  switch (cls) {
    case PadClass::kNotSpoof:
      return low(rng);
    case PadClass::kSpoof:
      return high(rng);
    case PadClass::kUncertain:
      return mid(rng);
  }
  return 0;
}

std::vector<LabeledSample> Planted(size_t per_class, size_t wrong,
                                   size_t uncertain, std::mt19937_64& rng) {
  std::vector<LabeledSample> out;
  for (PadClass truth : {PadClass::kNotSpoof, PadClass::kSpoof}) {
    PadClass other =
        truth == PadClass::kNotSpoof ? PadClass::kSpoof : PadClass::kNotSpoof;
    for (size_t i = 0; i < per_class; ++i) {
      PadClass shown = i < wrong               ? other
                       : i < wrong + uncertain ? PadClass::kUncertain
                                               : truth;
      out.push_back({{}, Features(ScoreFor(shown, rng)), truth});
    }
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

TEST_F(FaceTest, PerfectClassifierScoresHundredPercent) {
  ConfusionMatrix m = EvaluatePad(Planted(50, 0, 0, rng_), ReferencePadClassifier());
  EXPECT_EQ(m.accuracy, 1.0);
  EXPECT_EQ(m.counts[0][1] + m.counts[0][2] + m.counts[1][0] + m.counts[1][2],
            0u);
  EXPECT_EQ(m.f1[0], 1.0);
  EXPECT_EQ(m.f1[1], 1.0);
  EXPECT_NE(RenderConfusionText(m).find("Accuracy=100.00%"), std::string::npos);
}

TEST_F(FaceTest, PlantedNinetyEightPercent) {
  ConfusionMatrix m =
      EvaluatePad(Planted(500, 10, 0, rng_), ReferencePadClassifier());
  EXPECT_EQ(m.total, 1000u);
  EXPECT_NEAR(m.rates[0][0], 0.98, 0.01);
  EXPECT_NEAR(m.rates[1][1], 0.98, 0.01);
  EXPECT_NEAR(m.rates[0][1], 0.02, 0.01);
  EXPECT_NEAR(m.rates[1][0], 0.02, 0.01);
  EXPECT_NEAR(m.accuracy, 0.98, 0.01);
}

// Recount from raw counts with a separate routine and demand exact equality.
TEST_F(FaceTest, ConfusionArithmeticMatchesIndependentRecount) {
  for (int run = 0; run < 50; ++run) {
    size_t n = 1 + rng_() % 200;
    auto data = Planted(n, rng_() % (n + 1) / 2, rng_() % (n / 4 + 1), rng_);
    ConfusionMatrix m = EvaluatePad(data, ReferencePadClassifier());

    size_t counts[2][3] = {};
    for (const auto& s : data) {
      double score = 0.35 * s.features[0] + 0.25 * s.features[1] +
                     0.25 * s.features[2] + 0.15 * (1 - s.features[3]);
      int col = score <= 0.3 ? 0 : score >= 0.7 ? 1 : 2;
      ++counts[s.label == PadClass::kSpoof][col];
    }
    for (int r = 0; r < 2; ++r) {
      size_t row = counts[r][0] + counts[r][1] + counts[r][2];
      double sum = 0;
      for (int c = 0; c < 3; ++c) {
        ASSERT_EQ(m.counts[r][c], counts[r][c]);
        ASSERT_EQ(m.rates[r][c], row ? double(counts[r][c]) / double(row) : 0.0);
        sum += m.rates[r][c];
      }
      if (row)
        ASSERT_NEAR(sum, 1.0, 1e-9);
    }
    ASSERT_EQ(m.accuracy,
              double(counts[0][0] + counts[1][1]) / double(data.size()));
    for (int k = 0; k < 2; ++k) {
      double precision_denominator = double(counts[0][k] + counts[1][k]);
      double recall_denominator =
          double(counts[k][0] + counts[k][1] + counts[k][2]);
      double p = precision_denominator ? counts[k][k] / precision_denominator : 0;
      double r = recall_denominator ? counts[k][k] / recall_denominator : 0;
      double f1 = p + r > 0 ? 2 * p * r / (p + r) : 0;
      ASSERT_NEAR(m.f1[k], f1, 1e-12);
    }
  }
}

TEST_F(FaceTest, ReportLayout) {
  ConfusionMatrix m =
      EvaluatePad(Planted(500, 7, 0, rng_), ReferencePadClassifier());
  std::string text = RenderConfusionText(m);
  for (const char* label :
       {"Accuracy=98.60%", "Not spoof", "Spoof", "Uncertain", "F1 Score",
        "98.6%", "1.4%"}) {
    EXPECT_NE(text.find(label), std::string::npos) << label << "\n" << text;
  }
  EXPECT_EQ(text, RenderConfusionText(m));

  auto j = nlohmann::json::parse(RenderConfusionJson(m));
  EXPECT_EQ(j["total"], 1000);
  EXPECT_EQ(j["counts"]["NotSpoof"]["Spoof"], 7);
  EXPECT_EQ(j["counts"]["Spoof"]["NotSpoof"], 7);
}

TEST_F(FaceTest, EvaluateRejectsBadDatasets) {
  EXPECT_THROW(EvaluatePad({}, ReferencePadClassifier()), ValidationError);
  std::vector<LabeledSample> d = {{{}, Features(0.1), PadClass::kUncertain}};
  EXPECT_THROW(EvaluatePad(d, ReferencePadClassifier()), ValidationError);
}

TEST_F(FaceTest, DatasetTextRoundTrip) {
  std::string text = "# header comment\n";
  std::vector<LabeledSample> samples;
  for (int i = 0; i < 20; ++i) {
    LabeledSample s{Gaussian(rng_), Gaussian(rng_, 4),
                    i % 2 ? PadClass::kSpoof : PadClass::kNotSpoof};
    text += FormatLabeledSample(s) + "\n";
    samples.push_back(s);
  }
  auto back = ParseLabeledDataset(text);
  ASSERT_EQ(back.size(), samples.size());
  for (size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].embedding, samples[i].embedding);
    EXPECT_EQ(back[i].features, samples[i].features);
    EXPECT_EQ(back[i].label, samples[i].label);
  }
  EXPECT_THROW(ParseLabeledDataset("1,2,3,NotSpoof\n"), ValidationError);
  std::string bad = FormatLabeledSample(samples[0]);
  bad.replace(0, bad.find(','), "x");
  EXPECT_THROW(ParseLabeledDataset(bad), ValidationError);
}

}  // namespace
}  // namespace metasecure

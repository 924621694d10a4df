#ifndef METASECURE_FACE_IDENTITY_H_
#define METASECURE_FACE_IDENTITY_H_

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "metasecure/clock.h"

namespace metasecure {

constexpr size_t kEmbeddingDim = 128;
constexpr size_t kPadFeatureDim = 4;
constexpr double kMatchThreshold = 0.80;
constexpr double kPadNotSpoofMax = 0.3;
constexpr double kPadSpoofMin = 0.7;

using Embedding = std::array<double, kEmbeddingDim>;

struct FaceTemplate {
  Embedding vector{};  // unit L2 norm
  std::string user_id;
  TimestampMs enrolled_at = 0;
};

enum class PadClass { kNotSpoof, kSpoof, kUncertain };

std::string_view ToString(PadClass c);
// Accepts "NotSpoof", "Spoof", "Uncertain" (any case, '_' and ' ' ignored).
PadClass PadClassFromString(std::string_view s);

struct PadVerdict {
  PadClass verdict = PadClass::kUncertain;
  double spoof_score = 0.5;
};

struct FaceDecision {
  bool accepted = false;
  double confidence = 0.0;
  PadVerdict pad;
};

// Scales |v| to unit norm. Throws ValidationError for a wrong dimension, a
// non-finite component or the zero vector.
Embedding NormalizeEmbedding(std::span<const double> v);

// (1 + cos(a, b)) / 2, clamped to [0, 1]. Symmetric and invariant to positive
// scaling of either argument. Throws ValidationError on dimension mismatch,
// non-finite input or a zero vector.
double MatchConfidence(std::span<const double> a, std::span<const double> b);
double MatchTemplate(std::span<const double> probe, const FaceTemplate& tmpl);

// Maps a spoof score onto the three-way verdict.
PadClass ClassifySpoofScore(double spoof_score);

class PadClassifier {
 public:
  virtual ~PadClassifier() = default;
  // Throws ValidationError for malformed features.
  virtual PadVerdict Classify(std::span<const double> features) const = 0;
};

// Deterministic reference classifier over four liveness cues, each nominally
// in [0, 1]:
//   [0] moire energy       high on screen replays
//   [1] specular ratio     high on printed photos and masks
//   [2] texture flatness   high on any flat presentation instrument
//   [3] motion liveness    high on a live subject
// spoof_score = clamp(0.35 m + 0.25 s + 0.25 t + 0.15 (1 - l), 0, 1)
class ReferencePadClassifier : public PadClassifier {
 public:
  static constexpr std::array<double, kPadFeatureDim> kWeights = {0.35, 0.25,
                                                                  0.25, 0.15};

  PadVerdict Classify(std::span<const double> features) const override;

  // A feature point whose score is exactly |score| under this classifier
  // (up to rounding): three cues at |score|, motion at 1 - |score|.
  static std::array<double, kPadFeatureDim> FeaturesForScore(double score);
};

// Per-user enrolled templates with PAD-gated verification. Thread-safe.
class FaceRegistry {
 public:
  explicit FaceRegistry(std::shared_ptr<const PadClassifier> classifier =
                            std::make_shared<ReferencePadClassifier>(),
                        std::shared_ptr<const Clock> clock = DefaultClock());

  // Normalises and stores |vector|, replacing any prior template.
  FaceTemplate EnrollTemplate(const std::string& user_id,
                              std::span<const double> vector);
  std::optional<FaceTemplate> FindTemplate(const std::string& user_id) const;
  bool HasTemplate(const std::string& user_id) const;

  // PAD first; a non-NotSpoof verdict rejects with confidence 0 and skips
  // matching. Otherwise accepted iff confidence >= kMatchThreshold.
  // Throws NoTemplateError, ValidationError.
  FaceDecision VerifyFace(const std::string& user_id,
                          std::span<const double> probe_vector,
                          std::span<const double> probe_features) const;

  const PadClassifier& classifier() const { return *classifier_; }

 private:
  std::shared_ptr<const PadClassifier> classifier_;
  std::shared_ptr<const Clock> clock_;
  mutable std::mutex mu_;
  std::map<std::string, FaceTemplate> templates_;
};

// PAD evaluation ---------------------------------------------------------------

struct LabeledSample {
  std::vector<double> embedding;  // may be empty when only PAD is evaluated
  std::vector<double> features;
  PadClass label = PadClass::kNotSpoof;  // NotSpoof or Spoof only
};

// Rows are the true class (NotSpoof, Spoof); columns the predicted class
// (NotSpoof, Spoof, Uncertain).
struct ConfusionMatrix {
  std::array<std::array<size_t, 3>, 2> counts{};
  std::array<std::array<double, 3>, 2> rates{};
  double accuracy = 0.0;
  // F1 for the NotSpoof and Spoof predictions; Uncertain has none.
  std::array<double, 2> f1{};
  size_t total = 0;
};

// Throws ValidationError for an empty dataset or an Uncertain label.
ConfusionMatrix EvaluatePad(const std::vector<LabeledSample>& dataset,
                            const PadClassifier& classifier);

// Aligned text table: true classes as rows, predictions as columns, then
// accuracy and per-class F1.
std::string RenderConfusionText(const ConfusionMatrix& m);
std::string RenderConfusionJson(const ConfusionMatrix& m);

// One sample per line: 128 embedding reals, the PAD feature block, then the
// label, comma separated. Blank lines and '#' comments are skipped.
std::vector<LabeledSample> ParseLabeledDataset(std::string_view text);
std::vector<LabeledSample> LoadLabeledDataset(const std::filesystem::path& path);
std::string FormatLabeledSample(const LabeledSample& sample);

}  // namespace metasecure

#endif  // METASECURE_FACE_IDENTITY_H_

#include "metasecure/face_identity.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "metasecure/errors.h"

namespace metasecure {

namespace {

void CheckFinite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x))
      throw ValidationError(std::string(what) + " has a non-finite component");
  }
}

double Norm(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v)
    sum += x * x;
  return std::sqrt(sum);
}

std::string Percent(double rate) {
  char buf[32];
  // Whole percentages print without a fractional part, as "0%" / "100%".
  double pct = rate * 100.0;
  if (std::fabs(pct - std::round(pct)) < 1e-9)
    std::snprintf(buf, sizeof(buf), "%.0f%%", pct);
  else
    std::snprintf(buf, sizeof(buf), "%.1f%%", pct);
  return buf;
}

std::string Fixed(double v, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

}  // namespace

std::string_view ToString(PadClass c) {
  switch (c) {
    case PadClass::kNotSpoof:
      return "NotSpoof";
    case PadClass::kSpoof:
      return "Spoof";
    case PadClass::kUncertain:
      return "Uncertain";
  }
  return "Uncertain";
}

PadClass PadClassFromString(std::string_view s) {
  std::string key;
  for (char ch : s) {
    if (ch == '_' || ch == ' ' || ch == '-')
      continue;
    key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  }
  if (key == "notspoof")
    return PadClass::kNotSpoof;
  if (key == "spoof")
    return PadClass::kSpoof;
  if (key == "uncertain")
    return PadClass::kUncertain;
  throw ValidationError("unknown PAD class: " + std::string(s));
}

Embedding NormalizeEmbedding(std::span<const double> v) {
  if (v.size() != kEmbeddingDim) {
    throw ValidationError("face vector must have 128 components, got " +
                          std::to_string(v.size()));
  }
  CheckFinite(v, "face vector");
  double norm = Norm(v);
  if (norm == 0.0)
    throw ValidationError("face vector must be nonzero");
  Embedding out;
  for (size_t i = 0; i < kEmbeddingDim; ++i)
    out[i] = v[i] / norm;
  return out;
}

double MatchConfidence(std::span<const double> a, std::span<const double> b) {
  if (a.size() != kEmbeddingDim || b.size() != kEmbeddingDim) {
    throw ValidationError("dimension mismatch: " + std::to_string(a.size()) +
                          " vs " + std::to_string(b.size()));
  }
  CheckFinite(a, "probe");
  CheckFinite(b, "template");
  double na = Norm(a);
  double nb = Norm(b);
  if (na == 0.0 || nb == 0.0)
    throw ValidationError("cannot match a zero vector");
  double dot = 0.0;
  for (size_t i = 0; i < kEmbeddingDim; ++i)
    dot += a[i] * b[i];
  double cosine = dot / (na * nb);
  return std::clamp((1.0 + cosine) / 2.0, 0.0, 1.0);
}

double MatchTemplate(std::span<const double> probe, const FaceTemplate& tmpl) {
  return MatchConfidence(probe, tmpl.vector);
}

PadClass ClassifySpoofScore(double spoof_score) {
  if (spoof_score >= kPadSpoofMin)
    return PadClass::kSpoof;
  if (spoof_score <= kPadNotSpoofMax)
    return PadClass::kNotSpoof;
  return PadClass::kUncertain;
}

PadVerdict ReferencePadClassifier::Classify(
    std::span<const double> features) const {
  if (features.size() != kPadFeatureDim) {
    throw ValidationError("PAD features must have 4 components, got " +
                          std::to_string(features.size()));
  }
  CheckFinite(features, "PAD features");
  double score = kWeights[0] * features[0] + kWeights[1] * features[1] +
                 kWeights[2] * features[2] + kWeights[3] * (1.0 - features[3]);
  score = std::clamp(score, 0.0, 1.0);
  return PadVerdict{ClassifySpoofScore(score), score};
}

std::array<double, kPadFeatureDim> ReferencePadClassifier::FeaturesForScore(
    double score) {
  return {score, score, score, 1.0 - score};
}

// FaceRegistry ---------------------------------------------------------------

FaceRegistry::FaceRegistry(std::shared_ptr<const PadClassifier> classifier,
                           std::shared_ptr<const Clock> clock)
    : classifier_(std::move(classifier)), clock_(std::move(clock)) {}

FaceTemplate FaceRegistry::EnrollTemplate(const std::string& user_id,
                                          std::span<const double> vector) {
  FaceTemplate tmpl{NormalizeEmbedding(vector), user_id, clock_->NowMs()};
  std::lock_guard lock(mu_);
  templates_[user_id] = tmpl;
  return tmpl;
}

std::optional<FaceTemplate> FaceRegistry::FindTemplate(
    const std::string& user_id) const {
  std::lock_guard lock(mu_);
  auto it = templates_.find(user_id);
  if (it == templates_.end())
    return std::nullopt;
  return it->second;
}

bool FaceRegistry::HasTemplate(const std::string& user_id) const {
  std::lock_guard lock(mu_);
  return templates_.count(user_id) > 0;
}

FaceDecision FaceRegistry::VerifyFace(
    const std::string& user_id,
    std::span<const double> probe_vector,
    std::span<const double> probe_features) const {
  auto tmpl = FindTemplate(user_id);
  if (!tmpl)
    throw NoTemplateError("no face template enrolled for " + user_id);

  FaceDecision decision;
  decision.pad = classifier_->Classify(probe_features);
  if (decision.pad.verdict != PadClass::kNotSpoof) {
    decision.accepted = false;
    decision.confidence = 0.0;
    return decision;
  }
  decision.confidence = MatchTemplate(probe_vector, *tmpl);
  decision.accepted = decision.confidence >= kMatchThreshold;
  return decision;
}

// Evaluation -----------------------------------------------------------------

ConfusionMatrix EvaluatePad(const std::vector<LabeledSample>& dataset,
                            const PadClassifier& classifier) {
  if (dataset.empty())
    throw ValidationError("PAD evaluation needs at least one sample");
  ConfusionMatrix m;
  for (const auto& sample : dataset) {
    if (sample.label == PadClass::kUncertain)
      throw ValidationError("dataset labels must be NotSpoof or Spoof");
    size_t row = sample.label == PadClass::kNotSpoof ? 0 : 1;
    size_t col = static_cast<size_t>(classifier.Classify(sample.features).verdict);
    ++m.counts[row][col];
  }
  m.total = dataset.size();
  for (size_t r = 0; r < 2; ++r) {
    size_t row_total = m.counts[r][0] + m.counts[r][1] + m.counts[r][2];
    for (size_t c = 0; c < 3; ++c) {
      m.rates[r][c] = row_total ? static_cast<double>(m.counts[r][c]) /
                                      static_cast<double>(row_total)
                                : 0.0;
    }
  }
  m.accuracy = static_cast<double>(m.counts[0][0] + m.counts[1][1]) /
               static_cast<double>(m.total);
  for (size_t k = 0; k < 2; ++k) {
    double tp = static_cast<double>(m.counts[k][k]);
    double predicted = static_cast<double>(m.counts[0][k] + m.counts[1][k]);
    double actual = static_cast<double>(m.counts[k][0] + m.counts[k][1] +
                                        m.counts[k][2]);
    // F1 = 2TP / (predicted + actual); 0 when the class never occurs.
    m.f1[k] = (predicted + actual) > 0 ? 2.0 * tp / (predicted + actual) : 0.0;
  }
  return m;
}

std::string RenderConfusionText(const ConfusionMatrix& m) {
  const std::string corner = "Accuracy=" + Fixed(m.accuracy * 100.0, 2) + "%";
  const std::array<std::string, 4> header = {corner, "Not spoof", "Spoof",
                                             "Uncertain"};
  std::vector<std::array<std::string, 4>> rows;
  rows.push_back(header);
  rows.push_back({"Not spoof", Percent(m.rates[0][0]), Percent(m.rates[0][1]),
                  Percent(m.rates[0][2])});
  rows.push_back({"Spoof", Percent(m.rates[1][0]), Percent(m.rates[1][1]),
                  Percent(m.rates[1][2])});
  rows.push_back({"F1 Score", Fixed(m.f1[0], 2), Fixed(m.f1[1], 2), ""});

  std::array<size_t, 4> width{};
  for (const auto& row : rows) {
    for (size_t c = 0; c < 4; ++c)
      width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  auto rule = [&] {
    out << '+';
    for (size_t c = 0; c < 4; ++c)
      out << std::string(width[c] + 2, '-') << '+';
    out << '\n';
  };
  rule();
  for (size_t r = 0; r < rows.size(); ++r) {
    out << '|';
    for (size_t c = 0; c < 4; ++c) {
      const std::string& cell = rows[r][c];
      out << ' ' << cell << std::string(width[c] - cell.size(), ' ') << " |";
    }
    out << '\n';
    rule();
  }
  return out.str();
}

std::string RenderConfusionJson(const ConfusionMatrix& m) {
  nlohmann::json j;
  j["total"] = m.total;
  j["accuracy"] = m.accuracy;
  const char* truths[] = {"NotSpoof", "Spoof"};
  const char* preds[] = {"NotSpoof", "Spoof", "Uncertain"};
  for (size_t r = 0; r < 2; ++r) {
    for (size_t c = 0; c < 3; ++c) {
      j["counts"][truths[r]][preds[c]] = m.counts[r][c];
      j["rates"][truths[r]][preds[c]] = m.rates[r][c];
    }
    j["f1"][truths[r]] = m.f1[r];
  }
  return j.dump(2) + "\n";
}

std::vector<LabeledSample> ParseLabeledDataset(std::string_view text) {
  std::vector<LabeledSample> out;
  std::istringstream in{std::string(text)};
  std::string line;
  size_t line_no = 0;
  const size_t expected = kEmbeddingDim + kPadFeatureDim + 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = Trim(line);
    if (view.empty() || view.front() == '#')
      continue;
    std::vector<std::string_view> fields;
    size_t start = 0;
    while (true) {
      size_t comma = view.find(',', start);
      fields.push_back(Trim(view.substr(start, comma - start)));
      if (comma == std::string_view::npos)
        break;
      start = comma + 1;
    }
    if (fields.size() != expected) {
      throw ValidationError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(expected) + " fields, got " +
                            std::to_string(fields.size()));
    }
    LabeledSample sample;
    sample.embedding.reserve(kEmbeddingDim);
    sample.features.reserve(kPadFeatureDim);
    for (size_t i = 0; i + 1 < fields.size(); ++i) {
      double v = 0.0;
      auto f = fields[i];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v)) {
        throw ValidationError("line " + std::to_string(line_no) +
                              ": bad number '" + std::string(f) + "'");
      }
      (i < kEmbeddingDim ? sample.embedding : sample.features).push_back(v);
    }
    sample.label = PadClassFromString(fields.back());
    if (sample.label == PadClass::kUncertain) {
      throw ValidationError("line " + std::to_string(line_no) +
                            ": label must be NotSpoof or Spoof");
    }
    out.push_back(std::move(sample));
  }
  return out;
}

std::vector<LabeledSample> LoadLabeledDataset(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw ValidationError("cannot open dataset " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseLabeledDataset(buf.str());
}

std::string FormatLabeledSample(const LabeledSample& sample) {
  std::string line;
  auto append = [&](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    line += buf;
    line += ',';
  };
  for (double v : sample.embedding)
    append(v);
  for (double v : sample.features)
    append(v);
  line += ToString(sample.label);
  return line;
}

}  // namespace metasecure

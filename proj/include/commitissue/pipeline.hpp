#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "commitissue/extraction.hpp"
#include "commitissue/schema.hpp"

namespace commitissue::pipeline {

/// Source is a sequentialized diff; target is either grounding text or a
/// commit message.
struct TrainingPair {
  std::string source;
  std::string target;

  friend bool operator==(const TrainingPair&, const TrainingPair&) = default;
};
using GroundingPair = TrainingPair;
using FineTunePair = TrainingPair;

/// Generator contract shared by every stage.
class StageModel {
 public:
  virtual ~StageModel() = default;

  virtual std::string name() const = 0;
  /// Throws UsageError for an empty pair list.
  virtual void train(const std::vector<TrainingPair>& pairs) = 0;
  /// Throws UsageError before the first train().
  virtual std::string generate(const std::string& source) const = 0;

  virtual bool can_embed() const { return false; }
  virtual std::vector<double> embed(const std::string& text) const;

  /// Self-describing checkpoint text, first line "<format> v<version>".
  virtual std::string checkpoint() const = 0;
  virtual void restore(std::string_view checkpoint) = 0;

  virtual bool thread_safe() const { return true; }
};

inline constexpr std::string_view kCheckpointHeader = "commitissue-checkpoint v1";

/// TF-IDF nearest-neighbour generator. train() replaces the stored pairs but
/// keeps growing the vocabulary and document frequencies, which is how an
/// earlier grounding stage shows up in embed().
class RetrievalGenerator final : public StageModel {
 public:
  struct SparseVector {
    std::vector<std::uint32_t> index;  // ascending
    std::vector<double> value;
  };

  std::string name() const override { return "retrieval"; }
  void train(const std::vector<TrainingPair>& pairs) override;
  std::string generate(const std::string& source) const override;

  bool can_embed() const override { return true; }
  /// Dense L2-normalized TF-IDF vector over the vocabulary. Unknown tokens are
  /// dropped.
  std::vector<double> embed(const std::string& text) const override;

  std::string checkpoint() const override;
  void restore(std::string_view checkpoint) override;

  /// Index of the stored source the query is most similar to; ties go to the
  /// lowest index.
  std::size_t nearest(const std::string& source) const;
  double cosine(const std::string& a, const std::string& b) const;
  SparseVector vectorize(const std::string& text) const;

  /// log((1 + documents) / (1 + df)) + 1.
  double idf(std::uint32_t term) const;

  const std::vector<std::string>& vocabulary() const { return vocab_; }
  bool in_vocabulary(const std::string& token) const { return index_.count(token) != 0; }
  std::size_t stored_pairs() const { return targets_.size(); }
  bool trained() const { return !targets_.empty(); }
  std::size_t train_calls() const { return train_calls_; }

 private:
  void rebuild();

  std::vector<std::string> vocab_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::vector<std::size_t> df_;
  std::size_t documents_ = 0;
  std::size_t train_calls_ = 0;

  std::vector<std::string> sources_;
  std::vector<std::string> targets_;
  std::vector<SparseVector> stored_;
};

/// "<path>\n<diff>" per file, joined with "\n", in record order.
std::string sequentialize_diff(const std::vector<FileChange>& files);

/// Span texts of all related issues: actual states first, then expected
/// states, each in issue order and then document order, joined by " [SEP] ".
/// `spans[i]` belongs to `record.issues[i]`. Throws DataError for bad offsets.
std::string grounding_target(const CommitRecord& record, const std::vector<std::vector<StateSpan>>& spans);

struct GroundingSet {
  std::vector<GroundingPair> pairs;
  std::vector<std::string> violations;  // records skipped for bad data
  std::size_t without_state = 0;        // records skipped for having no spans
};

/// Records whose annotations list is empty count as unannotated and are
/// skipped like records without spans.
GroundingSet build_grounding_set(const std::vector<AnnotatedCommitRecord>& records);

/// Skips records with an empty message or no files.
std::vector<FineTunePair> build_finetune_set(const std::vector<CommitRecord>& records);

enum class ExtractionMode {
  automatic,  // gold when the training split has annotations, else the tagger if one is given
  gold,
  tagger,
  none,
};

std::string_view to_string(ExtractionMode mode);
std::optional<ExtractionMode> parse_extraction_mode(std::string_view s);

struct PipelineOptions {
  std::uint64_t seed = 0;
  ExtractionMode extraction = ExtractionMode::automatic;
  const IssueTypeClassifier* classifier = nullptr;  // tagger mode; keyword classifier when null
  const StateTagger* tagger = nullptr;
  bool ground = true;  // false gives the fine-tune-only baseline
  std::optional<std::filesystem::path> checkpoint_dir;
};

struct PipelineResult {
  std::string extraction_used;  // "gold", "tagger" or "none"
  bool grounded = false;
  std::size_t grounding_pairs = 0;
  std::size_t finetune_pairs = 0;
  std::vector<std::string> warnings;
  std::vector<std::filesystem::path> checkpoints;

  std::vector<CommitRecord> test_records;
  std::vector<std::string> generated;  // one per test record
  std::string output_hash;             // FNV-1a over the generated messages

  nlohmann::json provenance;
};

/// Splits the corpus 8:1:1 with `seed`, extracts state information for the
/// training split, trains `model` on grounding pairs and then on fine-tune
/// pairs, and generates messages for the test split. Records with an empty
/// annotations list are treated as unannotated. An empty grounding set skips
/// that stage with a warning.
PipelineResult run_three_stage(StageModel& model, const std::vector<AnnotatedCommitRecord>& corpus,
                               const PipelineOptions& options = {});

/// Embeds each record's sequentialized diff and its message.
struct EmbeddedPairs {
  std::vector<std::vector<double>> code;
  std::vector<std::vector<double>> message;
};
EmbeddedPairs embed_pairs(const StageModel& model, const std::vector<CommitRecord>& records);

}  // namespace commitissue::pipeline

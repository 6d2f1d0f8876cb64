#include "commitissue/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "commitissue/curator.hpp"
#include "commitissue/error.hpp"
#include "commitissue/kernels.hpp"
#include "commitissue/record_io.hpp"
#include "commitissue/tokenizer.hpp"

namespace commitissue::pipeline {

std::vector<double> StageModel::embed(const std::string&) const {
  throw UsageError(name() + ": this model cannot embed text");
}

// ---- retrieval generator ------------------------------------------------

void RetrievalGenerator::train(const std::vector<TrainingPair>& pairs) {
  if (pairs.empty()) throw UsageError("retrieval: train needs at least one pair");
  for (std::size_t i = 0; i < pairs.size(); ++i)
    if (pairs[i].source.empty() || pairs[i].target.empty())
      throw DataError("retrieval: pair " + std::to_string(i) + " has an empty source or target");

  auto observe = [&](const std::string& text) {
    std::set<std::uint32_t> seen;
    for (const auto& tok : metric_tokens(text)) {
      auto [it, inserted] = index_.try_emplace(tok, static_cast<std::uint32_t>(vocab_.size()));
      if (inserted) {
        vocab_.push_back(tok);
        df_.push_back(0);
      }
      seen.insert(it->second);
    }
    for (auto t : seen) ++df_[t];
    ++documents_;
  };

  sources_.clear();
  targets_.clear();
  for (const auto& p : pairs) {
    observe(p.source);
    observe(p.target);
    sources_.push_back(p.source);
    targets_.push_back(p.target);
  }
  ++train_calls_;
  rebuild();
}

void RetrievalGenerator::rebuild() {
  stored_.clear();
  stored_.reserve(sources_.size());
  for (const auto& s : sources_) stored_.push_back(vectorize(s));
}

double RetrievalGenerator::idf(std::uint32_t term) const {
  return std::log((1.0 + static_cast<double>(documents_)) / (1.0 + static_cast<double>(df_.at(term)))) + 1.0;
}

RetrievalGenerator::SparseVector RetrievalGenerator::vectorize(const std::string& text) const {
  std::map<std::uint32_t, double> tf;
  for (const auto& tok : metric_tokens(text)) {
    auto it = index_.find(tok);
    if (it != index_.end()) tf[it->second] += 1.0;
  }
  SparseVector v;
  double norm = 0.0;
  for (auto& [t, c] : tf) {
    c *= idf(t);
    norm += c * c;
  }
  norm = std::sqrt(norm);
  for (const auto& [t, c] : tf) {
    v.index.push_back(t);
    v.value.push_back(c / norm);
  }
  return v;
}

std::vector<double> RetrievalGenerator::embed(const std::string& text) const {
  if (vocab_.empty()) throw UsageError("retrieval: embed called before train");
  std::vector<double> dense(vocab_.size(), 0.0);
  const SparseVector v = vectorize(text);
  for (std::size_t k = 0; k < v.index.size(); ++k) dense[v.index[k]] = v.value[k];
  return dense;
}

std::size_t RetrievalGenerator::nearest(const std::string& source) const {
  if (!trained()) throw UsageError("retrieval: generate called before train");
  const std::vector<double> query = embed(source);
  const auto& k = kernels::active();
  std::size_t best = 0;
  double best_score = -1.0;
  for (std::size_t i = 0; i < stored_.size(); ++i) {
    const auto& s = stored_[i];
    const double score = k.sparse_dot(s.index.data(), s.value.data(), s.index.size(), query.data());
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

std::string RetrievalGenerator::generate(const std::string& source) const { return targets_[nearest(source)]; }

double RetrievalGenerator::cosine(const std::string& a, const std::string& b) const {
  const SparseVector va = vectorize(a);
  const std::vector<double> vb = embed(b);
  return kernels::sparse_dot(va.index, va.value, vb);
}

std::string RetrievalGenerator::checkpoint() const {
  nlohmann::json pairs = nlohmann::json::array();
  for (std::size_t i = 0; i < sources_.size(); ++i) pairs.push_back({{"source", sources_[i]}, {"target", targets_[i]}});
  nlohmann::json j = {{"model", name()},     {"documents", documents_}, {"train_calls", train_calls_},
                      {"vocabulary", vocab_}, {"df", df_},               {"pairs", pairs}};
  return std::string(kCheckpointHeader) + "\n" + j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) +
         "\n";
}

void RetrievalGenerator::restore(std::string_view text) {
  const auto nl = text.find('\n');
  if (text.substr(0, nl) != kCheckpointHeader)
    throw DataError("checkpoint: expected header \"" + std::string(kCheckpointHeader) + "\"");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text.substr(nl + 1));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
  if (j.value("model", "") != name()) throw DataError("checkpoint: model is not \"retrieval\"");
  try {
    RetrievalGenerator g;
    g.documents_ = j.at("documents").get<std::size_t>();
    g.train_calls_ = j.at("train_calls").get<std::size_t>();
    g.vocab_ = j.at("vocabulary").get<std::vector<std::string>>();
    g.df_ = j.at("df").get<std::vector<std::size_t>>();
    if (g.df_.size() != g.vocab_.size()) throw DataError("checkpoint: df and vocabulary sizes differ");
    for (std::size_t i = 0; i < g.vocab_.size(); ++i) g.index_.emplace(g.vocab_[i], static_cast<std::uint32_t>(i));
    for (const auto& p : j.at("pairs")) {
      g.sources_.push_back(p.at("source").get<std::string>());
      g.targets_.push_back(p.at("target").get<std::string>());
    }
    g.rebuild();
    *this = std::move(g);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
}

// ---- training sets --------------------------------------------------------

std::string sequentialize_diff(const std::vector<FileChange>& files) {
  std::string out;
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (i) out += '\n';
    out += files[i].path;
    out += '\n';
    out += files[i].diff;
  }
  return out;
}

namespace {

std::string trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return std::string(s.substr(b, s.find_last_not_of(ws) - b + 1));
}

}  // namespace

std::string grounding_target(const CommitRecord& record, const std::vector<std::vector<StateSpan>>& spans) {
  if (spans.size() != record.issues.size()) throw DataError("grounding: one span list per issue is required");
  std::vector<std::string> parts;
  for (StateType type : {StateType::actual, StateType::expected}) {
    for (std::size_t i = 0; i < spans.size(); ++i) {
      std::vector<StateSpan> sorted = spans[i];
      sort_spans(sorted);
      for (const auto& s : sorted) {
        if (s.state_type != type) continue;
        std::string text = trim(span_text(record.issues[i], s));
        if (!text.empty()) parts.push_back(std::move(text));
      }
    }
  }
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += " " + std::string(kSepToken) + " ";
    out += parts[i];
  }
  return out;
}

GroundingSet build_grounding_set(const std::vector<AnnotatedCommitRecord>& records) {
  GroundingSet set;
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.annotations.empty()) {
      ++set.without_state;
      continue;
    }
    if (rec.annotations.size() != rec.record.issues.size()) {
      set.violations.push_back("record " + std::to_string(r) + ": annotations do not align with issues");
      continue;
    }
    std::vector<std::vector<StateSpan>> spans;
    for (const auto& a : rec.annotations) spans.push_back(a.spans);
    std::string target;
    try {
      target = grounding_target(rec.record, spans);
    } catch (const DataError& e) {
      set.violations.push_back("record " + std::to_string(r) + ": " + e.what());
      continue;
    }
    if (target.empty()) {
      ++set.without_state;
      continue;
    }
    std::string source = sequentialize_diff(rec.record.files);
    if (source.empty()) {
      set.violations.push_back("record " + std::to_string(r) + ": no code change");
      continue;
    }
    set.pairs.push_back({std::move(source), std::move(target)});
  }
  return set;
}

std::vector<FineTunePair> build_finetune_set(const std::vector<CommitRecord>& records) {
  std::vector<FineTunePair> out;
  for (const auto& r : records) {
    std::string source = sequentialize_diff(r.files);
    if (source.empty() || trim(r.message).empty()) continue;
    out.push_back({std::move(source), r.message});
  }
  return out;
}

// ---- orchestration --------------------------------------------------------

std::string_view to_string(ExtractionMode mode) {
  switch (mode) {
    case ExtractionMode::automatic: return "auto";
    case ExtractionMode::gold: return "gold";
    case ExtractionMode::tagger: return "tagger";
    case ExtractionMode::none: return "none";
  }
  return "?";
}

std::optional<ExtractionMode> parse_extraction_mode(std::string_view s) {
  for (auto m : {ExtractionMode::automatic, ExtractionMode::gold, ExtractionMode::tagger, ExtractionMode::none})
    if (to_string(m) == s) return m;
  return std::nullopt;
}

namespace {

std::string hash_records(const std::vector<AnnotatedCommitRecord>& records) {
  std::string text;
  for (const auto& r : records) {
    text += to_json(r).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
    text += '\n';
  }
  return fnv1a_hex(text);
}

std::string hash_pairs(const std::vector<TrainingPair>& pairs) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& p : pairs) j.push_back({p.source, p.target});
  return fnv1a_hex(j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace));
}

}  // namespace

PipelineResult run_three_stage(StageModel& model, const std::vector<AnnotatedCommitRecord>& corpus,
                               const PipelineOptions& options) {
  PipelineResult res;
  const auto splits = stratify(corpus, options.seed);

  nlohmann::json stages = nlohmann::json::array();
  auto save = [&](const std::string& file, const std::string& content) {
    if (!options.checkpoint_dir) return;
    std::filesystem::create_directories(*options.checkpoint_dir);
    const auto path = *options.checkpoint_dir / file;
    write_file_atomic(path, content);
    res.checkpoints.push_back(path);
  };

  // Stage 1: state information for the training split.
  ExtractionMode mode = options.extraction;
  if (mode == ExtractionMode::automatic) {
    const bool any_gold = std::any_of(splits.train.begin(), splits.train.end(),
                                      [](const AnnotatedCommitRecord& r) { return !r.annotations.empty(); });
    mode = any_gold ? ExtractionMode::gold : options.tagger ? ExtractionMode::tagger : ExtractionMode::none;
  }
  if (!options.ground) mode = ExtractionMode::none;

  std::vector<AnnotatedCommitRecord> extracted;
  if (mode == ExtractionMode::gold) {
    extracted = splits.train;
  } else if (mode == ExtractionMode::tagger) {
    if (!options.tagger) throw UsageError("pipeline: tagger extraction requested without a tagger");
    KeywordIssueClassifier fallback;
    const IssueTypeClassifier& classifier = options.classifier ? *options.classifier : fallback;
    for (std::size_t i = 0; i < splits.train.size(); ++i) {
      try {
        extracted.push_back(annotate_record(splits.train[i].record, classifier, *options.tagger));
      } catch (const DataError& e) {
        res.warnings.push_back("extraction: train record " + std::to_string(i) + " skipped: " + e.what());
      }
    }
  }
  res.extraction_used = std::string(to_string(mode));
  stages.push_back({{"stage", "extraction"}, {"source", res.extraction_used}, {"records", extracted.size()}});
  if (!extracted.empty()) {
    std::vector<nlohmann::json> lines;
    for (const auto& r : extracted) lines.push_back(to_json(r));
    save("extraction.jsonl", to_jsonl(lines));
  }

  // Stage 2: grounding.
  GroundingSet grounding = build_grounding_set(extracted);
  for (const auto& v : grounding.violations) res.warnings.push_back("grounding: " + v);
  res.grounding_pairs = grounding.pairs.size();
  if (grounding.pairs.empty()) {
    res.warnings.push_back(options.ground ? "grounding set is empty; grounding stage skipped"
                                          : "grounding disabled; fine-tuning from a fresh model");
    stages.push_back({{"stage", "grounding"}, {"status", "skipped"}});
  } else {
    model.train(grounding.pairs);
    res.grounded = true;
    save("grounded.ckpt", model.checkpoint());
    stages.push_back({{"stage", "grounding"},
                      {"status", "done"},
                      {"pairs", grounding.pairs.size()},
                      {"skipped_without_state", grounding.without_state},
                      {"violations", grounding.violations.size()},
                      {"dataset_hash", hash_pairs(grounding.pairs)}});
  }

  // Stage 3: fine-tuning.
  std::vector<CommitRecord> train_records;
  for (const auto& r : splits.train) train_records.push_back(r.record);
  const auto finetune = build_finetune_set(train_records);
  if (finetune.empty()) throw UsageError("pipeline: the training split has no usable commit messages");
  model.train(finetune);
  res.finetune_pairs = finetune.size();
  save("finetuned.ckpt", model.checkpoint());
  stages.push_back({{"stage", "fine-tuning"},
                    {"status", "done"},
                    {"pairs", finetune.size()},
                    {"dataset_hash", hash_pairs(finetune)}});

  std::string joined;
  for (const auto& r : splits.test) {
    res.test_records.push_back(r.record);
    res.generated.push_back(model.generate(sequentialize_diff(r.record.files)));
    joined += res.generated.back();
    joined += '\n';
  }
  res.output_hash = fnv1a_hex(joined);

  res.provenance = {{"format", "commitissue-provenance v1"},
                    {"model", model.name()},
                    {"seed", options.seed},
                    {"ground", options.ground},
                    {"extraction", res.extraction_used},
                    {"splits", {{"train", splits.train.size()}, {"valid", splits.valid.size()}, {"test", splits.test.size()}}},
                    {"dataset_hashes",
                     {{"corpus", hash_records(corpus)},
                      {"train", hash_records(splits.train)},
                      {"valid", hash_records(splits.valid)},
                      {"test", hash_records(splits.test)}}},
                    {"stages", stages},
                    {"warnings", res.warnings},
                    {"output_hash", res.output_hash}};
  save("provenance.json", res.provenance.dump(2) + "\n");
  return res;
}

EmbeddedPairs embed_pairs(const StageModel& model, const std::vector<CommitRecord>& records) {
  EmbeddedPairs out;
  for (const auto& r : records) {
    out.code.push_back(model.embed(sequentialize_diff(r.files)));
    out.message.push_back(model.embed(r.message));
  }
  return out;
}

}  // namespace commitissue::pipeline

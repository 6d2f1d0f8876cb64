#include "commitissue/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commitissue/analysis.hpp"
#include "commitissue/curator.hpp"
#include "commitissue/error.hpp"
#include "commitissue/extraction.hpp"
#include "commitissue/metrics.hpp"
#include "commitissue/miner.hpp"
#include "commitissue/pipeline.hpp"
#include "commitissue/record_io.hpp"
#include "commitissue/transport.hpp"

namespace commitissue::cli {
namespace {

namespace fs = std::filesystem;

struct Output {
  std::ostream& out;

  void write(const std::string& path, const std::string& content) const {
    if (path.empty() || path == "-") {
      out << content;
    } else {
      if (auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
      write_file_atomic(path, content);
    }
  }
};

std::vector<AnnotatedCommitRecord> read_corpus(const fs::path& path) {
  std::vector<AnnotatedCommitRecord> out;
  const auto lines = read_jsonl(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      if (is_annotated(lines[i])) {
        out.push_back(annotated_record_from_json(lines[i]));
      } else {
        out.push_back({commit_record_from_json(lines[i]), {}});
      }
    } catch (const DataError& e) {
      throw DataError(path.string() + ": record " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

// A generation file line is a JSON string, an object with one of `keys`, or
// plain text.
std::vector<std::string> read_texts(const fs::path& path, std::initializer_list<const char*> keys) {
  std::vector<std::string> out;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_string()) {
      out.push_back(j.get<std::string>());
    } else if (j.is_object()) {
      bool found = false;
      for (const char* k : keys)
        if (j.contains(k) && j[k].is_string()) {
          out.push_back(j[k].get<std::string>());
          found = true;
          break;
        }
      if (!found) throw DataError(path.string() + ":" + std::to_string(line_no) + ": no text field");
    } else {
      out.push_back(line);
    }
  }
  return out;
}

std::string extraction_csv(const ExtractionReport& r) {
  std::ostringstream os;
  os.precision(10);
  os << "class,precision,recall,f1,true_positives,predicted,gold\n";
  auto row = [&](const char* name, const ClassScores& s) {
    os << name << ',' << s.precision * 100 << ',' << s.recall * 100 << ',' << s.f1 * 100 << ',' << s.true_positives
       << ',' << s.predicted << ',' << s.gold << '\n';
  };
  row("actual_state", r.actual);
  row("expected_state", r.expected);
  row("micro", r.micro);
  return os.str();
}

std::vector<std::vector<ExtractedSpan>> extracted_spans(const std::vector<AnnotatedCommitRecord>& records) {
  std::vector<std::vector<ExtractedSpan>> out;
  for (const auto& r : records)
    for (std::size_t i = 0; i < r.record.issues.size(); ++i)
      out.push_back(i < r.annotations.size() ? resolve_spans(r.record.issues[i], r.annotations[i].spans)
                                             : std::vector<ExtractedSpan>{});
  return out;
}

std::vector<long> read_issue_numbers(const fs::path& path) {
  std::vector<long> out;
  std::istringstream in(read_file(path));
  std::string tok;
  while (in >> tok) {
    char* end = nullptr;
    const long n = std::strtol(tok.c_str(), &end, 10);
    if (*end != '\0' || n <= 0) throw DataError(path.string() + ": not an issue number: " + tok);
    out.push_back(n);
  }
  return out;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Commit-issue dataset construction, extraction and generation evaluation toolkit", "commitissue"};
  app.set_config("--config", "", "TOML/INI file with option defaults; command-line flags override it");
  app.require_subcommand(1);
  app.fallthrough();

  std::string format = "json";
  app.add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "csv"}))->envname("COMMITISSUE_FORMAT");

  std::string in_path, out_path;
  const Output sink{out};

  // mine
  auto* mine = app.add_subcommand("mine", "Build the commit -> issue map from issue events")->configurable();
  std::string repo, issues_file, fixture, checkpoint, records_out, token_env = "GITHUB_TOKEN";
  std::vector<long> issue_list;
  std::size_t parallelism = 4;
  double rps = 1.0;
  mine->add_option("--repo", repo, "owner/name")->required();
  mine->add_option("--issue", issue_list, "Issue number (repeatable)");
  mine->add_option("--issues", issues_file, "File of whitespace-separated issue numbers")->check(CLI::ExistingFile);
  mine->add_option("--fixture", fixture, "Replay API responses from a fixture instead of the network")
      ->check(CLI::ExistingFile);
  mine->add_option("--parallelism", parallelism, "Concurrent issue requests")
      ->check(CLI::Range(1, 64))
      ->envname("COMMITISSUE_PARALLELISM");
  mine->add_option("--checkpoint", checkpoint, "Resume file of finished issues");
  mine->add_option("--records", records_out, "Also fetch commits and issues and write CommitRecord JSONL here");
  mine->add_option("--rate", rps, "Live requests per second")->check(CLI::PositiveNumber);
  mine->add_option("--token-env", token_env, "Environment variable holding the API token");
  mine->add_option("--out", out_path, "Commit-issue map JSONL");

  // normalize
  auto* normalize = app.add_subcommand("normalize", "Replace code, URLs and issue references by placeholders")
                        ->configurable();
  normalize->add_option("--in", in_path, "Raw records JSONL")->required()->check(CLI::ExistingFile);
  normalize->add_option("--out", out_path, "Normalized records JSONL");

  // filter
  auto* filter = app.add_subcommand("filter", "Drop bot, trivial, non-English and over-long records")->configurable();
  std::string reasons_path;
  FilterOptions filter_opts;
  filter->add_option("--in", in_path, "Records JSONL")->required()->check(CLI::ExistingFile);
  filter->add_option("--out", out_path, "Kept records JSONL")->required();
  filter->add_option("--reasons", reasons_path, "Drop reasons JSONL (default: <out>.reasons.jsonl)");
  filter->add_option("--token-limit", filter_opts.token_limit, "Maximum tokens per text field")
      ->check(CLI::PositiveNumber)
      ->envname("COMMITISSUE_TOKEN_LIMIT");
  filter->add_option("--english-threshold", filter_opts.english_threshold, "Minimum ASCII share of letters")
      ->check(CLI::Range(0.0, 1.0));

  // split
  auto* split = app.add_subcommand("split", "Seeded 8:1:1 train/valid/test split")->configurable();
  std::uint64_t seed = 0;
  std::string out_dir;
  split->add_option("--in", in_path, "Records JSONL")->required()->check(CLI::ExistingFile);
  split->add_option("--out-dir", out_dir, "Directory for train/valid/test.jsonl")->required();
  split->add_option("--seed", seed, "Shuffle seed")->required()->envname("COMMITISSUE_SEED");

  // annotate-validate
  auto* validate = app.add_subcommand("annotate-validate", "Check annotated records against the schema")->configurable();
  validate->add_option("--in", in_path, "Annotated records JSONL")->required()->check(CLI::ExistingFile);
  validate->add_option("--out", out_path, "Report path");

  // extract
  auto* extract = app.add_subcommand("extract", "Classify issues and tag state information")->configurable();
  std::string gold_path;
  extract->add_option("--in", in_path, "Records JSONL")->required()->check(CLI::ExistingFile);
  extract->add_option("--out", out_path, "Annotated records JSONL");
  extract->add_option("--gold", gold_path, "Replay spans from this annotated corpus instead of the lexical tagger")
      ->check(CLI::ExistingFile);

  // eval-extraction
  auto* eval_ex = app.add_subcommand("eval-extraction", "Fuzzy-match P/R/F1 of extracted state information")
                      ->configurable();
  std::string pred_path;
  double tau = kDefaultTau;
  eval_ex->add_option("--pred", pred_path, "Predicted annotated records JSONL")->required()->check(CLI::ExistingFile);
  eval_ex->add_option("--gold", gold_path, "Gold annotated records JSONL")->required()->check(CLI::ExistingFile);
  eval_ex->add_option("--tau", tau, "Similarity threshold in (0, 1]")
      ->check(CLI::Validator(
          [](std::string& s) {
            double v = 0;
            if (!CLI::detail::lexical_cast(s, v)) return std::string("tau must be a number");
            return v > 0.0 && v <= 1.0 ? std::string() : std::string("tau must be in (0, 1]");
          },
          "(0,1]"))
      ->envname("COMMITISSUE_TAU");
  eval_ex->add_option("--out", out_path, "Report path");

  // eval-generation
  auto* eval_gen = app.add_subcommand("eval-generation", "BLEU, ROUGE-L, METEOR and CIDEr")->configurable();
  std::string hyp_path, ref_path, pairs_path;
  metrics::ReportOptions metric_opts;
  bool no_smoothing = false;
  eval_gen->add_option("--hyp", hyp_path, "Hypotheses, one per line")->check(CLI::ExistingFile);
  eval_gen->add_option("--ref", ref_path, "References, one per line")->check(CLI::ExistingFile);
  eval_gen->add_option("--pairs", pairs_path, "JSONL with \"hypothesis\" and \"reference\"")->check(CLI::ExistingFile);
  eval_gen->add_option("--max-n", metric_opts.bleu.max_n, "BLEU n-gram order")->check(CLI::Range(1, 8));
  eval_gen->add_option("--beta", metric_opts.rouge_beta, "ROUGE-L beta")->check(CLI::PositiveNumber);
  eval_gen->add_flag("--no-smoothing", no_smoothing, "Disable sentence BLEU smoothing");
  eval_gen->add_option("--out", out_path, "Report path");

  // run-pipeline
  auto* run = app.add_subcommand("run-pipeline", "Extraction, grounding and fine-tuning with the retrieval model")
                  ->configurable();
  std::string corpus_path, model_name = "retrieval", extraction_name = "auto", checkpoint_dir, embeddings_dir;
  bool no_grounding = false;
  run->add_option("--corpus", corpus_path, "Curated corpus JSONL (annotated lines are used for grounding)")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Split seed")->required()->envname("COMMITISSUE_SEED");
  run->add_option("--model", model_name, "Stage model")->check(CLI::IsMember({"retrieval"}));
  run->add_option("--extraction", extraction_name, "State information source")
      ->check(CLI::IsMember({"auto", "gold", "tagger", "none"}));
  run->add_flag("--no-grounding", no_grounding, "Fine-tune only");
  run->add_option("--checkpoint-dir", checkpoint_dir, "Stage checkpoints and provenance.json");
  run->add_option("--embeddings-dir", embeddings_dir,
                  "Write before.emb (fine-tune only) and after.emb (grounded) for the test split");
  run->add_option("--out", out_path, "Generated messages JSONL");

  // ground-analyze
  auto* ground = app.add_subcommand("ground-analyze", "Compare code/message distances before and after grounding")
                     ->configurable();
  std::string before_path, after_path, hist_path, method_name = "auto";
  std::size_t bins = 20;
  ground->add_option("--before", before_path, "Embeddings before grounding")->required()->check(CLI::ExistingFile);
  ground->add_option("--after", after_path, "Embeddings after grounding")->required()->check(CLI::ExistingFile);
  ground->add_option("--bins", bins, "Histogram bins")->check(CLI::Range(1, 10000));
  ground->add_option("--method", method_name, "p-value method")->check(CLI::IsMember({"auto", "exact", "normal"}));
  ground->add_option("--histogram", hist_path, "Histogram CSV path");
  ground->add_option("--out", out_path, "Report path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    app.exit(e, err, err);
    return kExitUsage;
  }

  try {
    if (mine->parsed()) {
      auto ref = miner::RepoRef::parse(repo);
      std::vector<long> numbers = issue_list;
      if (!issues_file.empty())
        for (long n : read_issue_numbers(issues_file)) numbers.push_back(n);
      if (numbers.empty()) throw UsageError("mine: give --issue or --issues");

      std::unique_ptr<miner::Transport> base;
      std::unique_ptr<miner::Transport> polite;
      miner::Transport* transport = nullptr;
      if (!fixture.empty()) {
        base = miner::FixtureTransport::from_file(fixture);
        transport = base.get();
      } else {
        const char* token = std::getenv(token_env.c_str());
        base = miner::make_https_transport(token ? token : "");
        miner::PolitenessPolicy policy;
        policy.requests_per_second = rps;
        polite = std::make_unique<miner::PoliteTransport>(*base, policy);
        transport = polite.get();
      }
      miner::MinerOptions opts;
      opts.parallelism = parallelism;
      if (!checkpoint.empty()) opts.checkpoint = fs::path(checkpoint);
      auto result = miner::build_commit_issue_map(ref, numbers, *transport, opts);
      for (const auto& n : result.notes) err << "note: " << n << '\n';
      sink.write(out_path, result.map.to_jsonl());

      if (!records_out.empty()) {
        std::vector<json> lines;
        for (const auto& fc : miner::assemble_records(ref, result.map, *transport)) {
          json j = to_json(fc.record);
          j["sha"] = fc.sha;
          j["truncated"] = fc.truncated;
          j["merge"] = fc.merge;
          lines.push_back(std::move(j));
        }
        sink.write(records_out, to_jsonl(lines));
      }
      return kExitOk;
    }

    if (normalize->parsed()) {
      std::vector<json> lines;
      const auto input = read_jsonl(in_path);
      for (std::size_t i = 0; i < input.size(); ++i) {
        if (is_annotated(input[i]))
          throw DataError(in_path + ": record " + std::to_string(i + 1) +
                          " is annotated; normalize before annotating or its offsets would move");
        json j = input[i];
        const CommitRecord normalized = normalize_record(commit_record_from_json(j));
        const json fresh = to_json(normalized);
        // Keep unknown keys (sha, flags) from the input line.
        for (auto it = fresh.begin(); it != fresh.end(); ++it) j[it.key()] = it.value();
        lines.push_back(std::move(j));
      }
      sink.write(out_path, to_jsonl(lines));
      return kExitOk;
    }

    if (filter->parsed()) {
      const auto input = read_jsonl(in_path);
      std::vector<json> kept, reasons;
      for (std::size_t i = 0; i < input.size(); ++i) {
        const auto decision = filter_record(commit_record_from_json(input[i]), filter_opts);
        if (decision.keep) {
          kept.push_back(input[i]);
        } else {
          reasons.push_back({{"line", i + 1},
                             {"reason", to_string(*decision.reason)},
                             {"rule", decision.rule},
                             {"detail", decision.detail}});
        }
      }
      if (reasons_path.empty()) reasons_path = out_path + ".reasons.jsonl";
      sink.write(out_path, to_jsonl(kept));
      sink.write(reasons_path, to_jsonl(reasons));
      err << "filter: kept " << kept.size() << ", dropped " << reasons.size() << '\n';
      return kExitOk;
    }

    if (split->parsed()) {
      const auto input = read_jsonl(in_path);
      const auto idx = stratify_indices(input.size(), seed);
      auto write_split = [&](const char* name, const std::vector<std::size_t>& ids) {
        std::vector<json> lines;
        for (auto i : ids) lines.push_back(input[i]);
        fs::create_directories(out_dir);
        write_file_atomic(fs::path(out_dir) / (std::string(name) + ".jsonl"), to_jsonl(lines));
      };
      write_split("train", idx.train);
      write_split("valid", idx.valid);
      write_split("test", idx.test);
      err << "split: " << idx.train.size() << '/' << idx.valid.size() << '/' << idx.test.size() << '\n';
      return kExitOk;
    }

    if (validate->parsed()) {
      const auto input = read_jsonl(in_path);
      json violations = json::array();
      for (std::size_t i = 0; i < input.size(); ++i) {
        std::vector<std::string> problems;
        try {
          problems = validate_record(annotated_record_from_json(input[i]));
        } catch (const DataError& e) {
          problems.push_back(e.what());
        }
        for (auto& p : problems) violations.push_back({{"line", i + 1}, {"message", p}});
      }
      std::string report;
      if (format == "csv") {
        std::ostringstream os;
        os << "line,message\n";
        for (const auto& v : violations) {
          std::string msg = v["message"].get<std::string>();
          std::string quoted = "\"";
          for (char c : msg) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
          os << v["line"].get<std::size_t>() << ',' << quoted << "\"\n";
        }
        report = os.str();
      } else {
        report = json{{"records", input.size()}, {"violations", violations}}.dump(2) + "\n";
      }
      sink.write(out_path, report);
      return violations.empty() ? kExitOk : kExitData;
    }

    if (extract->parsed()) {
      const auto corpus = read_corpus(in_path);
      KeywordIssueClassifier classifier;
      LexicalStateTagger lexical;
      std::unique_ptr<GoldReplayTagger> replay;
      const StateTagger* tagger = &lexical;
      if (!gold_path.empty()) {
        replay = std::make_unique<GoldReplayTagger>(read_annotated_records(gold_path));
        tagger = replay.get();
      }
      std::vector<json> lines;
      for (const auto& r : corpus) lines.push_back(to_json(annotate_record(r.record, classifier, *tagger)));
      sink.write(out_path, to_jsonl(lines));
      return kExitOk;
    }

    if (eval_ex->parsed()) {
      const auto pred = read_annotated_records(pred_path);
      const auto gold = read_annotated_records(gold_path);
      if (pred.size() != gold.size())
        throw UsageError("eval-extraction: " + std::to_string(pred.size()) + " predicted vs " +
                         std::to_string(gold.size()) + " gold records");
      for (std::size_t i = 0; i < pred.size(); ++i)
        if (pred[i].record.issues != gold[i].record.issues)
          throw UsageError("eval-extraction: record " + std::to_string(i + 1) + " has different issues in the two files");
      const auto report = evaluate_extraction(extracted_spans(pred), extracted_spans(gold), tau);
      sink.write(out_path, format == "csv" ? extraction_csv(report) : report.to_json().dump(2) + "\n");
      return kExitOk;
    }

    if (eval_gen->parsed()) {
      std::vector<std::string> hyps, refs;
      if (!pairs_path.empty()) {
        if (!hyp_path.empty() || !ref_path.empty()) throw UsageError("eval-generation: --pairs excludes --hyp/--ref");
        for (const auto& j : read_jsonl(pairs_path)) {
          if (!j.is_object() || !j.contains("hypothesis") || !j.contains("reference"))
            throw DataError(pairs_path + ": every line needs \"hypothesis\" and \"reference\"");
          hyps.push_back(j["hypothesis"].get<std::string>());
          refs.push_back(j["reference"].get<std::string>());
        }
      } else {
        if (hyp_path.empty() || ref_path.empty()) throw UsageError("eval-generation: give --hyp and --ref, or --pairs");
        hyps = read_texts(hyp_path, {"hypothesis", "text", "message"});
        refs = read_texts(ref_path, {"reference", "text", "message"});
      }
      metric_opts.bleu.smoothing = !no_smoothing;
      const auto report = metrics::score_generation(hyps, refs, metric_opts);
      sink.write(out_path, format == "csv" ? report.to_csv() : report.to_json().dump(2) + "\n");
      return kExitOk;
    }

    if (run->parsed()) {
      const auto corpus = read_corpus(corpus_path);
      LexicalStateTagger tagger;
      pipeline::PipelineOptions opts;
      opts.seed = seed;
      opts.extraction = *pipeline::parse_extraction_mode(extraction_name);
      opts.tagger = &tagger;
      opts.ground = !no_grounding;
      if (!checkpoint_dir.empty()) opts.checkpoint_dir = fs::path(checkpoint_dir);

      pipeline::RetrievalGenerator model;
      const auto result = pipeline::run_three_stage(model, corpus, opts);
      for (const auto& w : result.warnings) err << "warning: " << w << '\n';

      std::vector<json> lines;
      for (std::size_t i = 0; i < result.generated.size(); ++i)
        lines.push_back({{"hypothesis", result.generated[i]}, {"reference", result.test_records[i].message}});
      sink.write(out_path, to_jsonl(lines));

      if (!embeddings_dir.empty()) {
        pipeline::RetrievalGenerator baseline;
        auto base_opts = opts;
        base_opts.ground = false;
        base_opts.checkpoint_dir.reset();
        pipeline::run_three_stage(baseline, corpus, base_opts);
        auto dump = [&](const pipeline::StageModel& m, const char* name) {
          const auto e = pipeline::embed_pairs(m, result.test_records);
          analysis::EmbeddingPairs file{e.code.empty() ? 0 : e.code.front().size(), e.code, e.message};
          fs::create_directories(embeddings_dir);
          write_file_atomic(fs::path(embeddings_dir) / name, analysis::format_embedding_file(file));
        };
        dump(baseline, "before.emb");
        dump(model, "after.emb");
      }
      err << "run-pipeline: extraction=" << result.extraction_used << " grounded=" << (result.grounded ? "yes" : "no")
          << " output_hash=" << result.output_hash << '\n';
      return kExitOk;
    }

    if (ground->parsed()) {
      const auto before = analysis::read_embedding_file(before_path);
      const auto after = analysis::read_embedding_file(after_path);
      const auto method = method_name == "exact"    ? analysis::PValueMethod::exact
                          : method_name == "normal" ? analysis::PValueMethod::normal
                                                    : analysis::PValueMethod::automatic;
      const auto result = analysis::analyze_grounding(before, after, bins, method);
      if (!hist_path.empty()) sink.write(hist_path, result.histogram_csv());
      std::string report;
      if (format == "csv") {
        const json j = result.to_json();
        std::ostringstream os;
        os.precision(17);
        os << "u,p_value,method,n_before,n_after,median_before,median_after\n"
           << j["u"].get<double>() << ',' << j["p_value"].get<double>() << ',' << j["method"].get<std::string>() << ','
           << j["n"]["before"].get<std::size_t>() << ',' << j["n"]["after"].get<std::size_t>() << ','
           << j["medians"]["before"].get<double>() << ',' << j["medians"]["after"].get<double>() << '\n';
        report = os.str();
      } else {
        report = result.to_json().dump(2) + "\n";
      }
      sink.write(out_path, report);
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace commitissue::cli

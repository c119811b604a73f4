#pragma once

// The pipeline stages behind the CLI. Each stage reads its inputs from the
// configured paths and the output directory, and writes every output through
// a temp-file rename.

#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "symptomrank/config.hpp"
#include "symptomrank/corpus.hpp"
#include "symptomrank/dataset.hpp"
#include "symptomrank/eval.hpp"
#include "symptomrank/io.hpp"
#include "symptomrank/oracle.hpp"
#include "symptomrank/oracle_http.hpp"
#include "symptomrank/questionnaire.hpp"
#include "symptomrank/runs.hpp"
#include "symptomrank/score_table.hpp"
#include "symptomrank/similarity.hpp"

namespace symptomrank::pipeline {

namespace fs = std::filesystem;

/// Output file layout under paths.output_dir.
struct Layout {
  fs::path dir;

  fs::path corpus() const { return dir / "corpus.trec"; }
  fs::path labels() const { return dir / "labels.tsv"; }
  fs::path split() const { return dir / "split.tsv"; }
  fs::path dedup_map() const { return dir / "dedup.tsv"; }
  fs::path counts_txt() const { return dir / "counts.txt"; }
  fs::path counts_tsv() const { return dir / "counts.tsv"; }
  fs::path train_augmented() const { return dir / "train_augmented.tsv"; }
  fs::path synthetic_provenance() const { return dir / "synthetic_provenance.tsv"; }
  fs::path maxcos_scores() const { return dir / "maxcos.scores.tsv"; }
  fs::path thresholds() const { return dir / "thresholds.tsv"; }
  fs::path maxcos_positives() const { return dir / "maxcos.positives.tsv"; }
  fs::path annotation_log(int k) const { return dir / ("annotations_k" + std::to_string(k) + ".jsonl"); }
  fs::path grades(int k) const { return dir / ("grades_k" + std::to_string(k) + ".tsv"); }
  fs::path runs_dir() const { return dir / "runs"; }
  fs::path run(const std::string& tag) const { return runs_dir() / (tag + ".run"); }
  fs::path candidates() const { return dir / "candidates.tsv"; }
  fs::path aug_best_choice() const { return dir / "aug_best_choice.tsv"; }
  fs::path classification_txt() const { return dir / "classification.txt"; }
  fs::path classification_tsv() const { return dir / "classification.tsv"; }
  fs::path per_symptom_f1() const { return dir / "per_symptom_f1.tsv"; }
  fs::path ir_txt() const { return dir / "ir.txt"; }
  fs::path ir_tsv() const { return dir / "ir.tsv"; }
  fs::path synthetic() const { return dir / "synthetic.tsv"; }
};

inline const char* const kRunTags[] = {"mix23", "aug-best", "maxcos", "max", "unanimity"};
inline constexpr int kUnanimityK = 5;

namespace detail {

template <typename F>
auto read_path(const fs::path& p, F&& parse) {
  auto in = io::open_input(p);
  try {
    return parse(in);
  } catch (const ParseError& e) {
    throw ParseError(p.string() + ": " + e.what());
  }
}

inline void require_outputs(const std::vector<std::pair<std::string, fs::path>>& files) {
  std::string missing;
  for (const auto& [stage, p] : files)
    if (!fs::exists(p)) missing += "\n  " + p.string() + " (run '" + stage + "' first)";
  if (!missing.empty()) throw ConfigurationError("missing stage outputs:" + missing);
}

inline std::map<std::string, const SentenceRecord*> index_records(const std::vector<SentenceRecord>& records) {
  std::map<std::string, const SentenceRecord*> idx;
  for (const auto& r : records) idx.emplace(r.doc_id, &r);
  return idx;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// prepare

struct PrepareSummary {
  std::size_t records_in = 0, records_kept = 0, labels_in = 0, labels_kept = 0;
  std::size_t train = 0, val = 0, synthetic = 0;
};

inline PrepareSummary cmd_prepare(const PipelineConfig& c, std::ostream& log) {
  require_inputs({{"corpus", c.paths.corpus}, {"labels", c.paths.labels}, {"questionnaire", c.paths.questionnaire}});
  if (!c.paths.synthetic.empty()) require_inputs({{"synthetic", c.paths.synthetic}});
  const Layout out{c.paths.output_dir};

  const auto q = detail::read_path(c.paths.questionnaire, [](std::istream& in) { return load_questionnaire(in); });
  const auto records = detail::read_path(c.paths.corpus, [](std::istream& in) { return parse_trec_corpus(in); });
  const auto labels = detail::read_path(c.paths.labels, [](std::istream& in) { return read_labels(in); });

  const auto dedup = dedup_with_reconciliation(records, labels);
  const auto split = stratified_split(dedup.labels, c.train_fraction, c.split_seed);
  const auto counts = count_split(dedup.labels, split);

  io::write_atomically(out.corpus(), [&](std::ostream& o) { write_trec_corpus(o, dedup.records); });
  io::write_atomically(out.labels(), [&](std::ostream& o) { write_labels(o, dedup.labels); });
  io::write_atomically(out.split(), [&](std::ostream& o) { write_split(o, split); });
  io::write_atomically(out.dedup_map(), [&](std::ostream& o) {
    o << "# dropped_doc_id\tkept_doc_id\n";
    for (const auto& [dropped, kept] : dedup.merged_into) o << dropped << '\t' << kept << '\n';
  });
  io::write_atomically(out.counts_txt(), [&](std::ostream& o) { render_count_table(o, counts, &q); });
  io::write_atomically(out.counts_tsv(), [&](std::ostream& o) { write_count_table_tsv(o, counts); });

  PrepareSummary s;
  s.records_in = records.size();
  s.records_kept = dedup.records.size();
  s.labels_in = labels.size();
  s.labels_kept = dedup.labels.size();
  for (const auto& a : split) (a.split == Split::train ? s.train : s.val) += 1;

  if (!c.paths.synthetic.empty()) {
    const auto synth = detail::read_path(c.paths.synthetic, [](std::istream& in) { return read_synthetic(in); });
    std::set<std::pair<std::string, SymptomId>> train_keys;
    for (const auto& a : split)
      if (a.split == Split::train) train_keys.emplace(a.doc_id, a.symptom_id);
    std::vector<LabeledInstance> train;
    for (const auto& l : dedup.labels)
      if (train_keys.contains({l.doc_id, l.symptom_id})) train.push_back(l);
    const auto merged = merge_synthetic(train, to_instances(synth));
    io::write_atomically(out.train_augmented(), [&](std::ostream& o) { write_labels(o, merged.instances); });
    io::write_atomically(out.synthetic_provenance(), [&](std::ostream& o) {
      o << "# symptom_id\tsynthetic_count\n";
      for (const auto& [sid, n] : merged.provenance.per_symptom) o << sid << '\t' << n << '\n';
      o << "total\t" << merged.provenance.total() << '\n';
    });
    s.synthetic = merged.provenance.total();
  }

  log << "prepare: kept " << s.records_kept << " of " << s.records_in << " sentences ("
      << s.records_in - s.records_kept << " duplicates merged), " << s.labels_kept << " labeled pairs\n";
  log << "prepare: split " << s.train << " train / " << s.val << " val (seed " << c.split_seed << ")\n";
  if (s.synthetic) log << "prepare: merged " << s.synthetic << " synthetic positives into train\n";
  render_count_table(log, counts, &q);
  return s;
}

// ---------------------------------------------------------------------------
// score

struct ScoreOutputs {
  ScoreTable table;
  SymptomThresholds thresholds;
  PositiveSet positives;
};

inline ScoreOutputs cmd_score(const PipelineConfig& c, std::ostream& log) {
  require_inputs({{"embeddings", c.paths.embeddings}, {"option_embeddings", c.paths.option_embeddings}});
  const Layout out{c.paths.output_dir};
  detail::require_outputs({{"prepare", out.corpus()}, {"prepare", out.split()}});

  const auto options_store =
      detail::read_path(c.paths.option_embeddings, [](std::istream& in) { return load_embeddings(in); });
  const auto options = OptionVectors::from_store(options_store);
  const auto store = c.paths.option_embeddings == c.paths.embeddings
                         ? options_store
                         : detail::read_path(c.paths.embeddings, [](std::istream& in) { return load_embeddings(in); });
  const auto records = detail::read_path(out.corpus(), [](std::istream& in) { return parse_trec_corpus(in); });
  const auto split = detail::read_path(out.split(), [](std::istream& in) { return read_split(in); });

  std::set<std::string> kept;
  for (const auto& r : records) kept.insert(r.doc_id);
  std::size_t missing = 0;
  for (const auto& id : kept) missing += !store.find(id).has_value();
  if (missing) log << "score: warning: " << missing << " corpus sentences have no embedding and are not scored\n";

  ScoreOutputs res;
  const auto full = score_corpus(store, options, c.effective_threads());
  res.table.tag = full.tag;
  for (const auto& [sid, docs] : full.scores) {
    auto& dst = res.table.scores[sid];
    for (const auto& [doc, score] : docs)
      if (kept.contains(doc)) dst.emplace_hint(dst.end(), doc, score);
  }

  std::map<SymptomId, std::vector<double>> train_scores;
  for (const auto& a : split) {
    if (a.split != Split::train) continue;
    const auto* s = res.table.find(a.symptom_id, a.doc_id);
    if (!s) throw ValidationError("train sentence '" + a.doc_id + "' has no embedding");
    train_scores[a.symptom_id].push_back(*s);
  }
  for (int s = 1; s <= kNumSymptoms; ++s)
    if (!train_scores.contains(s)) throw ValidationError("no train sentences for symptom " + std::to_string(s));
  res.thresholds = calibrate_thresholds(train_scores);
  res.positives = positive_set(res.table, PositiveRule::above(res.thresholds));

  io::write_atomically(out.maxcos_scores(), [&](std::ostream& o) { write_score_table(o, res.table); });
  io::write_atomically(out.thresholds(), [&](std::ostream& o) { write_thresholds(o, res.thresholds); });
  io::write_atomically(out.maxcos_positives(), [&](std::ostream& o) { write_positive_set(o, res.positives); });
  log << "score: " << res.table.size() << " scores, " << res.positives.size() << " maxcos positives, "
      << res.thresholds.per_symptom.size() << " thresholds\n";
  return res;
}

// ---------------------------------------------------------------------------
// Run inputs shared by annotate (unanimity target) and build-runs

struct RunInputs {
  PositiveSet candidates;
  ScoreTable mix23, aug_best, maxcos;  // restricted to candidates
  std::map<SymptomId, std::string> aug_choice;
  PositiveSet mix23_pos, aug_best_pos, maxcos_pos;
};

inline RunInputs load_run_inputs(const PipelineConfig& c) {
  require_inputs({{"scores_mix23", c.paths.scores_mix23},
                  {"scores_aug_1step", c.paths.scores_aug_1step},
                  {"scores_aug_2step", c.paths.scores_aug_2step},
                  {"val_f1", c.paths.val_f1}});
  const Layout out{c.paths.output_dir};
  detail::require_outputs({{"score", out.maxcos_scores()}, {"score", out.thresholds()}});

  auto table = [](const fs::path& p, const char* tag) {
    return detail::read_path(p, [&](std::istream& in) { return ingest_score_table(in, tag); });
  };
  const auto mix23 = table(c.paths.scores_mix23, "mix23");
  const auto one = table(c.paths.scores_aug_1step, "mix23-aug-1step");
  const auto two = table(c.paths.scores_aug_2step, "mix23-aug-2step");
  const auto maxcos = table(out.maxcos_scores(), "maxcos");
  const auto thresholds = detail::read_path(out.thresholds(), [](std::istream& in) { return read_thresholds(in); });
  const auto f1 = detail::read_path(c.paths.val_f1, [](std::istream& in) { return read_f1_table(in); });

  RunInputs r;
  auto best = select_aug_best(one, two, f1);
  r.aug_choice = best.chosen;
  const auto maxcos_pos = positive_set(maxcos, PositiveRule::above(thresholds));
  r.candidates = filter_candidates(doc_universe(maxcos), maxcos_pos);
  r.mix23 = restrict_table(mix23, r.candidates);
  r.aug_best = restrict_table(best.table, r.candidates);
  r.maxcos = restrict_table(maxcos, r.candidates);
  r.mix23_pos = positive_set(r.mix23, PositiveRule::at_least());
  r.aug_best_pos = positive_set(r.aug_best, PositiveRule::at_least());
  r.maxcos_pos = positive_set(r.maxcos, PositiveRule::above(thresholds));
  return r;
}

inline PositiveSet unanimity_members(const RunInputs& r) {
  const PositiveSet* sets[] = {&r.mix23_pos, &r.aug_best_pos, &r.maxcos_pos};
  return intersect_all(sets);
}

// ---------------------------------------------------------------------------
// annotate

inline std::unique_ptr<Backend> make_backend(const PipelineConfig& c, const std::string& model) {
  if (c.oracle.backend == OracleBackendKind::mock) {
    require_inputs({{"mock_script", c.paths.mock_script}});
    auto in = io::open_input(c.paths.mock_script);
    return std::make_unique<MockBackend>(in);
  }
  if (c.oracle.endpoint.empty())
    throw ConfigurationError("http backend needs an endpoint (oracle.endpoint or SYMPTOMRANK_ENDPOINT)");
  if (c.oracle.api_key.empty()) throw ConfigurationError("http backend needs SYMPTOMRANK_API_KEY");
  return std::make_unique<HttpBackend>(
      HttpBackendConfig{c.oracle.endpoint, c.oracle.api_key, model, std::chrono::seconds(c.oracle.timeout_s)});
}

inline RetryPolicy retry_policy(const PipelineConfig& c) {
  RetryPolicy p;
  p.max_retries = c.oracle.max_retries;
  p.initial_delay = std::chrono::milliseconds(c.oracle.initial_delay_ms);
  return p;
}

struct AnnotateSummary {
  std::size_t requested = 0, skipped = 0, graded = 0, positives = 0;
};

struct AnnotateJob {
  std::string doc_id;
  SymptomId symptom_id = 1;
};

/// Grades `jobs` with k-shot prompts, appending to the annotation log as
/// results arrive (in job order, so the log is reproducible). Pairs already in
/// the log are skipped; on failure everything logged so far is kept.
inline AnnotateSummary annotate_jobs(const PipelineConfig& c, int k, const std::vector<AnnotateJob>& jobs,
                                     Backend& backend, std::ostream& log) {
  const Layout out{c.paths.output_dir};
  detail::require_outputs({{"prepare", out.corpus()}, {"prepare", out.labels()}, {"prepare", out.split()}});
  require_inputs({{"embeddings", c.paths.embeddings}, {"questionnaire", c.paths.questionnaire}});

  const auto q = detail::read_path(c.paths.questionnaire, [](std::istream& in) { return load_questionnaire(in); });
  const auto records = detail::read_path(out.corpus(), [](std::istream& in) { return parse_trec_corpus(in); });
  const auto labels = detail::read_path(out.labels(), [](std::istream& in) { return read_labels(in); });
  const auto split = detail::read_path(out.split(), [](std::istream& in) { return read_split(in); });
  const auto store = detail::read_path(c.paths.embeddings, [](std::istream& in) { return load_embeddings(in); });
  const auto by_id = detail::index_records(records);

  std::set<std::pair<std::string, SymptomId>> train_keys;
  for (const auto& a : split)
    if (a.split == Split::train) train_keys.emplace(a.doc_id, a.symptom_id);
  std::vector<LabeledInstance> train;
  for (const auto& l : labels)
    if (train_keys.contains({l.doc_id, l.symptom_id})) train.push_back(l);
  std::map<std::string, std::string> texts;
  for (const auto& r : records) texts.emplace(r.doc_id, r.text);
  const auto pool = build_exemplar_pool(train, texts, store);

  std::set<std::pair<std::string, SymptomId>> done;
  std::vector<AnnotationRecord> existing;
  if (fs::exists(out.annotation_log(k))) {
    existing = detail::read_path(out.annotation_log(k), [](std::istream& in) { return read_annotation_log(in); });
    for (const auto& r : existing)
      if (r.k == k) done.emplace(r.doc_id, r.symptom_id);
  }

  AnnotateSummary summary;
  summary.requested = jobs.size();
  struct Pending {
    AnnotateJob job;
    std::string prompt;
  };
  std::vector<Pending> pending;
  std::set<std::pair<std::string, SymptomId>> queued;
  for (const auto& j : jobs) {
    if (done.contains({j.doc_id, j.symptom_id}) || !queued.emplace(j.doc_id, j.symptom_id).second) {
      ++summary.skipped;
      continue;
    }
    const auto rec = by_id.find(j.doc_id);
    if (rec == by_id.end()) throw ValidationError("annotate: doc '" + j.doc_id + "' is not in the corpus");
    const auto row = store.find(j.doc_id);
    if (!row) throw ValidationError("annotate: doc '" + j.doc_id + "' has no embedding");
    const auto ex = select_exemplars(store.row(*row), pool, j.symptom_id, k, j.doc_id);
    const PromptSpec spec{k, c.oracle.include_context, j.symptom_id};
    pending.push_back({j, build_relevance_prompt(q.at(j.symptom_id), ex, *rec->second, spec)});
  }

  // Torn final line from an interrupted run: rewrite the log from what parsed.
  if (!existing.empty() || fs::exists(out.annotation_log(k)))
    io::write_atomically(out.annotation_log(k), [&](std::ostream& o) {
      for (const auto& r : existing) o << to_json_line(r) << '\n';
    });

  std::ofstream log_file(out.annotation_log(k), std::ios::app | std::ios::binary);
  if (!log_file) throw Error("cannot open annotation log " + out.annotation_log(k).string());

  const auto policy = retry_policy(c);
  RateLimiter limiter(c.oracle.requests_per_second);
  std::vector<std::optional<AnnotationRecord>> results(pending.size());
  std::size_t next_to_write = 0;
  std::mutex write_mu;
  std::atomic<std::size_t> next_job{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;

  auto worker = [&] {
    while (!failed) {
      const auto i = next_job++;
      if (i >= pending.size()) return;
      try {
        const auto resp = request_relevance(backend, pending[i].prompt, policy, &limiter);
        AnnotationRecord rec{pending[i].job.doc_id, pending[i].job.symptom_id, k,     prompt_hash(pending[i].prompt),
                             resp.raw,              *resp.grade,               resp.retries};
        std::lock_guard lock(write_mu);
        results[i] = std::move(rec);
        while (next_to_write < results.size() && results[next_to_write]) {
          log_file << to_json_line(*results[next_to_write]) << '\n';
          ++next_to_write;
        }
        log_file.flush();
      } catch (...) {
        std::lock_guard lock(write_mu);
        if (!first_error) first_error = std::current_exception();
        failed = true;
      }
    }
  };
  const auto n_workers = std::min<std::size_t>(std::size_t(c.oracle.max_in_flight), std::max<std::size_t>(1, pending.size()));
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < n_workers; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  log_file.close();
  if (first_error) {
    log << "annotate: stopped after " << next_to_write << " of " << pending.size()
        << " new grades; rerun to resume\n";
    std::rethrow_exception(first_error);
  }
  summary.graded = pending.size();

  // Grades file: every logged grade for this k.
  const auto all = detail::read_path(out.annotation_log(k), [](std::istream& in) { return read_annotation_log(in); });
  OracleGrades grades;
  for (const auto& r : all)
    if (r.k == k) grades.grades[r.symptom_id][r.doc_id] = r.grade;
  io::write_atomically(out.grades(k), [&](std::ostream& o) { write_grades(o, grades); });
  for (const auto& r : all) summary.positives += r.k == k && r.grade == 1;

  log << "annotate: k=" << k << ", " << summary.requested << " pairs requested, " << summary.skipped
      << " already graded, " << summary.graded << " graded now\n";
  return summary;
}

inline std::vector<AnnotateJob> annotation_targets(const PipelineConfig& c, AnnotateTarget target) {
  std::vector<AnnotateJob> jobs;
  if (target == AnnotateTarget::unanimity) {
    const auto members = unanimity_members(load_run_inputs(c));
    for (const auto& [sid, docs] : members.docs)
      for (const auto& d : docs) jobs.push_back({d, sid});
  } else {
    const Layout out{c.paths.output_dir};
    detail::require_outputs({{"prepare", out.split()}});
    for (const auto& a : detail::read_path(out.split(), [](std::istream& in) { return read_split(in); }))
      if (a.split == Split::val) jobs.push_back({a.doc_id, a.symptom_id});
    std::sort(jobs.begin(), jobs.end(), [](const auto& a, const auto& b) {
      return std::tie(a.symptom_id, a.doc_id) < std::tie(b.symptom_id, b.doc_id);
    });
  }
  return jobs;
}

inline AnnotateSummary cmd_annotate(const PipelineConfig& c, std::optional<int> k_override, std::ostream& log) {
  const int k = k_override.value_or(c.oracle.k);
  if (k < 0) throw ConfigurationError("k must be >= 0");
  const auto jobs = annotation_targets(c, c.oracle.target);
  auto backend = make_backend(c, c.oracle.model);
  return annotate_jobs(c, k, jobs, *backend, log);
}

// ---------------------------------------------------------------------------
// build-runs

inline std::map<std::string, Run> cmd_build_runs(const PipelineConfig& c, std::ostream& log) {
  const Layout out{c.paths.output_dir};
  const auto in = load_run_inputs(c);
  if (!fs::exists(out.grades(kUnanimityK)))
    throw ConfigurationError("run 'unanimity' needs " + out.grades(kUnanimityK).string() + " (run 'annotate --k " +
                             std::to_string(kUnanimityK) + "' first)");
  const auto grades = detail::read_path(out.grades(kUnanimityK), [](std::istream& s) { return read_grades(s); });

  const auto thresholds = detail::read_path(out.thresholds(), [](std::istream& s) { return read_thresholds(s); });
  const ScoreTable* tables[] = {&in.mix23, &in.aug_best, &in.maxcos};
  const PositiveSet* positives[] = {&in.mix23_pos, &in.aug_best_pos, &in.maxcos_pos};

  // ensemble_max ranks every candidate each table has a score for.
  std::map<std::string, Run> runs;
  runs["mix23"] = build_positive_run(in.mix23, PositiveRule::at_least(), c.run_cap);
  runs["aug-best"] = build_positive_run(in.aug_best, PositiveRule::at_least(), c.run_cap);
  runs["maxcos"] = build_positive_run(in.maxcos, PositiveRule::above(thresholds), c.run_cap);
  runs["max"] = ensemble_max(tables, c.run_cap, "max");
  runs["unanimity"] = ensemble_unanimity(positives, grades, tables, c.run_cap, "unanimity");

  for (const auto* tag : kRunTags) {
    auto& run = runs.at(tag);
    for (int s = 1; s <= kNumSymptoms; ++s) run.per_symptom.try_emplace(s);
    validate_run(run, c.run_cap);
    io::write_atomically(out.run(tag), [&](std::ostream& o) { write_run_file(o, run); });
  }
  io::write_atomically(out.candidates(), [&](std::ostream& o) { write_positive_set(o, in.candidates); });
  io::write_atomically(out.aug_best_choice(), [&](std::ostream& o) {
    o << "# symptom_id\tchosen\n";
    for (const auto& [sid, tag] : in.aug_choice) o << sid << '\t' << tag << '\n';
  });

  log << "build-runs: " << in.candidates.size() << " candidates after maxcos filtering\n";
  for (const auto* tag : kRunTags) {
    const auto& run = runs.at(tag);
    std::size_t empty = 0;
    for (const auto& [_, e] : run.per_symptom) empty += e.empty();
    log << "build-runs: " << tag << ": " << run.size() << " entries";
    if (empty) log << " (" << empty << " symptoms with no positives)";
    log << '\n';
  }
  return runs;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateOutputs {
  std::vector<ClassificationRow> classification;
  std::vector<IrReport> ir;
};

inline EvaluateOutputs cmd_evaluate(const PipelineConfig& c, std::optional<Setting> only, std::ostream& log) {
  const Layout out{c.paths.output_dir};
  detail::require_outputs({{"prepare", out.labels()}, {"prepare", out.split()}, {"score", out.maxcos_scores()},
                           {"score", out.thresholds()}});
  for (const auto* tag : kRunTags) detail::require_outputs({{"build-runs", out.run(tag)}});
  require_inputs({{"scores_mix23", c.paths.scores_mix23},
                  {"scores_aug_1step", c.paths.scores_aug_1step},
                  {"scores_aug_2step", c.paths.scores_aug_2step}});

  const auto labels = detail::read_path(out.labels(), [](std::istream& in) { return read_labels(in); });
  const auto split = detail::read_path(out.split(), [](std::istream& in) { return read_split(in); });
  std::vector<Setting> settings;
  for (Setting s : {Setting::majority, Setting::unanimity})
    if (!only || *only == s) settings.push_back(s);

  std::map<Setting, Qrels> val_qrels;
  for (Setting s : settings) val_qrels[s] = qrels_from_labels(labels, s, &split, Split::val);

  auto table = [](const fs::path& p, const char* tag) {
    return detail::read_path(p, [&](std::istream& in) { return ingest_score_table(in, tag); });
  };
  const auto thresholds = detail::read_path(out.thresholds(), [](std::istream& in) { return read_thresholds(in); });
  struct Approach {
    std::string tag;
    PositiveSet predictions;
  };
  std::vector<Approach> approaches;
  approaches.push_back({"mix23", positive_set(table(c.paths.scores_mix23, "mix23"), PositiveRule::at_least())});
  approaches.push_back({"mix23-aug-1step", positive_set(table(c.paths.scores_aug_1step, "mix23-aug-1step"),
                                                       PositiveRule::at_least())});
  approaches.push_back({"mix23-aug-2step", positive_set(table(c.paths.scores_aug_2step, "mix23-aug-2step"),
                                                       PositiveRule::at_least())});
  approaches.push_back(
      {"maxcos", positive_set(table(out.maxcos_scores(), "maxcos"), PositiveRule::above(thresholds))});

  // k-shot rows only when the grades cover every val pair.
  for (int k : {0, 1, 3, 5}) {
    if (!fs::exists(out.grades(k))) continue;
    const auto g = detail::read_path(out.grades(k), [](std::istream& in) { return read_grades(in); });
    std::size_t uncovered = 0;
    for (const auto& a : split)
      if (a.split == Split::val && !g.find(a.symptom_id, a.doc_id)) ++uncovered;
    if (uncovered) {
      log << "evaluate: skipping " << k << "-shot: " << uncovered << " val pairs have no grade\n";
      continue;
    }
    approaches.push_back({std::to_string(k) + "-shot", g.positives()});
  }

  EvaluateOutputs res;
  for (const auto& a : approaches) {
    ClassificationRow row{a.tag, std::nullopt, std::nullopt};
    for (Setting s : settings) {
      auto rep = evaluate_classification(a.predictions, val_qrels.at(s));
      (s == Setting::majority ? row.majority : row.unanimity) = std::move(rep);
    }
    res.classification.push_back(std::move(row));
  }

  std::map<Setting, Qrels> ir_qrels;
  for (Setting s : settings) {
    const auto& p = s == Setting::majority ? c.paths.qrels_majority : c.paths.qrels_unanimity;
    if (!p.empty()) {
      require_inputs({{s == Setting::majority ? "qrels_majority" : "qrels_unanimity", p}});
      ir_qrels[s] = detail::read_path(p, [&](std::istream& in) { return parse_qrels(in, s); });
    } else {
      ir_qrels[s] = qrels_from_labels(labels, s);
    }
  }
  for (Setting s : settings)
    for (const auto* tag : kRunTags) {
      const auto run = detail::read_path(out.run(tag), [](std::istream& in) { return parse_run_file(in); });
      auto rep = evaluate_ir(run, ir_qrels.at(s));
      if (!rep.excluded.empty())
        log << "evaluate: warning: " << tag << "/" << to_string(s) << ": " << rep.excluded.size()
            << " symptoms without relevant documents excluded from the average\n";
      res.ir.push_back(std::move(rep));
    }

  io::write_atomically(out.classification_txt(),
                       [&](std::ostream& o) { render_classification_table(o, res.classification); });
  io::write_atomically(out.classification_tsv(),
                       [&](std::ostream& o) { write_classification_tsv(o, res.classification); });
  io::write_atomically(out.per_symptom_f1(), [&](std::ostream& o) {
    write_per_symptom_f1(o, res.classification, settings.front());
  });
  io::write_atomically(out.ir_txt(), [&](std::ostream& o) { render_ir_table(o, res.ir); });
  io::write_atomically(out.ir_tsv(), [&](std::ostream& o) { write_ir_tsv(o, res.ir); });

  render_classification_table(log, res.classification);
  log << '\n';
  render_ir_table(log, res.ir);
  return res;
}

// ---------------------------------------------------------------------------
// synthesize (optional stage producing the synthetic-positives file)

inline std::vector<SyntheticSentence> cmd_synthesize(const PipelineConfig& c, std::ostream& log) {
  require_inputs({{"questionnaire", c.paths.questionnaire}});
  const Layout out{c.paths.output_dir};
  const auto q = detail::read_path(c.paths.questionnaire, [](std::istream& in) { return load_questionnaire(in); });
  std::vector<std::unique_ptr<Backend>> owned;
  std::vector<Generator> generators;
  for (const auto& tag : c.synthesis.generators) {
    owned.push_back(make_backend(c, tag));
    generators.push_back({tag, owned.back().get()});
  }
  auto rows = synthesize_positives(generators, q, c.synthesis.per_generator, retry_policy(c));
  io::write_atomically(out.synthetic(), [&](std::ostream& o) { write_synthetic(o, rows); });
  log << "synthesize: " << rows.size() << " sentences from " << generators.size() << " generators\n";
  return rows;
}

}  // namespace symptomrank::pipeline

#pragma once

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "biaskit/analogy_eval.hpp"
#include "biaskit/association_test.hpp"
#include "biaskit/cluster_audit.hpp"
#include "biaskit/corpus_pairs.hpp"
#include "biaskit/embedding_store.hpp"
#include "biaskit/hard_debias.hpp"
#include "biaskit/random.hpp"
#include "biaskit/sent_debias.hpp"
#include "biaskit/subspace.hpp"
#include "biaskit/test_resources.hpp"

namespace biaskit::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kRuntime = 2 };

/// Everything a run needs, filled from flags and validated before any file
/// is read.
struct RunConfig {
  std::string embeddings;
  std::string after;
  std::string reference;
  std::string format = "word2vec-text";
  std::vector<std::string> specs;
  std::string templates;
  std::string manifest;
  std::string vectors;
  std::string after_vectors;
  std::string emit_sentences;
  std::string lists;
  std::string subspace;
  std::string report;
  std::string plot_data;
  std::string corpus;
  std::string pairs;
  std::string sentences;
  std::string questions;
  std::string out;
  std::vector<std::string> exclude = {"zij", "ze"};
  std::string male = "man";
  std::string female = "vrouw";
  std::string strategy = "exact-if-feasible";
  std::string std_convention = "population";
  std::uint64_t seed = 42;
  std::uint64_t max_samples = 100000;
  std::size_t min_per_list = 2;
  std::size_t k = 0;
  std::size_t max_tokens = 512;
  std::size_t limit = 30000;
  unsigned threads = 0;
  bool pretty = false;
  bool normalize = false;
  bool renormalize = false;
  bool flip_offset = false;
};

namespace detail {

inline EmbeddingFormat parse_format(const std::string& s) {
  return s == "tsv" ? EmbeddingFormat::tsv : EmbeddingFormat::word2vec_text;
}

inline void emit(const json& report, const RunConfig& cfg, std::ostream& out, bool print_json = true) {
  const std::string text = report.dump(2) + "\n";
  if (!cfg.out.empty()) biaskit::detail::write_text_file(cfg.out, text);
  if (print_json && cfg.out.empty()) out << text;
}

inline std::string fixed(double v, int digits = 3) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

inline std::string accuracy_text(const std::optional<double>& a) { return a ? fixed(*a, 5) : "n/a"; }

inline PermutationPlan make_plan(const RunConfig& cfg) {
  PermutationPlan plan;
  plan.max_samples = cfg.max_samples;
  plan.seed = derive_seed(cfg.seed, "association_test");
  plan.strategy = cfg.strategy == "always-sample" ? PermutationStrategy::always_sample
                                                  : PermutationStrategy::exact_if_feasible;
  plan.threads = cfg.threads;
  return plan;
}

inline RunOptions make_run_options(const RunConfig& cfg, LookupMode mode) {
  RunOptions options;
  options.mode = mode;
  options.min_per_list = cfg.min_per_list;
  options.std_convention = cfg.std_convention == "sample" ? StdConvention::sample : StdConvention::population;
  return options;
}

template <class Source>
TestResult run_one(const Source& source, const TestSpec& spec, const RunConfig& cfg, LookupMode mode) {
  TestResult r = run_test(source, spec, make_plan(cfg), make_run_options(cfg, mode));
  r.seed = cfg.seed;
  return r;
}

/// Results for one or two runs over every spec; JSON and optional table.
inline int report_association(const std::vector<TestSpec>& specs, const std::vector<TestResult>& before,
                              const std::vector<TestResult>& after, const RunConfig& cfg, std::ostream& out) {
  json report;
  if (after.empty() && specs.size() == 1) {
    report = before.front().to_json();
  } else {
    json tests = json::array();
    for (std::size_t i = 0; i < specs.size(); ++i) {
      if (after.empty()) {
        tests.push_back(before[i].to_json());
      } else {
        tests.push_back({{"test_id", specs[i].test_id}, {"before", before[i].to_json()}, {"after", after[i].to_json()}});
      }
    }
    report = {{"tests", tests}};
  }
  emit(report, cfg, out, !cfg.pretty);
  if (cfg.pretty) {
    out << std::left << std::setw(16) << "test" << std::setw(28) << "effect size d" << "p\n";
    for (std::size_t i = 0; i < specs.size(); ++i) {
      const auto& b = before[i];
      std::string d = fixed(b.effect_size) + b.significance();
      std::string p = fixed(b.p_value, 4);
      if (!after.empty()) {
        d += " → " + fixed(after[i].effect_size) + after[i].significance();
        p += " → " + fixed(after[i].p_value, 4);
      }
      out << std::left << std::setw(16) << b.test_id << std::setw(28) << d << p << "\n";
    }
  }
  return kOk;
}

inline int run_weat(const RunConfig& cfg, std::ostream& out) {
  std::vector<TestSpec> specs;
  for (const auto& p : cfg.specs) specs.push_back(load_test_spec(p));
  const EmbeddingSet set = load_embeddings(cfg.embeddings, parse_format(cfg.format));
  std::vector<TestResult> before, after;
  for (const auto& s : specs) before.push_back(run_one(set, s, cfg, LookupMode::words));
  if (!cfg.after.empty()) {
    const EmbeddingSet second = load_embeddings(cfg.after, parse_format(cfg.format));
    for (const auto& s : specs) after.push_back(run_one(second, s, cfg, LookupMode::words));
  }
  return report_association(specs, before, after, cfg, out);
}

inline std::vector<TestSpec> seat_specs(const RunConfig& cfg) {
  std::vector<TestSpec> specs;
  std::optional<TemplateSet> templates;
  if (!cfg.templates.empty()) templates = load_templates(cfg.templates);
  for (const auto& p : cfg.specs) {
    TestSpec s = load_test_spec(p);
    specs.push_back(templates ? expand_templates(*templates, s) : s);
  }
  return specs;
}

inline int run_seat(const RunConfig& cfg, std::ostream& out) {
  const std::vector<TestSpec> specs = seat_specs(cfg);
  if (!cfg.emit_sentences.empty()) {
    Manifest manifest;
    std::set<std::string> seen;
    for (const auto& s : specs) {
      const Manifest m = seat_manifest(s);
      for (const auto& id : m.ids) {
        const auto& e = m.entries.at(id);
        if (!seen.insert(e.text).second) continue;
        char buf[32];
        std::snprintf(buf, sizeof buf, "s%06zu", manifest.ids.size() + 1);
        manifest.add(buf, e);
      }
    }
    save_manifest(manifest, cfg.manifest);
    save_sentence_list(manifest, cfg.emit_sentences);
    emit({{"sentences", manifest.ids.size()}, {"manifest", cfg.manifest}, {"sentence_list", cfg.emit_sentences}},
         cfg, out);
    return kOk;
  }
  const Manifest manifest = load_manifest(cfg.manifest);
  const SentenceVectorSet set = load_sentence_vectors(cfg.vectors, manifest);
  std::vector<TestResult> before, after;
  for (const auto& s : specs) before.push_back(run_one(set, s, cfg, LookupMode::sentences));
  if (!cfg.after_vectors.empty()) {
    const SentenceVectorSet second = load_sentence_vectors(cfg.after_vectors, manifest);
    for (const auto& s : specs) after.push_back(run_one(second, s, cfg, LookupMode::sentences));
  }
  return report_association(specs, before, after, cfg, out);
}

inline int run_cluster(const RunConfig& cfg, std::ostream& out) {
  AuditOptions options;
  options.male_anchor = nfc(cfg.male);
  options.female_anchor = nfc(cfg.female);
  options.k = cfg.k == 0 ? 500 : cfg.k;
  options.normalize = cfg.normalize;
  options.threads = cfg.threads;
  if (!cfg.lists.empty()) options.exclusions = load_debias_lists(cfg.lists).gender_specific;

  const EmbeddingSet set = load_embeddings(cfg.embeddings, parse_format(cfg.format));
  std::optional<EmbeddingSet> reference;
  if (!cfg.reference.empty()) reference = load_embeddings(cfg.reference, parse_format(cfg.format));
  const ClusterAuditResult before = run_cluster_audit(set, options, reference ? &*reference : nullptr);
  if (!cfg.plot_data.empty()) biaskit::detail::write_text_file(cfg.plot_data, cluster_plot_tsv(set, before));

  if (cfg.after.empty()) {
    emit(before.to_json(), cfg, out, !cfg.pretty);
    if (cfg.pretty) out << "accuracy " << fixed(before.accuracy) << "\n";
    return kOk;
  }
  const EmbeddingSet second = load_embeddings(cfg.after, parse_format(cfg.format));
  const ClusterAuditResult after = run_cluster_audit(second, options, reference ? &*reference : &set);
  emit({{"before", before.to_json()}, {"after", after.to_json()}}, cfg, out, !cfg.pretty);
  if (cfg.pretty) out << "accuracy " << fixed(before.accuracy) << " → " << fixed(after.accuracy) << "\n";
  return kOk;
}

inline int run_debias_hard(const RunConfig& cfg, std::ostream& out) {
  const DebiasLists lists = load_debias_lists(cfg.lists);
  const EmbeddingSet set = load_embeddings(cfg.embeddings, parse_format(cfg.format));
  const HardDebiasResult result = hard_debias(set, lists, cfg.k == 0 ? 1 : cfg.k, cfg.threads);
  save_embeddings(result.embeddings, cfg.out);
  if (!cfg.subspace.empty()) save_subspace(result.subspace, cfg.subspace);
  const std::string text = result.report.to_json().dump(2) + "\n";
  if (!cfg.report.empty()) {
    biaskit::detail::write_text_file(cfg.report, text);
  } else {
    out << text;
  }
  return kOk;
}

inline int run_pairs_gen(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const std::vector<WordPair> pairs = load_word_pairs(cfg.pairs);
  std::ifstream corpus(cfg.corpus, std::ios::binary);
  if (!corpus) throw IoError("cannot open corpus: " + cfg.corpus);
  const std::set<std::string> excluded(cfg.exclude.begin(), cfg.exclude.end());
  const PairGenResult result = generate_pairs(corpus, pairs, excluded, {cfg.max_tokens, cfg.limit});
  if (result.pairs.empty()) err << "warning: no qualifying sentences in " << cfg.corpus << "\n";
  emit_manifest(result.pairs, cfg.manifest, cfg.sentences);
  emit(result.stats.to_json(), cfg, out);
  return kOk;
}

inline int run_sent_fit(const RunConfig& cfg, std::ostream& out) {
  const Manifest manifest = load_manifest(cfg.manifest);
  const SentenceVectorSet set = load_sentence_vectors(cfg.vectors, manifest);
  const BiasSubspace subspace = fit_sentence_subspace(set, cfg.k == 0 ? 1 : cfg.k);
  save_subspace(subspace, cfg.out);
  out << json{{"k", subspace.k()},
              {"dim", subspace.dim()},
              {"pairs", set.complete_pairs().size()},
              {"explained_variance", subspace.explained_variance}}
             .dump(2)
      << "\n";
  return kOk;
}

inline int run_sent_apply(const RunConfig& cfg, std::ostream& out) {
  Manifest manifest;
  if (!cfg.manifest.empty()) manifest = load_manifest(cfg.manifest);
  const SentenceVectorSet set = load_sentence_vectors(cfg.vectors, manifest);
  const BiasSubspace subspace = load_subspace(cfg.subspace);
  const SentenceVectorSet debiased = debias_batch(set, subspace, {cfg.renormalize, cfg.threads});
  save_sentence_vectors(debiased, cfg.out);
  out << json{{"n", debiased.size()}, {"dim", debiased.dim()}, {"k", subspace.k()}, {"renormalized", cfg.renormalize}}
             .dump(2)
      << "\n";
  return kOk;
}

inline int run_analogy(const RunConfig& cfg, std::ostream& out) {
  const AnalogyDataset data = load_analogy_dataset(cfg.questions);
  const OffsetSign sign = cfg.flip_offset ? OffsetSign::flipped : OffsetSign::standard;
  const EmbeddingSet set = load_embeddings(cfg.embeddings, parse_format(cfg.format));
  const AnalogyReport before = run_analogy_task(set, data, sign, cfg.threads);
  json report = before.to_json();
  report["offset"] = cfg.flip_offset ? "a-b+c" : "b-a+c";
  if (cfg.after.empty()) {
    emit(report, cfg, out, !cfg.pretty);
    if (cfg.pretty) out << "accuracy " << accuracy_text(before.overall.accuracy()) << "\n";
    return kOk;
  }
  const EmbeddingSet second = load_embeddings(cfg.after, parse_format(cfg.format));
  const AnalogyReport after = run_analogy_task(second, data, sign, cfg.threads);
  json second_report = after.to_json();
  second_report["offset"] = report["offset"];
  json both = {{"before", report}, {"after", second_report}};
  if (before.overall.accuracy() && after.overall.accuracy()) {
    both["delta"] = *after.overall.accuracy() - *before.overall.accuracy();
  } else {
    both["delta"] = nullptr;
  }
  emit(both, cfg, out, !cfg.pretty);
  if (cfg.pretty) {
    out << "accuracy " << accuracy_text(before.overall.accuracy()) << " → "
        << accuracy_text(after.overall.accuracy()) << "\n";
  }
  return kOk;
}

}  // namespace detail

/// Parses argv, validates every flag, dispatches. Usage problems and
/// malformed or contract-breaking inputs return 1; I/O and numerical
/// failures return 2.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  RunConfig cfg;
  CLI::App app{"biaskit: measure and mitigate social bias in word and sentence embeddings"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  const auto format_check = CLI::IsMember({"word2vec-text", "tsv"});
  auto common = [&](CLI::App* sub) {
    sub->add_option("--seed", cfg.seed, "Run seed; module seeds derive from it")->capture_default_str();
    sub->add_option("--threads", cfg.threads, "Worker cap (0 = all cores)")->capture_default_str();
    sub->add_option("--out", cfg.out, "Output path (report JSON unless stated otherwise)");
  };
  auto permutation = [&](CLI::App* sub) {
    sub->add_option("--max-samples", cfg.max_samples, "Permutation budget")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--strategy", cfg.strategy, "exact-if-feasible | always-sample")
        ->check(CLI::IsMember({"exact-if-feasible", "always-sample"}))
        ->capture_default_str();
    sub->add_option("--std", cfg.std_convention, "population | sample")
        ->check(CLI::IsMember({"population", "sample"}))
        ->capture_default_str();
    sub->add_flag("--pretty", cfg.pretty, "Print a before/after table instead of JSON");
  };

  CLI::App* weat = app.add_subcommand("weat", "Word embedding association test");
  weat->add_option("--embeddings", cfg.embeddings, "Embedding file")->required()->check(CLI::ExistingFile);
  weat->add_option("--after", cfg.after, "Second (e.g. debiased) embedding file")->check(CLI::ExistingFile);
  weat->add_option("--spec", cfg.specs, "Test spec JSON (repeatable)")->required()->check(CLI::ExistingFile);
  weat->add_option("--format", cfg.format, "word2vec-text | tsv")->check(format_check)->capture_default_str();
  weat->add_option("--min-per-list", cfg.min_per_list, "OOV floor per list")->check(CLI::PositiveNumber)->capture_default_str();
  permutation(weat);
  common(weat);

  CLI::App* seat = app.add_subcommand("seat", "Sentence embedding association test");
  seat->add_option("--spec", cfg.specs, "Test spec JSON (repeatable)")->required()->check(CLI::ExistingFile);
  seat->add_option("--templates", cfg.templates, "Templates, one per line")->check(CLI::ExistingFile);
  seat->add_option("--manifest", cfg.manifest, "Sentence manifest TSV")->required();
  seat->add_option("--vectors", cfg.vectors, "Sentence-vector file")->check(CLI::ExistingFile);
  seat->add_option("--after-vectors", cfg.after_vectors, "Second sentence-vector file")->check(CLI::ExistingFile);
  seat->add_option("--emit-sentences", cfg.emit_sentences,
                   "Write the expanded sentence list (and --manifest) for the encoder, then stop");
  permutation(seat);
  common(seat);

  CLI::App* cluster = app.add_subcommand("cluster", "Clustering-accuracy bias audit");
  cluster->add_option("--embeddings", cfg.embeddings, "Embedding file")->required()->check(CLI::ExistingFile);
  cluster->add_option("--after", cfg.after, "Debiased embedding; words are selected on --embeddings")
      ->check(CLI::ExistingFile);
  cluster->add_option("--reference", cfg.reference, "Select words on this embedding instead")->check(CLI::ExistingFile);
  cluster->add_option("--male", cfg.male, "Male anchor")->capture_default_str();
  cluster->add_option("--female", cfg.female, "Female anchor")->capture_default_str();
  cluster->add_option("-k", cfg.k, "Words per pole (default 500)")->check(CLI::PositiveNumber);
  cluster->add_option("--lists", cfg.lists, "Debias lists JSON; gender_specific words are excluded")
      ->check(CLI::ExistingFile);
  cluster->add_option("--format", cfg.format, "word2vec-text | tsv")->check(format_check)->capture_default_str();
  cluster->add_flag("--normalize", cfg.normalize, "Score and cluster unit-normalized vectors");
  cluster->add_option("--plot-data", cfg.plot_data, "Write plot-data TSV");
  cluster->add_flag("--pretty", cfg.pretty, "Print a summary line instead of JSON");
  common(cluster);

  CLI::App* hard = app.add_subcommand("debias-hard", "Hard-Debias: neutralize and equalize");
  hard->add_option("--embeddings", cfg.embeddings, "Embedding file")->required()->check(CLI::ExistingFile);
  hard->add_option("--lists", cfg.lists, "Debias lists JSON")->required()->check(CLI::ExistingFile);
  hard->add_option("-k", cfg.k, "Subspace dimension (default 1)")->check(CLI::PositiveNumber);
  hard->add_option("--subspace", cfg.subspace, "Write the fitted subspace JSON");
  hard->add_option("--report", cfg.report, "Write the report JSON here instead of stdout");
  hard->add_option("--format", cfg.format, "word2vec-text | tsv")->check(format_check)->capture_default_str();
  common(hard);
  hard->get_option("--out")->required()->description("Debiased embedding output (word2vec text)");

  CLI::App* pairs = app.add_subcommand("pairs-gen", "Generate gendered sentence pairs from a corpus");
  pairs->add_option("--corpus", cfg.corpus, "Plain UTF-8 corpus")->required()->check(CLI::ExistingFile);
  pairs->add_option("--pairs", cfg.pairs, "Gendered pair list JSON")->required()->check(CLI::ExistingFile);
  pairs->add_option("--exclude", cfg.exclude, "Excluded tokens")->capture_default_str();
  pairs->add_option("--max-tokens", cfg.max_tokens, "Longest accepted sentence")->check(CLI::PositiveNumber)->capture_default_str();
  pairs->add_option("--limit", cfg.limit, "Maximum number of pairs")->check(CLI::PositiveNumber)->capture_default_str();
  pairs->add_option("--manifest", cfg.manifest, "Manifest TSV output")->required();
  pairs->add_option("--sentences", cfg.sentences, "Sentence list output")->required();
  common(pairs);

  CLI::App* sfit = app.add_subcommand("sent-fit", "Fit a sentence-level bias subspace");
  sfit->add_option("--vectors", cfg.vectors, "Sentence-vector file")->required()->check(CLI::ExistingFile);
  sfit->add_option("--manifest", cfg.manifest, "Pair manifest TSV")->required()->check(CLI::ExistingFile);
  sfit->add_option("-k", cfg.k, "Subspace dimension (default 1)")->check(CLI::PositiveNumber);
  common(sfit);
  sfit->get_option("--out")->required()->description("Subspace JSON output");

  CLI::App* sapply = app.add_subcommand("sent-apply", "Remove a bias subspace from sentence vectors");
  sapply->add_option("--vectors", cfg.vectors, "Sentence-vector file")->required()->check(CLI::ExistingFile);
  sapply->add_option("--subspace", cfg.subspace, "Subspace JSON")->required()->check(CLI::ExistingFile);
  sapply->add_option("--manifest", cfg.manifest, "Manifest TSV")->check(CLI::ExistingFile);
  sapply->add_flag("--renormalize", cfg.renormalize, "Rescale outputs to unit length");
  common(sapply);
  sapply->get_option("--out")->required()->description("Debiased sentence-vector output");

  CLI::App* analogy = app.add_subcommand("analogy", "Relation-identification accuracy");
  analogy->add_option("--embeddings", cfg.embeddings, "Embedding file")->required()->check(CLI::ExistingFile);
  analogy->add_option("--questions", cfg.questions, "question-words file")->required()->check(CLI::ExistingFile);
  analogy->add_option("--after", cfg.after, "Second (e.g. debiased) embedding file")->check(CLI::ExistingFile);
  analogy->add_option("--format", cfg.format, "word2vec-text | tsv")->check(format_check)->capture_default_str();
  analogy->add_flag("--flip-offset", cfg.flip_offset, "Use a - b + c instead of b - a + c");
  analogy->add_flag("--pretty", cfg.pretty, "Print a summary line instead of JSON");
  common(analogy);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    CLI::App* failing = &app;
    for (auto* sub : app.get_subcommands()) failing = sub;
    err << failing->help();
    return kValidation;
  }

  if (seat->parsed() && cfg.emit_sentences.empty() && cfg.vectors.empty()) {
    err << "error: seat needs --vectors (or --emit-sentences to prepare encoder input)\n";
    return kValidation;
  }

  try {
    if (weat->parsed()) return detail::run_weat(cfg, out);
    if (seat->parsed()) return detail::run_seat(cfg, out);
    if (cluster->parsed()) return detail::run_cluster(cfg, out);
    if (hard->parsed()) return detail::run_debias_hard(cfg, out);
    if (pairs->parsed()) return detail::run_pairs_gen(cfg, out, err);
    if (sfit->parsed()) return detail::run_sent_fit(cfg, out);
    if (sapply->parsed()) return detail::run_sent_apply(cfg, out);
    if (analogy->parsed()) return detail::run_analogy(cfg, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kValidation;
}

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<const char*> argv;
  argv.push_back("biaskit");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace biaskit::cli

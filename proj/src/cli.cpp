#include "detmask/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "detmask/align.hpp"
#include "detmask/checkpoint.hpp"
#include "detmask/error.hpp"
#include "detmask/io.hpp"
#include "detmask/kb.hpp"
#include "detmask/masking.hpp"
#include "detmask/model.hpp"
#include "detmask/pipeline.hpp"
#include "detmask/probe.hpp"
#include "detmask/synth.hpp"

namespace detmask::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

enum class Level { Error = 0, Info = 1, Debug = 2 };

Level log_level() {
  const char* env = std::getenv("DETMASK_LOG");
  if (!env) return Level::Info;
  const std::string v = env;
  if (v == "error") return Level::Error;
  if (v == "debug") return Level::Debug;
  return Level::Info;
}

class Log {
 public:
  explicit Log(std::ostream& err) : err_(err), level_(log_level()) {}
  void info(const std::string& msg) const { emit(Level::Info, "info", msg); }
  void debug(const std::string& msg) const { emit(Level::Debug, "debug", msg); }
  void error(const std::string& msg) const { emit(Level::Error, "error", msg); }

 private:
  void emit(Level l, const char* tag, const std::string& msg) const {
    if (static_cast<int>(l) <= static_cast<int>(level_))
      err_ << "detmask " << tag << ": " << msg << '\n';
  }
  std::ostream& err_;
  Level level_;
};

// Run bookkeeping written as <output>.manifest.json. processed always equals
// emitted plus the sum of skipped.
struct Manifest {
  std::string command;
  std::uint64_t seed = 0;
  ojson inputs = ojson::object();
  ojson outputs = ojson::object();
  ojson config = ojson::object();
  std::size_t processed = 0;
  std::size_t emitted = 0;
  std::map<std::string, std::size_t> skipped;
  ojson extra = ojson::object();
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void skip(const std::string& reason) {
    ++skipped[reason];
    ++processed;
  }
  void emit() {
    ++emitted;
    ++processed;
  }

  void write(const fs::path& output) const {
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - start)
                        .count();
    ojson skipped_json = ojson::object();
    for (const auto& [k, v] : skipped) skipped_json[k] = v;
    ojson j{{"command", command},
            {"inputs", inputs},
            {"outputs", outputs},
            {"seed", seed},
            {"config", config},
            {"timing_ms", ms},
            {"counters",
             {{"processed", processed}, {"emitted", emitted}, {"skipped", skipped_json}}}};
    for (const auto& [k, v] : extra.items()) j[k] = v;
    std::ofstream out(manifest_path(output));
    out << j.dump(2) << '\n';
    if (!out) throw Error("cannot write manifest for " + output.string());
  }

  static fs::path manifest_path(const fs::path& output) {
    return fs::path(output.string() + ".manifest.json");
  }
};

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

template <typename Fn>
void write_lines(const fs::path& path, const Fn& fn) {
  auto out = open_out(path);
  fn(out);
  if (!out) throw Error("failed writing " + path.string());
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string kind = "fact";
  std::string out;
  std::uint64_t seed = 1;
  std::size_t paragraphs = 100;
  std::size_t triplets = 500;
  std::size_t entities = 80;
  std::size_t words = 40;
  std::size_t subjects = 60;
};

int run_synth(const SynthArgs& a, const Log& log) {
  synth::World world;
  if (a.kind == "fact") {
    synth::FactWorldOptions o;
    o.subjects = a.subjects;
    o.seed = a.seed;
    world = synth::make_fact_world(o);
  } else {
    synth::RandomWorldOptions o;
    o.paragraphs = a.paragraphs;
    o.triplets = a.triplets;
    o.entities = a.entities;
    o.words_per_paragraph = a.words;
    o.seed = a.seed;
    world = synth::make_random_world(o);
  }
  const fs::path dir = a.out;
  world.kb.write_dir(dir / "kb");
  write_lines(dir / "corpus.jsonl", [&](std::ostream& out) {
    for (const auto& p : world.corpus) out << io::paragraph_line(p) << '\n';
  });
  write_lines(dir / "templates.jsonl", [&](std::ostream& out) {
    for (const auto& t : world.templates) out << io::template_line(t) << '\n';
  });
  write_lines(dir / "facts.jsonl", [&](std::ostream& out) {
    for (const auto& f : world.facts) out << io::fact_line(f) << '\n';
  });
  log.info("wrote " + std::to_string(world.corpus.size()) + " paragraphs, " +
           std::to_string(world.kb.triplets().size()) + " triplets to " + dir.string());
  return kOk;
}

// ---------------------------------------------------------------- build-kb

struct BuildKbArgs {
  std::string triplets, entities, predicates, out;
};

int run_build_kb(const BuildKbArgs& a, const Log& log) {
  Manifest m;
  m.command = "build-kb";
  std::ifstream t(a.triplets), e(a.entities), p(a.predicates);
  if (!t) throw Error("cannot open " + a.triplets);
  if (!e) throw Error("cannot open " + a.entities);
  if (!p) throw Error("cannot open " + a.predicates);
  const auto kb = KnowledgeBase::load(t, e, p);
  kb.write_dir(a.out);
  m.inputs = {{"triplets", a.triplets}, {"entities", a.entities}, {"predicates", a.predicates}};
  m.outputs = {{"kb", a.out}};
  m.processed = m.emitted = kb.triplets().size();
  m.extra["kb"] = {{"triplets", kb.triplets().size()},
                   {"entities", kb.entity_count()},
                   {"predicates", kb.predicate_count()}};
  m.write(fs::path(a.out) / "kb");
  log.info("knowledge base: " + std::to_string(kb.triplets().size()) + " triplets");
  return kOk;
}

// ---------------------------------------------------------------- align

struct AlignArgs {
  std::string kb, corpus, out, ssm;
  int threads = 1;
  std::uint64_t seed = 0;
};

int run_align(const AlignArgs& a, const Log& log) {
  Manifest m;
  m.command = "align";
  m.seed = a.seed;
  const auto kb = KnowledgeBase::load_dir(a.kb);
  const Aligner aligner(kb);
  std::ifstream corpus(a.corpus);
  if (!corpus) throw Error("cannot open " + a.corpus);
  auto samples = open_out(a.out);
  std::ofstream ssm;
  if (!a.ssm.empty()) ssm = open_out(a.ssm);

  const auto run = align_stream(corpus, samples, a.ssm.empty() ? nullptr : &ssm, aligner,
                                a.threads);
  if (!samples || (!a.ssm.empty() && !ssm)) throw Error("failed writing alignment output");
  for (const auto& e : run.errors) log.error(a.corpus + ": " + e);

  const auto& c = run.counters;
  m.inputs = {{"kb", a.kb}, {"corpus", a.corpus}};
  m.outputs = {{"samples", a.out}};
  if (!a.ssm.empty()) m.outputs["ssm"] = a.ssm;
  m.config = {{"threads", a.threads}};
  m.processed = c.paragraphs;
  m.emitted = c.deterministic_paragraphs;
  if (c.bad_paragraphs) m.skipped["malformed"] = c.bad_paragraphs;
  const auto no_det = c.paragraphs - c.bad_paragraphs - c.deterministic_paragraphs;
  if (no_det) m.skipped["no_deterministic_triplet"] = no_det;
  m.extra["alignment"] = {{"ssm_paragraphs", c.ssm_paragraphs},
                          {"emitted_triplets", c.emitted_triplets},
                          {"candidate_triplets", c.triplets.candidates},
                          {"nondeterministic_triplets", c.triplets.nondeterministic},
                          {"unmatched_predicate", c.triplets.unmatched_predicate}};
  m.write(a.out);
  log.info("aligned " + std::to_string(c.paragraphs) + " paragraphs: " +
           std::to_string(c.deterministic_paragraphs) + " deterministic, " +
           std::to_string(c.bad_paragraphs) + " malformed");
  return kOk;
}

// ---------------------------------------------------------------- stats

struct StatsArgs {
  std::string samples, manifest;
};

int run_stats(const StatsArgs& a, std::ostream& out) {
  const auto samples = io::read_jsonl<AlignedSample>(a.samples, io::parse_sample);
  AlignCounters counters;
  const fs::path manifest =
      a.manifest.empty() ? Manifest::manifest_path(a.samples) : fs::path(a.manifest);
  if (fs::exists(manifest)) {
    const auto j = nlohmann::json::parse(io::read_file(manifest));
    const auto& al = j.at("alignment");
    counters.candidates = al.at("candidate_triplets");
    counters.nondeterministic = al.at("nondeterministic_triplets");
    counters.unmatched_predicate = al.at("unmatched_predicate");
  }
  const auto stats = compute_stats(samples, counters);
  out << std::fixed << std::setprecision(2);
  out << "paragraphs                    " << stats.paragraph_count << '\n'
      << "samples                       " << stats.sample_count << '\n'
      << "avg tokens per paragraph      " << stats.avg_tokens_per_paragraph << '\n'
      << "avg tokens per S u P          " << stats.avg_clue_tokens << '\n'
      << "avg tokens per O              " << stats.avg_object_tokens << '\n'
      << "non-deterministic triplets    " << std::setprecision(4)
      << stats.nondeterministic_fraction << '\n';
  return kOk;
}

// ---------------------------------------------------------------- mask

struct MaskArgs {
  std::string samples, ssm, out, vocab, kb;
  std::string scheme = "deterministic";
  std::string objective = "plain";
  std::uint64_t seed = 0;
};

int run_mask(const MaskArgs& a, const Log& log) {
  const auto scheme = parse_scheme(a.scheme);
  if (!scheme) throw CLI::ValidationError("--scheme", "unknown scheme " + a.scheme);
  if (a.objective != "plain" && *scheme != MaskScheme::Deterministic)
    throw CLI::ValidationError("--objective", "contrastive/classification need --scheme deterministic");

  Manifest m;
  m.command = "mask";
  m.seed = a.seed;
  m.inputs = {{"samples", a.samples}};
  m.outputs = {{"masked", a.out}, {"vocab", a.vocab}};
  m.config = {{"scheme", a.scheme}, {"objective", a.objective}};

  const auto samples = io::read_jsonl<AlignedSample>(a.samples, io::parse_sample);
  std::vector<SsmSample> ssm;
  if (!a.ssm.empty()) {
    ssm = io::read_jsonl<SsmSample>(a.ssm, io::parse_ssm);
    m.inputs["ssm"] = a.ssm;
  }

  std::vector<std::string> texts;
  for (const auto& s : samples) texts.push_back(s.paragraph.text);
  for (const auto& s : ssm) texts.push_back(s.paragraph.text);
  if (!a.kb.empty()) {
    const auto kb = KnowledgeBase::load_dir(a.kb);
    m.inputs["kb"] = a.kb;
    for (const auto& [_, aliases] : kb.entity_aliases())
      texts.insert(texts.end(), aliases.begin(), aliases.end());
    for (const auto& [_, aliases] : kb.predicate_aliases())
      texts.insert(texts.end(), aliases.begin(), aliases.end());
  }
  const auto vocab = Vocabulary::build(texts);
  write_lines(a.vocab, [&](std::ostream& out) { vocab.save(out); });

  std::vector<TokenizedSample> tokenized;
  if (*scheme == MaskScheme::SalientSpan && !ssm.empty()) {
    for (const auto& s : ssm) tokenized.push_back(salient_sample(s, vocab));
  } else if (*scheme == MaskScheme::SalientSpan) {
    for (const auto& s : samples) tokenized.push_back(salient_sample({s.paragraph, s.entity_spans}, vocab));
  } else {
    for (const auto& s : samples)
      for (auto& t : training_samples(s, vocab)) tokenized.push_back(std::move(t));
  }

  write_lines(a.out, [&](std::ostream& out) {
    for (std::size_t g = 0; g < tokenized.size(); ++g) {
      auto rng = stream_for(a.seed, g);
      try {
        if (a.objective == "plain") {
          out << io::masked_line(apply_mask(tokenized[g], *scheme, rng), g) << '\n';
        } else if (a.objective == "contrastive") {
          const auto pair = make_contrastive_pair(tokenized[g]);
          out << io::masked_line(pair.keep, g) << '\n' << io::masked_line(pair.drop, g) << '\n';
        } else {
          const auto triple = make_classification_triple(tokenized[g], rng);
          out << io::masked_line(triple.keep, g) << '\n'
              << io::masked_line(triple.drop, g) << '\n'
              << io::masked_line(triple.random, g) << '\n';
        }
        m.emit();
      } catch (const NoMaskableContent&) {
        m.skip("no_maskable_content");
      } catch (const NoClues&) {
        m.skip("no_clues");
      } catch (const InsufficientContext&) {
        m.skip("insufficient_context");
      }
    }
  });
  m.extra["vocab_size"] = vocab.size();
  m.write(a.out);
  log.info("masked " + std::to_string(m.emitted) + " of " + std::to_string(m.processed) +
           " samples");
  return kOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string masked, vocab, out, log_path;
  long steps = 1000;
  double lr = 0.2;
  std::size_t batch = 16;
  std::size_t d = 32;
  std::size_t hidden = 64;
  std::size_t max_len = 0;
  double lambda_con = 1.0;
  double lambda_cls = 1.0;
  std::uint64_t seed = 0;
  int threads = 1;
};

std::vector<TrainingExample> group_examples(const std::vector<io::MaskedRecord>& records) {
  std::map<std::size_t, TrainingExample> groups;
  std::vector<std::size_t> order;
  for (const auto& r : records) {
    auto [it, fresh] = groups.try_emplace(r.group);
    if (fresh) order.push_back(r.group);
    auto& ex = it->second;
    switch (r.sample.variant) {
      case Variant::Plain:
      case Variant::KeepClues: ex.keep = r.sample; break;
      case Variant::MaskClues: ex.drop = r.sample; break;
      case Variant::MaskRandom: ex.random = r.sample; break;
    }
  }
  std::vector<TrainingExample> out;
  for (auto g : order) {
    if (groups[g].keep.positions.empty()) throw Error("group " + std::to_string(g) + " has no keep sample");
    out.push_back(std::move(groups[g]));
  }
  return out;
}

int run_train(const TrainArgs& a, const Log& log) {
  Manifest m;
  m.command = "train";
  m.seed = a.seed;
  std::ifstream vin(a.vocab);
  if (!vin) throw Error("cannot open " + a.vocab);
  const auto vocab = Vocabulary::load(vin);
  const auto records = io::read_jsonl<io::MaskedRecord>(a.masked, io::parse_masked);
  const auto data = group_examples(records);
  if (data.empty()) throw EmptyDataset();

  ModelConfig config;
  config.vocab_size = vocab.size();
  config.d = a.d;
  config.hidden = a.hidden;
  config.seed = a.seed;
  config.lambda_con = a.lambda_con;
  config.lambda_cls = a.lambda_cls;
  std::size_t longest = 1;
  for (const auto& r : records) longest = std::max(longest, r.sample.input.size());
  config.max_len = a.max_len ? a.max_len : longest;

  std::ofstream train_log;
  if (!a.log_path.empty()) train_log = open_out(a.log_path);
  TrainOptions options;
  options.steps = a.steps;
  options.lr = a.lr;
  options.batch_size = a.batch;
  options.threads = a.threads;
  LossBreakdown last;
  options.on_step = [&](long step, const LossBreakdown& l) {
    last = l;
    if (train_log.is_open()) {
      train_log << ojson{{"step", step}, {"L_mlm", l.mlm}, {"L_con", l.con},
                         {"L_cls", l.cls}, {"L_total", l.total}}
                       .dump()
                << '\n';
    }
    if (step % 100 == 0)
      log.debug("step " + std::to_string(step) + " L_total " + std::to_string(l.total));
  };
  const auto state = train(config, data, options);
  save_checkpoint(a.out, state, vocab);

  m.inputs = {{"masked", a.masked}, {"vocab", a.vocab}};
  m.outputs = {{"model", a.out}};
  if (!a.log_path.empty()) m.outputs["log"] = a.log_path;
  m.config = {{"steps", a.steps},   {"lr", a.lr},         {"batch", a.batch},
              {"d", a.d},           {"hidden", a.hidden}, {"max_len", config.max_len},
              {"lambda_con", a.lambda_con}, {"lambda_cls", a.lambda_cls}};
  m.processed = m.emitted = data.size();
  m.extra["final_loss"] = {{"L_mlm", last.mlm}, {"L_con", last.con}, {"L_cls", last.cls},
                           {"L_total", last.total}};
  m.write(a.out);
  log.info("trained " + std::to_string(a.steps) + " steps, final L_total " +
           std::to_string(last.total));
  return kOk;
}

// ---------------------------------------------------------------- probe

struct ProbeArgs {
  std::string model, templates, facts, out, kb, pretraining, predictions;
  int threads = 1;
};

int run_probe(const ProbeArgs& a, const Log& log) {
  Manifest m;
  m.command = "probe";
  const auto ckpt = load_checkpoint(a.model);
  const auto templates = io::read_jsonl<Template>(a.templates, io::parse_template);
  auto facts = io::read_jsonl<Fact>(a.facts, io::parse_fact);

  KnowledgeBase kb;
  if (!a.kb.empty()) {
    kb = KnowledgeBase::load_dir(a.kb);
  } else {
    // Cardinalities from the fact list itself.
    std::vector<Triplet> rows;
    AliasTable ents, preds;
    for (const auto& f : facts) {
      rows.push_back(f.triplet);
      ents[f.triplet.subject] = {f.subject_surface};
      ents[f.triplet.object] = {f.object_surface};
      preds[f.triplet.predicate] = {f.triplet.predicate};
    }
    kb = KnowledgeBase::from_parts(rows, ents, preds);
  }
  std::set<Triplet> pretraining;
  if (!a.pretraining.empty()) {
    io::for_each_line(a.pretraining, [&](std::size_t, const std::string& line) {
      for (const auto& t : io::parse_sample(line).aligned) pretraining.insert(t.triplet);
    });
  }
  facts = split_questions(std::move(facts), kb, pretraining);

  auto questions = build_questions(templates, facts);
  const auto total_questions = questions.size();
  auto split = filter_leakage(std::move(questions));
  const auto predictions = predict_questions(ckpt.state, ckpt.vocab, split.kept, a.threads);
  const auto report = evaluate(predictions, split.kept, facts);

  write_lines(a.out, [&](std::ostream& out) { out << io::report_json(report); });
  if (!a.predictions.empty()) {
    write_lines(a.predictions, [&](std::ostream& out) {
      for (std::size_t i = 0; i < split.kept.size(); ++i) {
        const auto& q = split.kept[i];
        out << ojson{{"fact", q.fact}, {"prompt_id", q.prompt_id}, {"prompt", q.text()},
                     {"answer", q.answer}, {"prediction", predictions[i]}}
                   .dump()
            << '\n';
      }
    });
  }
  m.inputs = {{"model", a.model}, {"templates", a.templates}, {"facts", a.facts}};
  if (!a.kb.empty()) m.inputs["kb"] = a.kb;
  if (!a.pretraining.empty()) m.inputs["pretraining"] = a.pretraining;
  m.outputs = {{"report", a.out}};
  m.processed = total_questions;
  m.emitted = split.kept.size();
  if (!split.dropped.empty()) m.skipped["leakage"] = split.dropped.size();
  m.write(a.out);
  log.info("probed " + std::to_string(split.kept.size()) + " questions (" +
           std::to_string(split.dropped.size()) + " leaked)");
  return kOk;
}

// ---------------------------------------------------------------- report

int run_report(const std::vector<std::string>& inputs, std::ostream& out) {
  out << std::left << std::setw(28) << "report" << std::setw(10) << "split" << std::right
      << std::setw(8) << "Acc." << std::setw(9) << "Consis." << std::setw(8) << "Joint"
      << std::setw(8) << "facts" << '\n';
  out << std::fixed << std::setprecision(2);
  for (const auto& path : inputs) {
    const auto r = io::parse_report(io::read_file(path));
    const std::pair<const char*, const SplitMetrics*> rows[] = {
        {"total", &r.total}, {"in", &r.in_domain}, {"out", &r.out_of_domain},
        {"N-1", &r.n1},      {"N-M", &r.nm}};
    for (const auto& [name, s] : rows) {
      if (s->facts == 0) continue;
      out << std::left << std::setw(28) << fs::path(path).filename().string() << std::setw(10)
          << name << std::right << std::setw(8) << 100 * s->accuracy << std::setw(9)
          << 100 * s->consistency << std::setw(8) << 100 * s->joint << std::setw(8)
          << s->facts << '\n';
    }
  }
  return kOk;
}

}  // namespace

int execute(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"detmask: deterministic masking data pipeline, toy MLM and cloze probing"};
  app.name("detmask");
  app.require_subcommand(1);
  const Log log(err);

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic knowledge base and corpus");
  synth_cmd->add_option("--kind", synth_args.kind, "fact or random")
      ->check(CLI::IsMember({"fact", "random"}));
  synth_cmd->add_option("--out", synth_args.out, "output directory")->required();
  synth_cmd->add_option("--seed", synth_args.seed);
  synth_cmd->add_option("--paragraphs", synth_args.paragraphs, "random worlds only");
  synth_cmd->add_option("--triplets", synth_args.triplets, "random worlds only");
  synth_cmd->add_option("--entities", synth_args.entities, "random worlds only");
  synth_cmd->add_option("--words", synth_args.words, "random worlds: words per paragraph");
  synth_cmd->add_option("--subjects", synth_args.subjects, "fact worlds only");

  BuildKbArgs kb_args;
  auto* kb_cmd = app.add_subcommand("build-kb", "validate and normalise knowledge base files");
  kb_cmd->add_option("--triplets", kb_args.triplets)->required();
  kb_cmd->add_option("--entities", kb_args.entities)->required();
  kb_cmd->add_option("--predicates", kb_args.predicates)->required();
  kb_cmd->add_option("--out", kb_args.out, "output directory")->required();

  AlignArgs align_args;
  auto* align_cmd = app.add_subcommand("align", "align a corpus with the knowledge base");
  align_cmd->add_option("--kb", align_args.kb, "knowledge base directory")->required();
  align_cmd->add_option("--corpus", align_args.corpus, "corpus.jsonl")->required();
  align_cmd->add_option("--out", align_args.out, "samples.jsonl (deterministic samples)")
      ->required();
  align_cmd->add_option("--ssm", align_args.ssm, "ssm.jsonl (salient span samples)");
  align_cmd->add_option("--threads", align_args.threads)->check(CLI::PositiveNumber);
  align_cmd->add_option("--seed", align_args.seed);

  StatsArgs stats_args;
  auto* stats_cmd = app.add_subcommand("stats", "summarise a samples.jsonl file");
  stats_cmd->add_option("--samples", stats_args.samples)->required();
  stats_cmd->add_option("--manifest", stats_args.manifest,
                        "alignment manifest (default <samples>.manifest.json)");

  MaskArgs mask_args;
  auto* mask_cmd = app.add_subcommand("mask", "materialise masked training samples");
  mask_cmd->add_option("--samples", mask_args.samples, "samples.jsonl")->required();
  mask_cmd->add_option("--ssm", mask_args.ssm, "ssm.jsonl for salient-span");
  mask_cmd->add_option("--scheme", mask_args.scheme,
                       "random-token, whole-word, salient-span, object-span, deterministic");
  mask_cmd->add_option("--objective", mask_args.objective)
      ->check(CLI::IsMember({"plain", "contrastive", "classification"}));
  mask_cmd->add_option("--kb", mask_args.kb, "add knowledge base aliases to the vocabulary");
  mask_cmd->add_option("--out", mask_args.out, "masked.jsonl")->required();
  mask_cmd->add_option("--vocab", mask_args.vocab, "vocabulary output")->required();
  mask_cmd->add_option("--seed", mask_args.seed);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train the toy masked language model");
  train_cmd->add_option("--masked", train_args.masked)->required();
  train_cmd->add_option("--vocab", train_args.vocab)->required();
  train_cmd->add_option("--out", train_args.out, "checkpoint path")->required();
  train_cmd->add_option("--log", train_args.log_path, "per-step JSONL loss log");
  train_cmd->add_option("--steps", train_args.steps)->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", train_args.lr)->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--batch", train_args.batch)->check(CLI::PositiveNumber);
  train_cmd->add_option("--d", train_args.d)->check(CLI::Range(2, 4096));
  train_cmd->add_option("--hidden", train_args.hidden)->check(CLI::PositiveNumber);
  train_cmd->add_option("--max-len", train_args.max_len, "0 = longest sample");
  train_cmd->add_option("--lambda-con", train_args.lambda_con)->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--lambda-cls", train_args.lambda_cls)->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--seed", train_args.seed);
  train_cmd->add_option("--threads", train_args.threads)->check(CLI::PositiveNumber);

  ProbeArgs probe_args;
  auto* probe_cmd = app.add_subcommand("probe", "cloze-probe a checkpoint");
  probe_cmd->add_option("--model", probe_args.model)->required();
  probe_cmd->add_option("--templates", probe_args.templates)->required();
  probe_cmd->add_option("--facts", probe_args.facts)->required();
  probe_cmd->add_option("--out", probe_args.out, "report.json")->required();
  probe_cmd->add_option("--kb", probe_args.kb, "knowledge base for relation types");
  probe_cmd->add_option("--pretraining", probe_args.pretraining,
                        "samples.jsonl whose triplets count as in-domain");
  probe_cmd->add_option("--predictions", probe_args.predictions, "per-question JSONL dump");
  probe_cmd->add_option("--threads", probe_args.threads)->check(CLI::PositiveNumber);

  std::vector<std::string> report_inputs;
  auto* report_cmd = app.add_subcommand("report", "print probe reports as a table");
  report_cmd->add_option("--in", report_inputs, "report.json (repeatable)")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "detmask: " << e.what() << "\n\n";
    const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kUsage;
  }

  try {
    if (*synth_cmd) return run_synth(synth_args, log);
    if (*kb_cmd) return run_build_kb(kb_args, log);
    if (*align_cmd) return run_align(align_args, log);
    if (*stats_cmd) return run_stats(stats_args, out);
    if (*mask_cmd) return run_mask(mask_args, log);
    if (*train_cmd) return run_train(train_args, log);
    if (*probe_cmd) return run_probe(probe_args, log);
    if (*report_cmd) return run_report(report_inputs, out);
  } catch (const CLI::ValidationError& e) {
    err << "detmask: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    log.error(e.what());
    return kDataError;
  }
  return kUsage;
}

}  // namespace detmask::cli

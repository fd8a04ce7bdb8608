#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "bicl/corpus.hpp"
#include "bicl/embedding.hpp"
#include "bicl/errors.hpp"
#include "bicl/gradcheck_suite.hpp"
#include "bicl/kvconfig.hpp"
#include "bicl/serialization.hpp"
#include "bicl/synthetic.hpp"
#include "bicl/trainer.hpp"

namespace bicl::cli {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

std::map<std::string, std::string> merged_kv(const std::string& config_path,
                                             const std::vector<std::string>& overrides) {
  std::map<std::string, std::string> kv;
  if (!config_path.empty()) kv = parse_kv_file(config_path);
  for (const std::string& item : overrides) {
    const auto [key, value] = parse_kv_pair(item);
    kv[key] = value;
  }
  return kv;
}

int cmd_generate(const std::string& spec_path, const std::vector<std::string>& overrides, const std::string& out_path,
                 std::uint64_t seed, const std::string& embeddings_out, int embedding_dim) {
  const auto kv = merged_kv(spec_path, overrides);
  const SyntheticSpec spec = SyntheticSpec::from_kv(kv);
  const std::vector<Conversation> corpus = generate_synthetic(spec, seed);

  std::map<std::string, std::string> provenance = spec.to_kv();
  provenance["seed"] = std::to_string(seed);
  std::vector<ConversationAnnotations> annotations(corpus.size());
  for (auto& a : annotations) a.provenance = provenance;
  write_conversations(out_path, corpus, &annotations);
  std::cout << "wrote " << corpus.size() << " conversations to " << out_path << "\n";
  if (!embeddings_out.empty()) {
    synthetic_embeddings(spec, embedding_dim, seed).save(embeddings_out);
    std::cout << "wrote " << embedding_dim << "-d topical word vectors to " << embeddings_out << "\n";
  }
  return kExitOk;
}

int cmd_train(const std::string& mode, const std::string& data_path, const std::string& embeddings_path,
              const std::string& config_path, const std::vector<std::string>& overrides, const std::string& out_path,
              std::string log_path) {
  auto kv = merged_kv(config_path, overrides);
  kv["mode"] = mode;
  TrainConfig config = TrainConfig::from_kv(kv);

  EmbeddingTable table;
  if (!embeddings_path.empty()) {
    table = EmbeddingTable::load(embeddings_path);
    if (!kv.count("embedding_dim")) {
      config.embedding_dim = table.dimension();
    } else if (table.dimension() != config.embedding_dim) {
      throw DataError("embeddings file '" + embeddings_path + "' has dimension " +
                      std::to_string(table.dimension()) + " but embedding_dim is configured as " +
                      std::to_string(config.embedding_dim));
    }
  } else {
    table = EmbeddingTable::fallback_only(config.embedding_dim, config.seed);
  }

  const std::vector<Conversation> corpus = load_conversations(data_path);
  const TrainResult result = config.mode == TrainMode::supervised
                                 ? train_supervised(corpus, std::move(table), config)
                                 : train_unsupervised(corpus, std::move(table), config);
  save_checkpoint(out_path, result.checkpoint);
  if (log_path.empty()) log_path = out_path + ".log.jsonl";
  write_training_log(log_path, result.log);

  double last_total = result.log.empty() ? 0.0 : result.log.back().losses.total;
  std::cout << "trained " << to_string(config.mode) << " for " << config.epochs << " epochs (" << result.log.size()
            << " steps, final total " << last_total << "); checkpoint " << out_path << ", log " << log_path << "\n";
  return kExitOk;
}

int cmd_disentangle(const std::string& ckpt_path, const std::string& data_path, const std::string& selector_name,
                    const std::string& out_path) {
  const Checkpoint checkpoint = load_checkpoint(ckpt_path);
  const KSelector selector = k_selector_from_string(selector_name);
  const std::vector<Conversation> corpus = load_conversations(data_path);

  std::map<std::string, std::string> provenance = checkpoint.config.to_kv();
  provenance["k_selector"] = selector_name;
  provenance["checkpoint"] = ckpt_path;

  std::vector<ConversationAnnotations> annotations;
  annotations.reserve(corpus.size());
  for (const Conversation& conv : corpus) {
    ConversationAnnotations ann;
    ann.provenance = provenance;
    ann.predicted_session_ids.assign(static_cast<std::size_t>(conv.size()), 0);
    int session_offset = 0;
    int position = 0;
    for (const Conversation& seg : segment(conv)) {
      const DisentangleResult d = disentangle(seg, checkpoint, selector);
      for (int i = 0; i < seg.size(); ++i)
        ann.predicted_session_ids[static_cast<std::size_t>(position + i)] =
            session_offset + d.partition.labels[static_cast<std::size_t>(i)];
      session_offset += d.k;
      position += seg.size();
    }
    ann.predicted_k = session_offset;
    annotations.push_back(std::move(ann));
  }
  write_conversations(out_path, corpus, &annotations);
  std::cout << "disentangled " << corpus.size() << " conversations to " << out_path << "\n";
  return kExitOk;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_path, const std::string& report_path,
             const std::string& selector_name) {
  const Checkpoint checkpoint = load_checkpoint(ckpt_path);
  const KSelector selector =
      selector_name.empty() ? checkpoint.config.k_selector : k_selector_from_string(selector_name);
  const std::vector<Conversation> corpus = load_conversations(data_path);
  const EvalReport report = evaluate(corpus, checkpoint, selector);

  std::map<std::string, std::string> provenance = checkpoint.config.to_kv();
  provenance["k_selector"] = to_string(selector);
  provenance["checkpoint"] = ckpt_path;

  std::ofstream out(report_path);
  if (!out) throw DataError("cannot open report file '" + report_path + "' for writing");
  out << eval_report_to_json(report, provenance) << "\n";
  if (!out) throw DataError("failed while writing report '" + report_path + "'");

  std::printf("nmi %.4f  ari %.4f  shen_f %.4f  k_acc %.4f  k_mae %.4f  (%zu segments, k_selector=%s)\n", report.nmi,
              report.ari, report.shen_f, report.k_acc, report.k_mae, report.per_conversation.size(),
              to_string(selector).c_str());
  return kExitOk;
}

int cmd_gradcheck(std::uint64_t seed) {
  const std::vector<GradCheckEntry> entries = run_gradient_checks(seed);
  bool ok = true;
  std::printf("%-42s %14s\n", "check", "max rel error");
  for (const GradCheckEntry& e : entries) {
    const bool pass = e.max_rel_error < kGradCheckTolerance;
    ok = ok && pass;
    std::printf("%-42s %14.3e  %s\n", e.name.c_str(), e.max_rel_error, pass ? "ok" : "FAIL");
  }
  if (!ok) {
    std::cerr << "gradient checks exceeded tolerance " << kGradCheckTolerance << "\n";
    return kExitNumeric;
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"bi-level contrastive conversation disentanglement"};
  app.require_subcommand(1);

  // generate
  auto* generate = app.add_subcommand("generate", "generate a synthetic entangled corpus (JSONL)");
  std::string gen_spec, gen_out, gen_embeddings;
  std::uint64_t gen_seed = 0;
  int gen_embedding_dim = 24;
  std::vector<std::string> gen_set;
  generate->add_option("--spec", gen_spec, "generator spec file (key = value lines)")->check(CLI::ExistingFile);
  generate->add_option("--set", gen_set, "override a spec key, e.g. --set num_conversations=50");
  generate->add_option("--out", gen_out, "output corpus path (JSONL)")->required();
  generate->add_option("--seed", gen_seed, "random seed");
  generate->add_option("--embeddings-out", gen_embeddings, "also write topical word vectors for the vocabulary");
  generate->add_option("--embedding-dim", gen_embedding_dim, "dimension for --embeddings-out (default 24)");

  // train
  auto* train = app.add_subcommand("train", "train a model and write a checkpoint");
  std::string train_mode, train_data, train_embeddings, train_config, train_out, train_log;
  std::vector<std::string> train_set;
  train->add_option("--mode", train_mode, "supervised | unsupervised")->required();
  train->add_option("--data", train_data, "training corpus (JSONL)")->required()->check(CLI::ExistingFile);
  train->add_option("--embeddings", train_embeddings, "pretrained word vectors (text format)")
      ->check(CLI::ExistingFile);
  train->add_option("--config", train_config, "config file (key = value lines)")->check(CLI::ExistingFile);
  train->add_option("--set", train_set, "override a config key, e.g. --set epochs=5");
  train->add_option("--out", train_out, "output checkpoint path")->required();
  train->add_option("--log", train_log, "training log path (default: <out>.log.jsonl)");

  // disentangle
  auto* dis = app.add_subcommand("disentangle", "assign sessions to a corpus with a trained checkpoint");
  std::string dis_ckpt, dis_data, dis_selector = "predictor", dis_out;
  dis->add_option("--ckpt", dis_ckpt, "checkpoint path")->required()->check(CLI::ExistingFile);
  dis->add_option("--data", dis_data, "input corpus (JSONL)")->required()->check(CLI::ExistingFile);
  dis->add_option("--k-selector", dis_selector, "predictor | elbow | silhouette | gold");
  dis->add_option("--out", dis_out, "annotated output corpus (JSONL)")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint against gold labels");
  std::string eval_ckpt, eval_data, eval_report, eval_selector;
  eval->add_option("--ckpt", eval_ckpt, "checkpoint path")->required()->check(CLI::ExistingFile);
  eval->add_option("--data", eval_data, "gold-labeled corpus (JSONL)")->required()->check(CLI::ExistingFile);
  eval->add_option("--report", eval_report, "output report path (JSON)")->required();
  eval->add_option("--k-selector", eval_selector, "override the checkpoint's k-selector");

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient verification suite");
  std::uint64_t gc_seed = 0;
  gradcheck->add_option("--seed", gc_seed, "random seed");

  std::vector<const char*> argv;
  argv.push_back("bicl");
  for (const std::string& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (generate->parsed()) return cmd_generate(gen_spec, gen_set, gen_out, gen_seed, gen_embeddings, gen_embedding_dim);
    if (train->parsed()) return cmd_train(train_mode, train_data, train_embeddings, train_config, train_set,
                                          train_out, train_log);
    if (dis->parsed()) return cmd_disentangle(dis_ckpt, dis_data, dis_selector, dis_out);
    if (eval->parsed()) return cmd_eval(eval_ckpt, eval_data, eval_report, eval_selector);
    if (gradcheck->parsed()) return cmd_gradcheck(gc_seed);
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitUsage;
}

}  // namespace bicl::cli

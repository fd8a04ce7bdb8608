#include "bicl/serialization.hpp"

#include <fstream>

#include <json.hpp>

#include "bicl/errors.hpp"

namespace bicl {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr int kFormatVersion = 1;

ordered_json tensor_to_json(const Tensor& t) {
  ordered_json j;
  j["shape"] = t.shape;
  j["values"] = t.values;
  return j;
}

Tensor tensor_from_json(const ordered_json& j) {
  return Tensor(j.at("shape").get<std::vector<int>>(), j.at("values").get<std::vector<double>>());
}

ordered_json config_to_json(const TrainConfig& c) {
  ordered_json j;
  j["mode"] = to_string(c.mode);
  j["alpha"] = c.alpha;
  j["beta"] = c.beta;
  j["gamma"] = c.gamma;
  j["eta"] = c.eta;
  j["tau1"] = c.tau1;
  j["tau2"] = c.tau2;
  j["tau1_prime"] = c.tau1_prime;
  j["tau2_prime"] = c.tau2_prime;
  j["learning_rate"] = c.learning_rate;
  j["batch_size"] = c.batch_size;
  j["epochs"] = c.epochs;
  j["negative_cap"] = c.negative_cap;
  j["clip_norm"] = c.clip_norm;
  j["max_sessions"] = c.max_sessions;
  j["embedding_dim"] = c.embedding_dim;
  j["hidden_dim"] = c.hidden_dim;
  j["attention_dim"] = c.attention_dim;
  j["k_hidden"] = c.k_hidden;
  j["k_outer_relu"] = c.k_outer_relu;
  j["em_kset"] = c.em_kset;
  j["recluster_every"] = c.recluster_every;
  j["drop_utterance_loss"] = c.drop_utterance_loss;
  j["seed"] = c.seed;
  j["k_selector"] = to_string(c.k_selector);
  return j;
}

TrainConfig config_from_json(const ordered_json& j) {
  TrainConfig c;
  c.mode = train_mode_from_string(j.at("mode").get<std::string>());
  c.alpha = j.at("alpha").get<double>();
  c.beta = j.at("beta").get<double>();
  c.gamma = j.at("gamma").get<double>();
  c.eta = j.at("eta").get<double>();
  c.tau1 = j.at("tau1").get<double>();
  c.tau2 = j.at("tau2").get<double>();
  c.tau1_prime = j.at("tau1_prime").get<double>();
  c.tau2_prime = j.at("tau2_prime").get<double>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.epochs = j.at("epochs").get<int>();
  c.negative_cap = j.at("negative_cap").get<int>();
  c.clip_norm = j.at("clip_norm").get<double>();
  c.max_sessions = j.at("max_sessions").get<int>();
  c.embedding_dim = j.at("embedding_dim").get<int>();
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.attention_dim = j.at("attention_dim").get<int>();
  c.k_hidden = j.at("k_hidden").get<int>();
  c.k_outer_relu = j.at("k_outer_relu").get<bool>();
  c.em_kset = j.at("em_kset").get<std::vector<int>>();
  c.recluster_every = j.at("recluster_every").get<int>();
  c.drop_utterance_loss = j.at("drop_utterance_loss").get<bool>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.k_selector = k_selector_from_string(j.at("k_selector").get<std::string>());
  return c;
}

ordered_json tensor_map_to_json(const std::map<std::string, Tensor>& tensors) {
  ordered_json j = ordered_json::object();
  for (const auto& [name, t] : tensors) j[name] = tensor_to_json(t);
  return j;
}

std::map<std::string, Tensor> tensor_map_from_json(const ordered_json& j) {
  std::map<std::string, Tensor> out;
  for (auto it = j.begin(); it != j.end(); ++it) out.emplace(it.key(), tensor_from_json(it.value()));
  return out;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  ordered_json j;
  j["format_version"] = kFormatVersion;
  j["config"] = config_to_json(checkpoint.config);
  j["epoch"] = checkpoint.epoch;
  j["rng_state"] = checkpoint.rng_state;

  ordered_json emb;
  emb["dimension"] = checkpoint.table.dimension();
  emb["fallback_seed"] = checkpoint.table.fallback_seed();
  ordered_json vocab = ordered_json::object();
  for (const auto& [word, vec] : checkpoint.table.vectors()) vocab[word] = vec;
  emb["vectors"] = std::move(vocab);
  j["embedding_table"] = std::move(emb);

  j["params"] = tensor_map_to_json(checkpoint.params.all());

  ordered_json adam;
  adam["step"] = checkpoint.adam.step;
  adam["beta1"] = checkpoint.adam.beta1;
  adam["beta2"] = checkpoint.adam.beta2;
  adam["epsilon"] = checkpoint.adam.epsilon;
  adam["m"] = tensor_map_to_json(checkpoint.adam.m);
  adam["v"] = tensor_map_to_json(checkpoint.adam.v);
  j["adam"] = std::move(adam);

  std::ofstream out(path);
  if (!out) throw DataError("cannot open checkpoint file '" + path + "' for writing");
  out << j.dump() << "\n";
  if (!out) throw DataError("failed while writing checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint file '" + path + "'");
  ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("checkpoint '" + path + "' is not valid JSON: " + e.what());
  }
  try {
    if (j.at("format_version").get<int>() != kFormatVersion)
      throw DataError("checkpoint '" + path + "' has unsupported format_version " +
                      j.at("format_version").dump());

    Checkpoint ckpt;
    ckpt.config = config_from_json(j.at("config"));
    ckpt.epoch = j.at("epoch").get<int>();
    ckpt.rng_state = j.at("rng_state").get<std::string>();

    const ordered_json& emb = j.at("embedding_table");
    ckpt.table = EmbeddingTable(emb.at("dimension").get<int>(), emb.at("fallback_seed").get<std::uint64_t>());
    for (auto it = emb.at("vectors").begin(); it != emb.at("vectors").end(); ++it)
      ckpt.table.insert(it.key(), it.value().get<std::vector<double>>());

    for (auto& [name, t] : tensor_map_from_json(j.at("params"))) ckpt.params.insert(name, std::move(t));

    const ordered_json& adam = j.at("adam");
    ckpt.adam.step = adam.at("step").get<long>();
    ckpt.adam.beta1 = adam.at("beta1").get<double>();
    ckpt.adam.beta2 = adam.at("beta2").get<double>();
    ckpt.adam.epsilon = adam.at("epsilon").get<double>();
    ckpt.adam.m = tensor_map_from_json(adam.at("m"));
    ckpt.adam.v = tensor_map_from_json(adam.at("v"));
    return ckpt;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint '" + path + "' is malformed: " + e.what());
  }
}

std::string eval_report_to_json(const EvalReport& report, const std::map<std::string, std::string>& provenance) {
  ordered_json j;
  j["method"] = report.method;
  j["k_selector"] = to_string(report.k_selector);
  j["nmi"] = report.nmi;
  j["ari"] = report.ari;
  j["shen_f"] = report.shen_f;
  j["k_acc"] = report.k_acc;
  j["k_mae"] = report.k_mae;
  ordered_json rows = ordered_json::array();
  for (const ConversationEval& row : report.per_conversation) {
    ordered_json r;
    r["id"] = row.id;
    r["n"] = row.size;
    r["gold_k"] = row.gold_k;
    r["predicted_k"] = row.predicted_k;
    r["nmi"] = row.nmi;
    r["ari"] = row.ari;
    r["shen_f"] = row.shen_f;
    rows.push_back(std::move(r));
  }
  j["per_conversation"] = std::move(rows);
  if (!provenance.empty()) {
    ordered_json cfg;
    for (const auto& [k, v] : provenance) cfg[k] = v;
    j["config"] = std::move(cfg);
  }
  return j.dump();
}

void write_training_log(const std::string& path, const std::vector<StepLog>& log) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open training log '" + path + "' for writing");
  for (const StepLog& step : log) {
    ordered_json j;
    j["epoch"] = step.epoch;
    j["step"] = step.step;
    if (step.losses.l_u) j["l_u"] = *step.losses.l_u;
    if (step.losses.l_s) j["l_s"] = *step.losses.l_s;
    if (step.losses.l_k) j["l_k"] = *step.losses.l_k;
    if (step.losses.l_m) j["l_m"] = *step.losses.l_m;
    if (step.losses.l_u_prime) j["l_u_prime"] = *step.losses.l_u_prime;
    if (step.losses.l_s_prime) j["l_s_prime"] = *step.losses.l_s_prime;
    j["total"] = step.losses.total;
    out << j.dump() << "\n";
  }
  if (!out) throw DataError("failed while writing training log '" + path + "'");
}

}  // namespace bicl

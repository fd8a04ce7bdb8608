#pragma once

#include <map>
#include <string>
#include <vector>

#include "bicl/trainer.hpp"

namespace bicl {

/// Versioned JSON checkpoint: config, encoder + k-predictor parameters, Adam
/// state, embedding table, epoch and RNG state. Doubles are written in
/// shortest round-trip form, so save -> load is bit-exact.
void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

/// Evaluation report as a JSON object; `provenance` is echoed under "config".
std::string eval_report_to_json(const EvalReport& report, const std::map<std::string, std::string>& provenance);

/// One JSONL line per training step: {"epoch", "step", active loss terms,
/// "total"}.
void write_training_log(const std::string& path, const std::vector<StepLog>& log);

}  // namespace bicl

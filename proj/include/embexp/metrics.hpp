#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "embexp/compiler.hpp"

namespace embexp {

class MetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Lowercases, deletes ASCII punctuation and splits on whitespace.
/// "Walk to living room." -> {"walk", "to", "living", "room"}.
std::vector<std::string> rouge_tokens(std::string_view text);

/// Length of the longest common subsequence.
std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

/// Sentence-level LCS F1 (beta = 1) over rouge_tokens. Both empty -> 1, one
/// empty -> 0.
double rouge_l(std::string_view candidate, std::string_view reference);

/// |LCS| / max(|pred|, |gold|). Throws MetricError if either is empty.
double lcs_normalized(std::span<const std::string> pred, std::span<const std::string> gold);

/// "kitchen, living room , bedroom" -> {"kitchen", "living room", "bedroom"}.
/// Pieces are trimmed and lowercased; empty pieces are dropped.
std::vector<std::string> parse_path(std::string_view text);

/// Trim and lowercase.
std::string normalize_answer(std::string_view text);

/// Score of one model output under the example's metric, in [0, 1].
double score_example(const EvalExample& e, std::string_view output);

struct Prediction {
  std::string id;
  std::string output;
};

std::vector<Prediction> read_predictions_jsonl(std::string_view text, std::string_view source = "<predictions>");

struct ScoreReport {
  std::string task;
  std::string metric;
  double value = 0.0;
  int n = 0;
};

/// One report per task present in `eval`, in task order. Every eval id needs
/// exactly one prediction; missing, unknown or repeated ids throw MetricError
/// naming the id.
std::vector<ScoreReport> score_predictions(std::span<const Prediction> predictions,
                                           std::span<const EvalExample> eval, unsigned jobs = 1);

std::vector<ScoreReport> score_file(const std::string& predictions_path, const std::string& eval_path,
                                    unsigned jobs = 1);

nlohmann::ordered_json to_json(const ScoreReport& r);
/// "housework_qa  accuracy  87.36  n=261" style table, values reported x100.
std::string format_reports(std::span<const ScoreReport> reports);

}  // namespace embexp

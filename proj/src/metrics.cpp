#include "embexp/metrics.hpp"

#include <cctype>
#include <cstdio>
#include <map>
#include <sstream>

namespace embexp {

std::vector<std::string> rouge_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else if (!std::ispunct(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  // Two rolling rows of the usual DP table.
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(std::string_view candidate, std::string_view reference) {
  const auto c = rouge_tokens(candidate);
  const auto r = rouge_tokens(reference);
  if (c.empty() && r.empty()) return 1.0;
  if (c.empty() || r.empty()) return 0.0;
  // 2PR / (P + R) with P = l/|c| and R = l/|r| reduces to 2l / (|c| + |r|);
  // a single division keeps the result correctly rounded.
  const auto l = lcs_length(c, r);
  return static_cast<double>(2 * l) / static_cast<double>(c.size() + r.size());
}

double lcs_normalized(std::span<const std::string> pred, std::span<const std::string> gold) {
  if (pred.empty() || gold.empty()) throw MetricError("lcs_normalized needs two non-empty paths");
  return static_cast<double>(lcs_length(pred, gold)) / static_cast<double>(std::max(pred.size(), gold.size()));
}

std::string normalize_answer(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  std::string out(text.substr(first, last - first + 1));
  for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

std::vector<std::string> parse_path(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    auto piece = normalize_answer(text.substr(start, end - start));
    if (!piece.empty()) out.push_back(std::move(piece));
    start = end + 1;
  }
  return out;
}

double score_example(const EvalExample& e, std::string_view output) {
  switch (e.scoring) {
    case Scoring::RougeL:
      return rouge_l(output, e.gold);
    case Scoring::Lcs: {
      const auto pred = parse_path(output);
      if (pred.empty()) return 0.0;
      return lcs_normalized(pred, parse_path(e.gold));
    }
    case Scoring::Accuracy:
      return normalize_answer(output) == normalize_answer(e.gold) ? 1.0 : 0.0;
  }
  throw MetricError("unknown scoring rule");
}

std::vector<Prediction> read_predictions_jsonl(std::string_view text, std::string_view source) {
  std::vector<Prediction> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto doc = nlohmann::json::parse(line);
      out.push_back({doc.at("id").get<std::string>(), doc.at("output").get<std::string>()});
    } catch (const nlohmann::json::exception& ex) {
      throw MetricError(std::string(source) + ":" + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return out;
}

std::vector<ScoreReport> score_predictions(std::span<const Prediction> predictions,
                                           std::span<const EvalExample> eval, unsigned jobs) {
  std::map<std::string, const Prediction*> by_id;
  for (const auto& p : predictions) {
    if (!by_id.emplace(p.id, &p).second) throw MetricError("duplicate prediction id '" + p.id + "'");
  }
  std::map<std::string, bool> known;
  for (const auto& e : eval) {
    if (!by_id.count(e.id)) throw MetricError("missing prediction for id '" + e.id + "'");
    known[e.id] = true;
  }
  for (const auto& p : predictions) {
    if (!known.count(p.id)) throw MetricError("prediction id '" + p.id + "' is not in the eval set");
  }

  const auto scores = parallel_map(eval.size(), jobs, [&](std::size_t i) {
    return score_example(eval[i], by_id.at(eval[i].id)->output);
  });

  std::array<double, kEvalTaskCount> sum{};
  std::array<int, kEvalTaskCount> n{};
  for (std::size_t i = 0; i < eval.size(); ++i) {
    const auto t = static_cast<std::size_t>(eval[i].task);
    sum[t] += scores[i];
    ++n[t];
  }
  std::vector<ScoreReport> out;
  for (std::size_t t = 0; t < kEvalTaskCount; ++t) {
    if (n[t] == 0) continue;
    const auto task = static_cast<EvalTask>(t);
    out.push_back({std::string(eval_task_name(task)), std::string(scoring_name(eval_scoring(task))),
                   sum[t] / n[t], n[t]});
  }
  return out;
}

std::vector<ScoreReport> score_file(const std::string& predictions_path, const std::string& eval_path,
                                    unsigned jobs) {
  const auto preds = read_predictions_jsonl(read_text_file(predictions_path), predictions_path);
  const auto eval = read_eval_jsonl(read_text_file(eval_path));
  return score_predictions(preds, eval, jobs);
}

nlohmann::ordered_json to_json(const ScoreReport& r) {
  nlohmann::ordered_json out;
  out["task"] = r.task;
  out["metric"] = r.metric;
  out["value"] = r.value;
  out["n"] = r.n;
  return out;
}

std::string format_reports(std::span<const ScoreReport> reports) {
  std::string out;
  char buf[160];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%-28s %-9s %6.2f  n=%d\n", r.task.c_str(), r.metric.c_str(), 100.0 * r.value, r.n);
    out += buf;
  }
  return out;
}

}  // namespace embexp

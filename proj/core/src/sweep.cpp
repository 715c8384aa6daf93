#include "mmrag/sweep.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "mmrag/error.hpp"
#include "mmrag/format.hpp"

namespace mmrag {

namespace {

using nlohmann::json;

std::vector<double> parse_axis(const json& value, const std::string& name) {
  std::vector<double> out;
  if (value.is_array()) {
    for (const json& v : value) out.push_back(v.get<double>());
  } else if (value.is_object()) {
    const double start = value.at("start").get<double>();
    const double stop = value.at("stop").get<double>();
    const double step = value.at("step").get<double>();
    if (!(step > 0.0) || stop < start) {
      throw Error("config_invalid", "grid." + name + " range is invalid");
    }
    for (double v = start; v <= stop + 1e-9; v += step) out.push_back(v);
  } else {
    throw Error("config_invalid",
                "grid." + name + " must be an array or a start/stop/step object");
  }
  if (out.empty()) {
    throw Error("config_invalid", "grid." + name + " has no values");
  }
  return out;
}

}  // namespace

SweepGrid parse_sweep_grid(const std::string& json_text) {
  const json doc = json::parse(json_text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error("config_invalid", "grid file is not a JSON object");
  }
  SweepGrid grid;
  if (doc.contains("alpha")) grid.alpha = parse_axis(doc["alpha"], "alpha");
  if (doc.contains("beta1")) grid.beta1 = parse_axis(doc["beta1"], "beta1");
  if (doc.contains("beta2")) grid.beta2 = parse_axis(doc["beta2"], "beta2");
  if (doc.contains("k")) {
    for (const double v : parse_axis(doc["k"], "k")) {
      if (v < 1.0 || v != std::floor(v)) {
        throw Error("config_invalid", "grid.k values must be positive integers");
      }
      grid.k.push_back(static_cast<std::size_t>(v));
    }
  }
  if (grid.alpha.empty() && grid.beta1.empty() && grid.beta2.empty() &&
      grid.k.empty()) {
    throw Error("empty_grid", "grid defines no parameter values");
  }
  return grid;
}

SweepGrid load_sweep_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_sweep_grid(text);
}

std::string run_sweep(const SweepGrid& grid, const PipelineConfig& cfg,
                      std::span<const QueryRecord> queries,
                      const VectorIndex& index, Gateway& gateway) {
  if (queries.empty()) throw Error("empty_input", "sweep needs query records");

  const std::vector<double> alphas =
      grid.alpha.empty() ? std::vector<double>{cfg.fusion.alpha} : grid.alpha;
  const std::vector<double> beta1s =
      grid.beta1.empty() ? std::vector<double>{cfg.weights.beta1} : grid.beta1;
  const std::vector<double> beta2s =
      grid.beta2.empty() ? std::vector<double>{cfg.weights.beta2} : grid.beta2;
  const std::vector<std::size_t> ks =
      grid.k.empty() ? std::vector<std::size_t>{cfg.retrieval_k} : grid.k;

  static constexpr std::size_t kMetricKs[] = {1, 5, 10, 20};

  std::string csv = std::string(kSweepCsvHeader) + "\n";
  for (const double alpha : alphas) {
    for (const double beta1 : beta1s) {
      for (const double beta2 : beta2s) {
        for (const std::size_t k : ks) {
          PipelineConfig point_cfg = cfg;
          point_cfg.fusion.alpha = alpha;
          point_cfg.weights.beta1 = beta1;
          point_cfg.weights.beta2 = beta2;
          point_cfg.retrieval_k = k;
          const PipelineRunner runner(point_cfg, index, gateway);

          const std::size_t fetch_k = std::max<std::size_t>(k, 20);
          std::vector<EvalRecord> records;
          records.reserve(queries.size());
          for (const QueryRecord& query : queries) {
            EvalRecord record = runner.retrieve(query, fetch_k);
            EvalRecord staged = record;
            if (staged.retrieved.size() > k) staged.retrieved.resize(k);
            runner.rerank(staged);
            runner.answer(staged);
            record.context = staged.context;
            record.predicted_answer = staged.predicted_answer;
            record.route = staged.route;
            record.inspector_decision = staged.inspector_decision;
            records.push_back(std::move(record));
          }

          csv += format_double(alpha) + "," + format_double(beta1) + "," +
                 format_double(beta2) + "," + std::to_string(k);
          for (const std::size_t mk : kMetricKs) {
            csv += "," + format_double(recall_at_k(records, mk));
          }
          csv += "," + format_double(pseudo_recall_at_k(records, 5));
          csv += "," + format_double(pseudo_recall_at_k(records, 20));
          csv += "," + format_double(vqa_accuracy(records, AccuracyMode::kStandard));
          csv += "," + format_double(vqa_accuracy(records, AccuracyMode::kRelaxed));
          csv += "\n";
        }
      }
    }
  }
  return csv;
}

}  // namespace mmrag

#include "hvf/evaluate.hpp"
#include "io/json_util.hpp"

#include <cmath>
#include <limits>

namespace hvf {

namespace {
constexpr const char* kSchema = "hvf.cv/1";

io::json num(double v) { return std::isnan(v) ? io::json(nullptr) : io::json(v); }
double from_num(const io::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}
}  // namespace

std::string cv_report_to_json(const CvReport& r) {
  using io::json;
  json doc;
  doc["schema"] = kSchema;
  doc["metric"] = r.metric;
  doc["variant"] = r.variant;
  doc["gammas"] = r.gammas;
  json scores = json::array();
  for (const auto& row : r.scores) {
    json jr = json::array();
    for (const double v : row) jr.push_back(num(v));
    scores.push_back(std::move(jr));
  }
  doc["scores"] = std::move(scores);
  json mean = json::array();
  for (const double v : r.mean) mean.push_back(num(v));
  doc["mean"] = std::move(mean);
  std::vector<bool> valid(r.valid.begin(), r.valid.end());
  doc["valid"] = valid;
  doc["folds"] = r.folds;
  doc["selected_gamma"] = r.selected_gamma;
  return doc.dump(1);
}

CvReport cv_report_from_json(const std::string& text) {
  const io::json doc = io::parse_json(text, "cv report");
  io::check_schema(doc, kSchema, "cv report");
  CvReport r;
  try {
    r.metric = io::require(doc, "metric", "cv report").get<std::string>();
    r.variant = io::require(doc, "variant", "cv report").get<std::string>();
    r.gammas = io::require(doc, "gammas", "cv report").get<std::vector<double>>();
    for (const auto& row : io::require(doc, "scores", "cv report")) {
      std::vector<double> v;
      for (const auto& x : row) v.push_back(from_num(x));
      r.scores.push_back(std::move(v));
    }
    for (const auto& x : io::require(doc, "mean", "cv report")) r.mean.push_back(from_num(x));
    for (const bool b : io::require(doc, "valid", "cv report").get<std::vector<bool>>()) r.valid.push_back(b ? 1 : 0);
    r.folds = io::require(doc, "folds", "cv report").get<std::vector<std::vector<Index>>>();
    r.selected_gamma = io::require(doc, "selected_gamma", "cv report").get<double>();
  } catch (const io::json::exception& e) {
    throw FormatError(std::string("cv report: ") + e.what());
  }
  return r;
}

}  // namespace hvf

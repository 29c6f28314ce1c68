#include "hvf/explore.hpp"
#include "io/json_util.hpp"

#include <iomanip>

namespace hvf {

namespace {
constexpr const char* kSchema = "hvf.dataset/1";
}

std::string dataset_to_json(const Dataset& d) {
  using io::json;
  json doc;
  doc["schema"] = kSchema;
  const auto& m = d.meta;
  doc["meta"] = {{"model", m.model},
                 {"eps_tol_d", m.eps_tol_d},
                 {"eps_achieved", m.eps_achieved},
                 {"c_max_a", m.c_max_a},
                 {"c_max_v", m.c_max_v},
                 {"max_hjb", m.max_hjb},
                 {"eps_history", m.eps_history},
                 {"selected", m.selected},
                 {"quarantined", m.quarantined},
                 {"guess_sources", m.guess_sources},
                 {"complete", m.complete},
                 {"failure", m.failure}};
  json trs = json::array();
  for (const auto& t : d.trajectories) {
    trs.push_back({{"t", t.times},
                   {"x", io::to_json(Mat(t.states.transpose()))},
                   {"p", io::to_json(Mat(t.costates.transpose()))},
                   {"v", io::to_json(t.values)}});
  }
  doc["trajectories"] = std::move(trs);
  return doc.dump(1);
}

Dataset dataset_from_json(const std::string& text) {
  const io::json doc = io::parse_json(text, "dataset");
  io::check_schema(doc, kSchema, "dataset");
  Dataset d;
  try {
    const auto& m = io::require(doc, "meta", "dataset");
    d.meta.model = io::require(m, "model", "dataset.meta").get<std::string>();
    d.meta.eps_tol_d = m.value("eps_tol_d", 0.0);
    d.meta.eps_achieved = m.value("eps_achieved", 0.0);
    d.meta.c_max_a = m.value("c_max_a", 0.0);
    d.meta.c_max_v = m.value("c_max_v", 0.0);
    d.meta.max_hjb = m.value("max_hjb", 0.0);
    d.meta.eps_history = m.value("eps_history", std::vector<double>{});
    d.meta.selected = m.value("selected", std::vector<Index>{});
    d.meta.quarantined = m.value("quarantined", std::vector<Index>{});
    d.meta.guess_sources = m.value("guess_sources", std::vector<std::string>{});
    d.meta.complete = m.value("complete", true);
    d.meta.failure = m.value("failure", std::string());
  } catch (const io::json::exception& e) {
    throw FormatError(std::string("dataset.meta: ") + e.what());
  }
  const auto& trs = io::require(doc, "trajectories", "dataset");
  if (!trs.is_array()) throw FormatError("dataset.trajectories: expected an array");
  for (std::size_t i = 0; i < trs.size(); ++i) {
    const std::string where = "dataset.trajectories[" + std::to_string(i) + "]";
    const auto& j = trs[i];
    Trajectory t;
    const Vec times = io::vec_from_json(io::require(j, "t", where), where + ".t");
    t.times.assign(times.data(), times.data() + times.size());
    t.values = io::vec_from_json(io::require(j, "v", where), where + ".v");
    t.states = io::mat_from_json(io::require(j, "x", where), where + ".x").transpose();
    t.costates = io::mat_from_json(io::require(j, "p", where), where + ".p").transpose();
    const Index K = t.values.size();
    if (static_cast<Index>(t.times.size()) != K || t.states.cols() != K || t.costates.cols() != K ||
        t.states.rows() != t.costates.rows()) {
      throw FormatError(where + ": inconsistent array lengths");
    }
    d.trajectories.push_back(std::move(t));
  }
  return d;
}

void save_dataset(const Dataset& d, const std::string& path) { io::write_file(path, dataset_to_json(d)); }

Dataset load_dataset(const std::string& path) { return dataset_from_json(io::read_file(path)); }

std::string dataset_csv(const Dataset& d) {
  std::ostringstream os;
  os << std::setprecision(17);
  const Index n = d.trajectories.empty() ? 0 : d.trajectories.front().states.rows();
  os << "trajectory,t";
  for (Index k = 0; k < n; ++k) os << ",x_" << k + 1;
  os << ",v";
  for (Index k = 0; k < n; ++k) os << ",dv_" << k + 1;
  os << '\n';
  for (std::size_t i = 0; i < d.trajectories.size(); ++i) {
    const auto& t = d.trajectories[i];
    for (Index j = 0; j < t.size(); ++j) {
      os << i << ',' << t.times[static_cast<std::size_t>(j)];
      for (Index k = 0; k < n; ++k) os << ',' << t.states(k, j);
      os << ',' << t.values(j);
      for (Index k = 0; k < n; ++k) os << ',' << t.costates(k, j);
      os << '\n';
    }
  }
  return os.str();
}

}  // namespace hvf

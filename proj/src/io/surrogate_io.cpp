#include "hvf/hermite.hpp"
#include "io/json_util.hpp"

namespace hvf {

namespace {
constexpr const char* kSchema = "hvf.surrogate/1";
}

std::string surrogate_to_json(const Surrogate& s) {
  using io::json;
  json doc;
  doc["schema"] = kSchema;
  doc["variant"] = to_string(s.variant());
  doc["kernel"] = {{"family", s.kernel_spec().family},
                   {"dim", s.kernel_spec().dim},
                   {"gamma", s.kernel_spec().gamma},
                   {"structured", s.kernel_spec().structured}};
  doc["centers"] = io::to_json(Mat(s.centers().transpose()));
  doc["alpha"] = io::to_json(s.coefficients().alphas);
  doc["beta"] = io::to_json(Mat(s.coefficients().betas.transpose()));
  doc["Q"] = s.Q() ? io::to_json(*s.Q()) : json(nullptr);
  doc["fit"] = {{"cg_residual", s.fit_info().cg_residual},
                {"cg_iterations", s.fit_info().cg_iterations},
                {"nugget", s.fit_info().nugget}};
  return doc.dump(1);
}

Surrogate surrogate_from_json(const std::string& text) {
  const io::json doc = io::parse_json(text, "surrogate");
  io::check_schema(doc, kSchema, "surrogate");
  const auto& k = io::require(doc, "kernel", "surrogate");
  KernelSpec spec;
  try {
    spec.family = io::require(k, "family", "surrogate.kernel").get<std::string>();
    spec.dim = io::require(k, "dim", "surrogate.kernel").get<Index>();
    spec.gamma = io::require(k, "gamma", "surrogate.kernel").get<double>();
    spec.structured = io::require(k, "structured", "surrogate.kernel").get<bool>();
  } catch (const io::json::type_error& e) {
    throw FormatError(std::string("surrogate.kernel: ") + e.what());
  }
  const Variant variant = variant_from_string(io::require(doc, "variant", "surrogate").get<std::string>());
  const Mat centers = io::mat_from_json(io::require(doc, "centers", "surrogate"), "surrogate.centers", spec.dim).transpose();
  HermiteCoefficients c;
  c.alphas = io::vec_from_json(io::require(doc, "alpha", "surrogate"), "surrogate.alpha");
  c.betas = io::mat_from_json(io::require(doc, "beta", "surrogate"), "surrogate.beta", spec.dim).transpose();
  std::optional<Mat> Q;
  if (doc.contains("Q") && !doc["Q"].is_null()) Q = io::mat_from_json(doc["Q"], "surrogate.Q");
  FitInfo info;
  if (doc.contains("fit")) {
    info.cg_residual = doc["fit"].value("cg_residual", 0.0);
    info.cg_iterations = doc["fit"].value("cg_iterations", 0);
    info.nugget = doc["fit"].value("nugget", 0.0);
  }
  try {
    return Surrogate(spec, centers, std::move(c), variant, std::move(Q), info);
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("surrogate: ") + e.what());
  }
}

void save_surrogate(const Surrogate& s, const std::string& path) {
  io::write_file(path, surrogate_to_json(s));
}

Surrogate load_surrogate(const std::string& path) { return surrogate_from_json(io::read_file(path)); }

}  // namespace hvf

// Command-line front end: explore | cv | fit | evaluate | simulate.
#include "hvf/cli.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace hvf;

namespace {

struct Common {
  std::string config;
  std::string in;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  f << text;
  if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

std::string sibling(const std::string& path, const std::string& suffix) {
  std::filesystem::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

void require_file(const std::string& path, const std::string& what) {
  if (!std::filesystem::exists(path)) throw std::runtime_error(what + " '" + path + "' does not exist");
}

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.threads) {
    if (*c.threads < 1) throw ConfigError("--threads must be at least 1");
    cfg.threads = *c.threads;
  }
  return cfg;
}

std::string pick(const std::string& given, const std::string& fallback) { return given.empty() ? fallback : given; }

void summary(const std::string& json_line) { std::cout << json_line << std::endl; }

Vec parse_vector(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) v.push_back(std::stod(item));
  return Eigen::Map<Vec>(v.data(), static_cast<Index>(v.size()));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel value-function surrogates for optimal feedback control"};
  app.require_subcommand(1);
  Common c;

  auto common = [&c](CLI::App* sub) {
    sub->add_option("--config", c.config, "experiment configuration (JSON)");
    sub->add_option("--in", c.in, "input artifact");
    sub->add_option("--out", c.out, "output artifact");
    sub->add_option("--seed", c.seed, "override the configured seed");
    sub->add_option("--threads", c.threads, "worker threads");
  };

  auto* explore = app.add_subcommand("explore", "greedy exploration, writes a dataset");
  common(explore);
  bool testset = false;
  explore->add_flag("--test", testset, "write the geometric-greedy test set instead");

  auto* cv = app.add_subcommand("cv", "cross-validate the kernel parameter");
  common(cv);

  auto* fit = app.add_subcommand("fit", "Hermite VKOGA fit, writes a surrogate and its trace");
  common(fit);
  std::string cv_path, variant_name;
  std::optional<double> gamma;
  fit->add_option("--cv", cv_path, "take gamma from a cv report");
  fit->add_option("--gamma", gamma, "kernel parameter");
  fit->add_option("--variant", variant_name, "plain or structured");

  auto* evaluate = app.add_subcommand("evaluate", "closed-loop evaluation on a test set");
  common(evaluate);
  std::string surrogate_path, curves_data;
  bool baseline = false;
  std::optional<double> gamma_plain, gamma_structured;
  evaluate->add_option("--surrogate", surrogate_path, "surrogate file");
  evaluate->add_flag("--baseline", baseline, "evaluate the quadratic baseline");
  evaluate->add_option("--curves", curves_data, "training dataset; writes error-vs-centers curves");
  evaluate->add_option("--gamma-plain", gamma_plain);
  evaluate->add_option("--gamma-structured", gamma_structured);

  auto* simulate = app.add_subcommand("simulate", "single closed-loop run");
  common(simulate);
  std::string x0_text;
  bool sim_baseline = false;
  std::string sim_surrogate;
  simulate->add_option("--x0", x0_text, "initial state, comma separated")->required();
  simulate->add_option("--surrogate", sim_surrogate, "surrogate file");
  simulate->add_flag("--baseline", sim_baseline, "use the quadratic baseline");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << error_block("", "UsageError", e.what()) << std::endl;
    return 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    ExperimentConfig cfg = load(c);

    if (command == "explore") {
      if (testset) {
        const std::string out = pick(c.out, cfg.paths.testset);
        const Dataset d = cmd_testset(cfg);
        save_dataset(d, out);
        nlohmann::json s = {{"command", "explore"}, {"test_states", d.trajectories.size()},
                            {"max_hjb", d.meta.max_hjb}, {"out", out}};
        summary(s.dump());
        return 0;
      }
      const std::string out = pick(c.out, cfg.paths.dataset);
      Dataset d;
      std::string failure;
      try {
        d = cmd_explore(cfg);
      } catch (const ExplorationError& e) {
        d = e.partial();
        d.meta.complete = false;
        d.meta.failure = e.what();
        failure = e.what();
      }
      save_dataset(d, out);
      write_text(sibling(out, ".csv"), dataset_csv(d));
      nlohmann::json s = {{"command", "explore"},
                          {"trajectories", d.trajectories.size()},
                          {"samples", d.samples()},
                          {"eps_achieved", d.meta.eps_achieved},
                          {"max_hjb", d.meta.max_hjb},
                          {"quarantined", d.meta.quarantined.size()},
                          {"complete", d.meta.complete},
                          {"out", out}};
      summary(s.dump());
      if (!failure.empty()) {
        std::cerr << error_block(command, "ExplorationError", failure) << std::endl;
        return 1;
      }
      return 0;
    }

    if (command == "cv") {
      const std::string in = pick(c.in, cfg.paths.dataset);
      require_file(in, "dataset");
      const std::string out = pick(c.out, cfg.paths.cv);
      const CvReport r = cmd_cv(cfg, load_dataset(in));
      write_text(out, cv_report_to_json(r));
      nlohmann::json s = {{"command", "cv"}, {"selected_gamma", r.selected_gamma}, {"out", out}};
      summary(s.dump());
      return 0;
    }

    if (command == "fit") {
      const std::string in = pick(c.in, cfg.paths.dataset);
      require_file(in, "dataset");
      const std::string out = pick(c.out, cfg.paths.surrogate);
      if (!variant_name.empty()) cfg.variant = variant_from_string(variant_name);
      if (!cv_path.empty()) {
        require_file(cv_path, "cv report");
        std::ifstream f(cv_path);
        std::stringstream ss;
        ss << f.rdbuf();
        cfg.gamma = cv_report_from_json(ss.str()).selected_gamma;
      }
      if (gamma) cfg.gamma = *gamma;
      std::optional<VkogaResult> fitted;
      try {
        fitted = cmd_fit(cfg, load_dataset(in));
      } catch (const VkogaError& e) {
        write_text(sibling(out, ".trace.csv"), trace_csv(e.trace()));
        throw;
      }
      const VkogaResult& r = *fitted;
      save_surrogate(r.surrogate, out);
      write_text(sibling(out, ".trace.csv"), trace_csv(r.trace));
      nlohmann::json s = {{"command", "fit"},
                          {"variant", to_string(cfg.variant)},
                          {"gamma", cfg.gamma},
                          {"centers", r.surrogate.num_centers()},
                          {"final_residual", r.trace.final_residual},
                          {"stop_reason", r.trace.stop_reason},
                          {"out", out}};
      summary(s.dump());
      return 0;
    }

    if (command == "evaluate") {
      const std::string in = pick(c.in, cfg.paths.testset);
      require_file(in, "test set");
      const std::string out = pick(c.out, cfg.paths.report);
      const Dataset test = load_dataset(in);
      if (!curves_data.empty()) {
        require_file(curves_data, "dataset");
        const auto rows = cmd_curves(cfg, load_dataset(curves_data), test, gamma_plain.value_or(cfg.gamma),
                                     gamma_structured.value_or(cfg.gamma));
        write_text(out, curves_csv(rows));
        summary(nlohmann::json({{"command", "evaluate"}, {"curves", rows.size()}, {"out", out}}).dump());
        return 0;
      }
      std::optional<Surrogate> s;
      if (!baseline) {
        const std::string sp = pick(surrogate_path, cfg.paths.surrogate);
        require_file(sp, "surrogate");
        s = load_surrogate(sp);
      }
      const EvaluationReport r = cmd_evaluate(cfg, s, test);
      write_text(out, evaluation_to_json(r));
      write_text(sibling(out, ".csv"), evaluation_csv(r));
      nlohmann::json js = {{"command", "evaluate"}, {"controller", r.controller}, {"rows", r.rows.size()},
                           {"unstable", r.unstable}, {"out", out}};
      js["mrl2"] = std::isfinite(r.mrl2) ? nlohmann::json(r.mrl2) : nlohmann::json(nullptr);
      js["max_hjb"] = r.max_hjb;
      summary(js.dump());
      return 0;
    }

    // simulate
    const ModelPtr model = build_model(cfg.model);
    const Vec x0 = parse_vector(x0_text);
    if (x0.size() != model->state_dim()) throw std::invalid_argument("--x0 has the wrong dimension");
    ClosedLoopRun run;
    if (sim_baseline) {
      run = simulate_quadratic(*model, model_quadratic(*model), x0, cfg.simulation);
    } else {
      const std::string sp = pick(sim_surrogate, cfg.paths.surrogate);
      require_file(sp, "surrogate");
      run = simulate_feedback(*model, load_surrogate(sp), x0, cfg.simulation);
    }
    const std::string out = pick(c.out, "closed_loop.csv");
    write_text(out, closed_loop_csv(run));
    nlohmann::json s = {{"command", "simulate"}, {"cost", run.total_cost()}, {"unstable", run.unstable},
                        {"steps", run.times.size()}, {"out", out}};
    summary(s.dump());
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << error_block(command, "ConfigError", e.what()) << std::endl;
  } catch (const FormatError& e) {
    std::cerr << error_block(command, "FormatError", e.what()) << std::endl;
  } catch (const VkogaError& e) {
    std::cerr << error_block(command, "VkogaError", e.what()) << std::endl;
  } catch (const NumericsError& e) {
    std::cerr << error_block(command, "NumericsError", e.what()) << std::endl;
  } catch (const std::exception& e) {
    std::cerr << error_block(command, "Error", e.what()) << std::endl;
  }
  return 1;
}

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "tsq/analytics.hpp"
#include "tsq/common.hpp"
#include "tsq/harness.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) throw tsq::ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out.good()) throw tsq::ConfigError("cannot write " + path.string());
  out << text;
  if (text.empty() || text.back() != '\n') out << '\n';
}

int cmd_run(const std::string& config_path, const std::string& out_dir) {
  auto cfg = tsq::harness::ScenarioConfig::from_json(slurp(config_path));
  tsq::harness::RunMetrics m = tsq::harness::run_scenario(cfg);
  std::cout << m.to_json() << std::endl;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_file(std::filesystem::path(out_dir) / "metrics.json", m.to_json());
    std::ofstream csv(std::filesystem::path(out_dir) / "epochs.csv");
    m.write_csv(csv);
  }
  return m.all_accepted() ? 0 : 1;
}

int cmd_sweep(const std::string& grid_path, const std::string& out_dir) {
  tsq::harness::run_sweep(slurp(grid_path), out_dir);
  std::cout << "sweep written to " << out_dir << std::endl;
  return 0;
}

int cmd_attack(const std::string& config_path, const std::string& script_path, uint64_t trials,
               const std::string& out_dir) {
  auto cfg = tsq::harness::ScenarioConfig::from_json(slurp(config_path));
  auto script = tsq::adv::parse_attack(slurp(script_path));
  tsq::harness::TrialStats st = tsq::harness::attack_trials(cfg, script, trials);
  std::cout << st.to_json() << std::endl;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_file(std::filesystem::path(out_dir) / "trials.json", st.to_json());
  }
  return 0;
}

int cmd_analyze(const std::string& params_path) {
  nlohmann::json p;
  try {
    p = nlohmann::json::parse(slurp(params_path));
  } catch (const nlohmann::json::exception& e) {
    throw tsq::ConfigError(std::string("analysis parameters are not valid JSON: ") + e.what());
  }
  tsq::require_config(p.is_object(), "analysis parameters must be a JSON object");

  namespace an = tsq::analytics;
  nlohmann::json out;
  if (p.contains("det_range")) {
    const auto& q = p["det_range"];
    out["det_range"] = an::det_prob_range(q.at("n").get<uint32_t>(), q.at("lk").get<uint16_t>(),
                                          q.at("lh").get<uint16_t>(),
                                          q.at("delta").get<uint32_t>());
  }
  if (p.contains("det_skyline")) {
    const auto& q = p["det_skyline"];
    out["det_skyline"] =
        an::det_prob_skyline(q.at("mu").get<uint32_t>(), q.at("xi1").get<uint32_t>(),
                             q.at("lk").get<uint16_t>(), q.at("lh").get<uint16_t>());
  }
  if (p.contains("cost_range")) {
    const auto& q = p["cost_range"];
    an::RangeCostParams rp;
    rp.n = q.at("n").get<uint32_t>();
    rp.w = q.at("w").get<uint32_t>();
    rp.d = q.at("d").get<uint32_t>();
    rp.y = q.at("y").get<double>();
    rp.p_dtob = q.value("p_dtob", 1.0);
    rp.a = q.at("a").get<double>();
    rp.lh = q.value("lh", 80);
    rp.lp = q.value("lP", 1000);
    an::RangeCost c = an::comm_cost_range(rp);
    out["cost_range"] = {{"proofs", c.proofs}, {"buckets", c.buckets}, {"reply", c.reply},
                         {"query", c.query},   {"total", c.total}};
  }
  if (p.contains("cost_skyline")) {
    const auto& q = p["cost_skyline"];
    an::SkylineCostParams sp;
    sp.n = q.at("n").get<uint32_t>();
    sp.mu = q.at("mu").get<uint32_t>();
    sp.xi1 = q.at("xi1").get<uint32_t>();
    sp.w = q.at("w").get<uint32_t>();
    sp.d = q.at("d").get<uint32_t>();
    sp.y = q.at("y").get<double>();
    sp.p_dtob = q.value("p_dtob", 1.0);
    sp.p_q = q.at("p_q").get<double>();
    sp.lh = q.value("lh", 80);
    sp.ld = q.value("ld", 32);
    sp.lid = q.value("lid", 16);
    an::SkylineCost c = an::comm_cost_skyline(sp);
    out["cost_skyline"] = {{"c1", c.c1}, {"c2", c.c2}, {"c3", c.c3}, {"total", c.total}};
  }
  if (p.contains("cost_baseline")) {
    const auto& q = p["cost_baseline"];
    an::BaselineCostParams bp;
    bp.n = q.at("n").get<uint32_t>();
    bp.w = q.at("w").get<uint32_t>();
    bp.d = q.at("d").get<uint32_t>();
    bp.y = q.at("y").get<double>();
    bp.p_dtob = q.value("p_dtob", 1.0);
    bp.expected_senders = q.at("expected_senders").get<double>();
    bp.lh = q.value("lh", 80);
    bp.ld = q.value("ld", 32);
    bp.lid = q.value("lid", 16);
    out["cost_baseline"] = an::comm_cost_baseline(bp);
  }
  if (p.contains("witnesses")) {
    const auto& q = p["witnesses"];
    out["witnesses"] = an::expected_witnesses(q.at("n").get<uint32_t>(),
                                              q.at("xi2").get<uint32_t>(),
                                              q.at("lh").get<uint16_t>());
  }
  if (p.contains("p1")) {
    const auto& q = p["p1"];
    out["p1"] = an::reporter_capture_prob(q.at("gs").get<uint32_t>(), q.at("xi1").get<uint32_t>(),
                                          q.at("xi3").get<uint32_t>(), q.at("x").get<uint32_t>());
  }
  if (p.contains("p2")) {
    const auto& q = p["p2"];
    out["p2"] = an::skyline_containment_prob(q.at("y").get<double>(), q.at("n_g").get<double>(),
                                             q.at("s").get<double>());
  }
  if (p.contains("drop")) {
    const auto& q = p["drop"];
    out["drop"] = an::skyline_drop_prob(q.at("gs").get<uint32_t>(), q.at("xi1").get<uint32_t>(),
                                        q.at("xi3").get<uint32_t>(), q.at("x").get<uint32_t>(),
                                        q.at("y").get<double>(), q.at("n_g").get<double>(),
                                        q.at("s").get<double>());
  }
  tsq::require_config(!out.empty(), "no recognized analysis block in the parameter file");
  std::cout << out.dump(2) << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tiered sensor cell query simulator and analytics"};
  app.require_subcommand(1);

  std::string config_path, out_dir, grid_path, script_path, params_path;
  uint64_t trials = 1000;

  auto* run = app.add_subcommand("run", "Run one scenario and report metrics");
  run->add_option("--config", config_path, "Scenario JSON")->required();
  run->add_option("--out", out_dir, "Output directory for metrics.json / epochs.csv");

  auto* sweep = app.add_subcommand("sweep", "Run a parameter grid");
  sweep->add_option("--grid", grid_path, "Grid JSON with base scenario and axes")->required();
  sweep->add_option("--out", out_dir, "Output directory")->required();

  auto* attack = app.add_subcommand("attack", "Run adversarial trials");
  attack->add_option("--config", config_path, "Scenario JSON")->required();
  attack->add_option("--script", script_path, "Attack script JSON")->required();
  attack->add_option("--trials", trials, "Trial count");
  attack->add_option("--out", out_dir, "Output directory");

  auto* analyze = app.add_subcommand("analyze", "Evaluate closed-form models");
  analyze->add_option("--params", params_path, "Analysis parameter JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, out_dir);
    if (sweep->parsed()) return cmd_sweep(grid_path, out_dir);
    if (attack->parsed()) return cmd_attack(config_path, script_path, trials, out_dir);
    if (analyze->parsed()) return cmd_analyze(params_path);
  } catch (const tsq::ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return 2;
  } catch (const tsq::InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << std::endl;
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}

#include "ivmono/dgp.hpp"
#include "ivmono/error.hpp"
#include "ivmono/io.hpp"
#include "ivmono/pipeline.hpp"
#include "ivmono/reports.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fmt/format.h>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace ivmono;
using io::json;

namespace {

struct DesignArgs
{
  std::string preset;
  std::string config;
  std::size_t k = 2;
};

struct EstimateArgs
{
  std::string data;
  std::string labels;
  std::size_t k = 0;
  std::string pairs;
  std::string tau;
  std::size_t grid_nodes = 512;
  double trim = 0.01;
  double eta = 0.01;
};

void
add_design_options(CLI::App* cmd, DesignArgs& a)
{
  cmd->add_option("--preset", a.preset, "example_I, example_II, mto or shared_sign");
  cmd->add_option("--config", a.config, "JSON design config");
  cmd->add_option("--k", a.k, "number of non-baseline treatments for presets")->check(CLI::PositiveNumber);
}

void
add_estimate_options(CLI::App* cmd, EstimateArgs& a)
{
  cmd->add_option("--labels", a.labels, "instrument labels in order, comma separated");
  cmd->add_option("--pairs", a.pairs, "monotonicity pairs, e.g. \"c:a,b:c\"");
  cmd->add_option("--tau", a.tau, "tau grid: list \"0.1,0.5\" or range \"0.05:0.95:0.05\"");
  cmd->add_option("--grid-nodes", a.grid_nodes, "map grid nodes")->check(CLI::PositiveNumber);
  cmd->add_option("--trim", a.trim, "support trim fraction")->check(CLI::Range(0.0, 0.5));
  cmd->add_option("--eta", a.eta, "weak pair threshold")->check(CLI::NonNegativeNumber);
}

std::optional<DgpConfig>
load_design(const DesignArgs& a)
{
  if (!a.config.empty()) {
    json j = io::read_json(a.config);
    if (!a.preset.empty())
      j["preset"] = a.preset;
    if (!j.contains("k"))
      j["k"] = a.k;
    return io::config_from_json(j);
  }
  if (!a.preset.empty()) {
    DgpConfig c = preset(a.preset, a.k);
    c.validate();
    return c;
  }
  return std::nullopt;
}

std::vector<std::string>
split_labels(const std::string& text)
{
  std::vector<std::string> out;
  std::size_t start = 0;
  while (!text.empty()) {
    std::size_t end = text.find(',', start);
    out.push_back(text.substr(start, end == std::string::npos ? std::string::npos : end - start));
    if (end == std::string::npos)
      break;
    start = end + 1;
  }
  return out;
}

EstimateOptions
make_options(const EstimateArgs& a, const std::vector<std::string>& labels)
{
  EstimateOptions o;
  o.trim_fraction = a.trim;
  o.eta = a.eta;
  o.grid_nodes = a.grid_nodes;
  if (!a.tau.empty())
    o.tau_grid = io::parse_tau_grid(a.tau);
  if (!a.pairs.empty())
    o.pairs = io::parse_pairs(a.pairs, labels);
  return o;
}

Dataset
load_data(const EstimateArgs& a, const std::optional<DgpConfig>& design)
{
  std::vector<std::string> labels = split_labels(a.labels);
  std::size_t k = a.k;
  if (labels.empty() && design)
    labels = design->labels;
  if (k == 0 && design)
    k = design->k;
  return io::read_dataset(a.data, labels, k);
}

json
manifest(const std::string& command, const json& config, std::optional<std::uint64_t> seed,
         const std::vector<std::string>& files)
{
  json m;
  m["tool"] = "ivmono";
  m["version"] = io::tool_version;
  m["command"] = command;
  m["config"] = config;
  m["config_hash"] = io::hash_hex(config);
  m["seed"] = seed ? json(*seed) : json(nullptr);
  m["files"] = files;
  return m;
}

fs::path
prepare_out(const std::string& out)
{
  fs::path p(out);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec)
    throw Error(ErrorKind::io_error, fmt::format("cannot create '{}': {}", out, ec.message()));
  return p;
}

} // namespace

int
main(int argc, char** argv)
{
  CLI::App app{ "Counterfactual maps and treatment effects under generalized monotonicity" };
  app.require_subcommand(1);

  DesignArgs sim_design;
  std::size_t sim_n = 10000;
  std::uint64_t sim_seed = 0;
  std::string sim_out;
  bool no_latent = false;
  auto* sim = app.add_subcommand("simulate", "draw a dataset from a structural design");
  add_design_options(sim, sim_design);
  sim->add_option("--n", sim_n, "sample size")->check(CLI::PositiveNumber);
  sim->add_option("--seed", sim_seed, "random seed")->required();
  sim->add_option("--out", sim_out, "output directory")->required();
  sim->add_flag("--no-latent", no_latent, "omit latent.csv");

  DesignArgs est_design;
  EstimateArgs est_args;
  std::string est_out;
  auto* est = app.add_subcommand("estimate", "identify maps and effects from a y,t,z dataset");
  est->add_option("--data", est_args.data, "dataset CSV")->required()->check(CLI::ExistingFile);
  est->add_option("--config", est_design.config, "JSON design config supplying labels and k");
  est->add_option("--k", est_args.k, "number of non-baseline treatments");
  add_estimate_options(est, est_args);
  est->add_option("--out", est_out, "output directory")->required();

  DesignArgs diag_design;
  EstimateArgs diag_args;
  std::string diag_out;
  std::string diag_matrix;
  auto* diag = app.add_subcommand("diagnose", "sign treatments, distinct-sign check and Jacobian sweep");
  diag->add_option("--data", diag_args.data, "dataset CSV")->check(CLI::ExistingFile);
  add_design_options(diag, diag_design);
  diag->add_option("--propensity", diag_matrix,
                   "propensity rows separated by ';', entries by ',', with N(t,1) outcomes");
  add_estimate_options(diag, diag_args);
  diag->add_option("--out", diag_out, "output directory")->required();

  DesignArgs or_design;
  EstimateArgs or_args;
  std::string or_out;
  OracleOptions or_opts;
  auto* orc = app.add_subcommand("oracle", "compare pipeline maps with the closed form and brute-force solvers");
  add_design_options(orc, or_design);
  orc->add_option("--data", or_args.data, "estimate from this dataset instead of the analytic tables")
    ->check(CLI::ExistingFile);
  orc->add_option("--check-points", or_opts.check_points, "anchor values checked against the solvers");
  orc->add_option("--oracle-nodes", or_opts.grid_nodes, "oracle grid nodes per treatment");
  add_estimate_options(orc, or_args);
  orc->add_option("--out", or_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*sim) {
      auto design = load_design(sim_design);
      if (!design)
        throw Error(ErrorKind::config_invalid, "simulate needs --preset or --config");
      design->seed = sim_seed;
      const fs::path out = prepare_out(sim_out);
      const Dataset data = simulate(*design, sim_n, !no_latent);
      std::vector<std::string> files{ "data.csv" };
      io::write_dataset(out / "data.csv", data);
      if (!no_latent) {
        io::write_latent(out / "latent.csv", data);
        files.push_back("latent.csv");
      }
      json cfg = io::config_to_json(*design);
      cfg["n"] = sim_n;
      cfg["latent"] = !no_latent;
      files.push_back("manifest.json");
      io::write_json(out / "manifest.json", manifest("simulate", cfg, sim_seed, files));
      fmt::print("wrote {} rows to {}\n", data.size(), out.string());
      return 0;
    }

    if (*est) {
      const auto design = load_design(est_design);
      const Dataset data = load_data(est_args, design);
      const EstimateOptions options = make_options(est_args, data.labels);
      const fs::path out = prepare_out(est_out);
      const Estimate e = estimate(data, options);
      std::vector<std::string> files{ "report.json" };
      io::write_json(out / "report.json", io::estimate_to_json(e, options));
      if (e.id.maps) {
        io::write_text(out / "maps.csv", io::maps_csv(*e.id.maps));
        io::write_text(out / "qte.csv", io::qte_csv(e.id.qte));
        files.push_back("maps.csv");
        files.push_back("qte.csv");
      }
      json cfg = io::options_to_json(options, data.labels);
      cfg["data"] = fs::path(est_args.data).filename().string();
      cfg["rows"] = data.size();
      files.push_back("manifest.json");
      io::write_json(out / "manifest.json", manifest("estimate", cfg, std::nullopt, files));
      if (e.id.failure) {
        fmt::print(stderr, "{}: {}\n", to_string(*e.id.failure), e.id.failure_message);
        return exit_code_for(*e.id.failure);
      }
      for (const auto& w : e.id.warnings)
        fmt::print(stderr, "warning: {}\n", w);
      fmt::print("report written to {}\n", (out / "report.json").string());
      return 0;
    }

    if (*diag) {
      const auto design = load_design(diag_design);
      DiagnoseInput input;
      std::vector<std::string> labels;
      json cfg;
      if (!diag_args.data.empty()) {
        const Dataset data = load_data(diag_args, design);
        input = diagnose_input_from_data(data, diag_args.trim);
        cfg["data"] = fs::path(diag_args.data).filename().string();
      } else if (!diag_matrix.empty()) {
        const auto entries = parse_matrix(diag_matrix);
        std::vector<OutcomeModel> outcomes;
        for (std::size_t t = 0; t < entries.front().size(); ++t)
          outcomes.push_back({ OutcomeFamily::gaussian, static_cast<double>(t), 1.0 });
        input = diagnose_input_from_propensity(entries, outcomes);
        cfg["propensity"] = diag_matrix;
      } else if (design) {
        input = diagnose_input_from_design(*design);
        cfg["design"] = io::config_to_json(*design);
      } else {
        throw Error(ErrorKind::config_invalid, "diagnose needs --data, --propensity, --preset or --config");
      }
      const EstimateOptions options = make_options(diag_args, input.tables.labels);
      cfg["options"] = io::options_to_json(options, input.tables.labels);
      const fs::path out = prepare_out(diag_out);
      const json report = diagnose_report(input, options);
      io::write_json(out / "diagnose.json", report);
      io::write_json(out / "manifest.json",
                     manifest("diagnose", cfg, std::nullopt, { "diagnose.json", "manifest.json" }));
      if (!report["assumption3"]["satisfied"].get<bool>())
        fmt::print(stderr, "sign treatments are not distinct: {}\n", report["assumption3"]["reason"].get<std::string>());
      fmt::print("report written to {}\n", (out / "diagnose.json").string());
      return 0;
    }

    if (*orc) {
      const auto design = load_design(or_design);
      if (!design)
        throw Error(ErrorKind::config_invalid, "oracle needs --preset or --config");
      std::optional<Dataset> data;
      if (!or_args.data.empty())
        data = load_data(or_args, design);
      const EstimateOptions options = make_options(or_args, design->labels);
      const fs::path out = prepare_out(or_out);
      const json report = oracle_report(*design, options, or_opts, data ? &*data : nullptr);
      io::write_json(out / "oracle.json", report);
      json cfg;
      cfg["design"] = io::config_to_json(*design);
      cfg["options"] = io::options_to_json(options, design->labels);
      cfg["check_points"] = or_opts.check_points;
      cfg["oracle_nodes"] = or_opts.grid_nodes;
      io::write_json(out / "manifest.json", manifest("oracle", cfg, std::nullopt, { "oracle.json", "manifest.json" }));
      if (report.contains("failure")) {
        const auto kind = report["failure"]["kind"].get<std::string>();
        fmt::print(stderr, "{}: {}\n", kind, report["failure"]["message"].get<std::string>());
        return 3;
      }
      fmt::print("all within one grid step: {}\n", report["all_within"].get<bool>() ? "yes" : "no");
      return 0;
    }
  } catch (const Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 4;
  }
  return 0;
}

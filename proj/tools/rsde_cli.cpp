// rsde: experiment runner for reflected SDE schemes.
//
//   rsde simulate  --config exp.json [--out DIR] [--seed N] [--jobs N]
//   rsde skorokhod --input path.csv --domain '{"kind":"half-space",...}' [--y0 a,b] [--out DIR]
//   rsde converge  --config exp.json [--out DIR] [--seed N] [--jobs N]
//   rsde remark4   [--out DIR]
//   rsde --print-config [--config exp.json]
//
// Exit codes: 0 ok, 2 invalid input, 3 scheme failure.

#include "rsde/config.hpp"
#include "rsde/io.hpp"
#include "rsde/rsde.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using rsde::config::json;

namespace {

constexpr int kExitInvalid = 2;
constexpr int kExitScheme = 3;

struct Failure {
  int exit_code;
  json detail;
};

[[noreturn]] void fail(int code, const std::string& kind, const std::string& message,
                       json extra = json::object()) {
  json detail{{"error", kind}, {"message", message}};
  detail.update(extra);
  throw Failure{code, detail};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(kExitInvalid, "ConfigInvalid", "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct LoadedConfig {
  rsde::ExperimentConfig cfg;
  std::string hash;
};

LoadedConfig load_config(const std::string& path, std::optional<std::uint64_t> seed,
                         std::optional<int> jobs, std::optional<std::string> out) {
  const std::string bytes = read_file(path);
  try {
    json j = json::parse(bytes);
    if (seed) j["seed"] = *seed;
    if (out) j["output_dir"] = *out;
    auto cfg = rsde::config::parse_experiment(j);
    if (jobs) cfg.jobs = *jobs;
    std::string hashed = bytes;
    if (seed) hashed += "\nseed=" + std::to_string(*seed);
    return {std::move(cfg), rsde::config::hex64(rsde::config::fnv1a(hashed))};
  } catch (const json::exception& e) {
    fail(kExitInvalid, "ConfigInvalid", e.what());
  } catch (const rsde::Error& e) {
    fail(kExitInvalid, "ConfigInvalid", e.what(), {{"code", rsde::to_string(e.code())}});
  }
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) fail(kExitInvalid, "OutputError", "cannot write " + p.string());
  out << text;
}

std::string path_name(const char* stem, std::size_t i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%05zu.%s", stem, i, ext);
  return buf;
}

int cmd_simulate(const LoadedConfig& lc) {
  const auto& cfg = lc.cfg;
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  const double mesh = cfg.mesh_ladder.back();
  const auto n = static_cast<std::size_t>(cfg.n_paths);
  std::vector<json> meta(n);
  std::vector<std::optional<rsde::Error>> errors(n);
  rsde::parallel_for(n, cfg.worker_count(), [&](std::size_t i) {
    const auto seed = rsde::derive_seed(cfg.seed, i);
    try {
      const auto z = rsde::make_driver(cfg.driver, seed);
      const auto out = rsde::run_scheme(cfg.domain, cfg.coefficient, cfg.x0, z, cfg.scheme_spec(mesh, z));
      std::ostringstream zs, xs;
      rsde::io::write_path_csv(zs, z);
      rsde::io::write_solution_csv(xs, out);
      write_text(dir / path_name("driver", i, "csv"), zs.str());
      write_text(dir / path_name("path", i, "csv"), xs.str());
      meta[i] = rsde::config::run_metadata_json(cfg, mesh, i, seed, out.meta, lc.hash);
    } catch (const rsde::Error& e) {
      errors[i] = e;
    }
  });
  for (std::size_t i = 0; i < n; ++i) {
    if (errors[i]) {
      fail(kExitScheme, rsde::to_string(errors[i]->code()), errors[i]->what(), {{"path_index", i}});
    }
  }
  write_text(dir / "runs.json", json(meta).dump(2) + "\n");
  std::cout << "simulate: " << n << " path(s) written to " << dir.string() << "\n";
  return 0;
}

int cmd_converge(const LoadedConfig& lc) {
  const auto& cfg = lc.cfg;
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  const auto table = rsde::convergence_study(cfg);
  std::ostringstream csv;
  rsde::io::write_rate_table_csv(csv, table);
  write_text(dir / "rate_table.csv", csv.str());
  write_text(dir / "rate_table.json", rsde::config::rate_table_json(table, lc.hash).dump(2) + "\n");
  std::cout << csv.str();
  if (table.fit.defined()) std::cout << "slope " << table.fit.slope << " (R^2 " << table.fit.r2 << ")\n";
  else std::cout << "slope undefined\n";
  return 0;
}

int cmd_skorokhod(const std::string& input, const std::string& domain_arg,
                  const std::vector<double>& y0_arg, const std::string& out_dir) {
  rsde::GridPath y;
  std::optional<rsde::Domain> domain;
  try {
    std::ifstream in(input);
    if (!in) fail(kExitInvalid, "ParseError", "cannot read " + input);
    y = rsde::io::read_path_csv(in);
    const std::string text = fs::exists(domain_arg) ? read_file(domain_arg) : domain_arg;
    domain = rsde::config::parse_domain(json::parse(text));
  } catch (const json::exception& e) {
    fail(kExitInvalid, "ParseError", std::string("domain: ") + e.what());
  } catch (const rsde::Error& e) {
    fail(kExitInvalid, rsde::to_string(e.code()), e.what());
  }
  rsde::Vec y0 = y.values.front();
  if (!y0_arg.empty()) {
    y0 = Eigen::Map<const rsde::Vec>(y0_arg.data(), static_cast<Eigen::Index>(y0_arg.size()));
  }
  try {
    const auto sol = rsde::solve_skorokhod(*domain, y, y0);
    // variation bounds are checked against the shifted input actually solved
    rsde::GridPath shifted = y;
    for (auto& v : shifted.values) v += y0 - y.values.front();
    const rsde::Interval whole{0.0, y.horizon()};
    const auto rep = rsde::check_lemma1(*domain, shifted, sol, std::span(&whole, 1));
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    std::ostringstream csv;
    rsde::io::write_solution_csv(csv, sol);
    write_text(dir / "solution.csv", csv.str());
    write_text(dir / "lemma1.json", rsde::config::lemma1_json(rep).dump(2) + "\n");
    std::cout << "skorokhod: " << sol.pushes << " push(es), |k| = " << sol.k_variation.back()
              << ", lemma1 " << (rep.all_hold() ? "holds" : "VIOLATED") << "\n";
  } catch (const rsde::Error& e) {
    const int code = e.code() == rsde::ErrorCode::DimensionMismatch ||
                             e.code() == rsde::ErrorCode::StartOutsideDomain
                         ? kExitInvalid
                         : kExitScheme;
    fail(code, rsde::to_string(e.code()), e.what());
  }
  return 0;
}

int cmd_remark4(const std::string& out_dir) {
  const std::vector<double> meshes{1.0 / 4, 1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64};
  const std::vector<int> substeps{64, 128, 256, 512, 1024};
  const auto rep = rsde::remark4_report(rsde::Remark4Setup::disk(), meshes, substeps);
  const auto oracle = rsde::disk_gudermannian_endpoint();
  std::cout << "remark4: unit disk, f = I, x0 = (1,0), single jump (0,1) at t = 1\n";
  std::cout << "  mesh       substeps  bar endpoint                  gap\n";
  for (const auto& r : rep.rows) {
    char line[160];
    std::snprintf(line, sizeof line, "  %-10.6g %-9d (%.6f, %.6f)  %.6f\n", r.mesh, r.substeps,
                  r.bar_endpoint[0], r.bar_endpoint[1], r.gap);
    std::cout << line;
  }
  char summary[320];
  std::snprintf(summary, sizeof summary,
                "  projection endpoint (%.6f, %.6f)\n  reflected-ODE oracle (%.6f, %.6f)\n"
                "  gap %.6f, spread across meshes %.2e, integrator tol %.2e\n"
                "  gap stable: %s, gap significant: %s\n",
                rep.projection_endpoint[0], rep.projection_endpoint[1], oracle[0], oracle[1], rep.gap,
                rep.gap_spread, rep.integrator_tol, rep.gap_stable ? "yes" : "no",
                rep.gap_significant ? "yes" : "no");
  std::cout << summary;
  json j = rsde::config::remark4_json(rep);
  j["oracle_endpoint"] = rsde::config::from_vec(oracle);
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  write_text(dir / "remark4.json", j.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reflected SDE schemes: simulation, Skorokhod solver, convergence studies"};
  std::string config_path;
  bool print_config = false;
  app.add_option("--config", config_path, "experiment config (JSON)");
  app.add_flag("--print-config", print_config, "print the fully explicit config and exit");

  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> out;
  std::string out_dir = "out";

  auto add_run_flags = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--out", out, "output directory (overrides output_dir)");
    sub->add_option("--seed", seed, "experiment seed (overrides seed)");
    sub->add_option("--jobs", jobs, "worker threads (default: all cores)")->check(CLI::PositiveNumber);
  };
  auto* simulate = app.add_subcommand("simulate", "one scheme run per path index");
  add_run_flags(simulate);
  auto* converge = app.add_subcommand("converge", "convergence study against a reference");
  add_run_flags(converge);

  auto* skorokhod = app.add_subcommand("skorokhod", "solve the discrete Skorokhod problem for a path CSV");
  std::string input, domain_arg;
  std::vector<double> y0;
  skorokhod->add_option("--input", input, "path CSV (t,z1..zd,is_jump)")->required();
  skorokhod->add_option("--domain", domain_arg, "domain JSON or a file containing it")->required();
  skorokhod->add_option("--y0", y0, "starting point (default: first row)")->delimiter(',');
  skorokhod->add_option("--out", out_dir, "output directory");

  auto* remark4 = app.add_subcommand("remark4", "jump counterexample for reflected Wong-Zakai");
  remark4->add_option("--out", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInvalid;
  }

  try {
    if (print_config) {
      json j = config_path.empty() ? rsde::config::default_config_json() : json::parse(read_file(config_path));
      std::cout << rsde::config::experiment_json(rsde::config::parse_experiment(j)).dump(2) << "\n";
      return 0;
    }
    if (simulate->parsed()) return cmd_simulate(load_config(config_path, seed, jobs, out));
    if (converge->parsed()) return cmd_converge(load_config(config_path, seed, jobs, out));
    if (skorokhod->parsed()) return cmd_skorokhod(input, domain_arg, y0, out_dir);
    if (remark4->parsed()) return cmd_remark4(out_dir);
    std::cerr << app.help();
    return kExitInvalid;
  } catch (const Failure& f) {
    std::cerr << f.detail.dump() << "\n";
    return f.exit_code;
  } catch (const json::exception& e) {
    std::cerr << json{{"error", "ConfigInvalid"}, {"message", e.what()}}.dump() << "\n";
    return kExitInvalid;
  } catch (const rsde::Error& e) {
    std::cerr << json{{"error", rsde::to_string(e.code())}, {"message", e.what()}}.dump() << "\n";
    return e.code() == rsde::ErrorCode::ParseError || e.code() == rsde::ErrorCode::InvalidArgument
               ? kExitInvalid
               : kExitScheme;
  }
}

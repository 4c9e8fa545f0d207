// nmpec — batch driver: validate, run, bounds, sweep.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <json.hpp>

#include "nmpec/config.hpp"
#include "nmpec/parallel.hpp"
#include "nmpec/pec.hpp"
#include "nmpec/qem.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nmpec;

namespace {

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
    std::string out;
};

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string brief(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string file_stem(const std::string& name) {
    std::string s;
    for (char c : name) s += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    return s.empty() ? "observable" : s;
}

ExperimentConfig load(const Options& opt) {
    ExperimentConfig cfg = load_config(opt.config);
    if (opt.seed) {
        cfg.run.seed = *opt.seed;
        cfg.canonical["run"]["seed"] = *opt.seed;
    }
    cfg.run.threads = opt.threads;
    if (!opt.out.empty()) cfg.output_directory = opt.out;
    return cfg;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
    f << text;
}

fs::path prepare_output(const ExperimentConfig& cfg) {
    const fs::path dir(cfg.output_directory);
    fs::create_directories(dir);
    return dir;
}

bool wants(const ExperimentConfig& cfg, const std::string& format) {
    return std::find(cfg.formats.begin(), cfg.formats.end(), format) != cfg.formats.end();
}

json versions() {
    json v;
    v["nmpec"] = NMPEC_VERSION;
    v["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                 std::to_string(EIGEN_MINOR_VERSION);
    v["nlohmann_json"] = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                         "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH);
    v["cli11"] = CLI11_VERSION;
    v["compiler"] = __VERSION__;
    return v;
}

json bounds_json(const BoundValues& b) {
    return {{"G_env", b.env.g_b1},
            {"G_b2", b.env.g_b2},
            {"theta", b.env.theta},
            {"h_norm", b.h_norm},
            {"one_step", b.one_step},
            {"bias", b.bias},
            {"gamma_constant", b.gamma_constant},
            {"gamma_bound", b.gamma_bound},
            {"gamma_tot", b.gamma_tot},
            {"theorem_samples", b.theorem_samples},
            {"required_samples", b.required_samples},
            {"dt_prescription", std::isinf(b.dt_prescription) ? json("inf") : json(b.dt_prescription)}};
}

int cmd_validate(const Options& opt) {
    const ExperimentConfig cfg = load(opt);
    const RunConfig& run = cfg.run;
    std::cout << "valid: " << opt.config << "\n";
    std::cout << "  qubits   " << run.model.n() << "\n";
    std::cout << "  lambda^2 " << brief(run.model.lambda2()) << "\n";
    if (run.bath.empty()) {
        std::cout << "  G_env    0\n  theta    inf\n";
    } else {
        const EnvParams env = env_params(run.bath);
        std::cout << "  G_env    " << brief(env.g_b1) << "\n";
        std::cout << "  theta    " << brief(env.theta) << "\n";
    }
    std::cout << "  M        " << run.steps() << "\n";
    std::cout << "  poles    " << run.bath.poles().size() << "\n";
    if (cfg.has_sweep) std::cout << "  cutoffs  " << cfg.cutoffs.size() << "\n";
    std::cout << "  hash     " << config_hash(cfg) << "\n";
    return 0;
}

int cmd_run(const Options& opt) {
    const auto start = std::chrono::steady_clock::now();
    const ExperimentConfig cfg = load(opt);
    const fs::path dir = prepare_output(cfg);
    const EstimateReport rep = estimate(cfg.run);
    const bool noisy = !rep.noisy.empty();
    const bool mitigated = !rep.mitigated.empty();

    json outputs = json::array();
    if (wants(cfg, "csv")) {
        for (std::size_t o = 0; o < rep.names.size(); ++o) {
            std::ostringstream os;
            os << "t,ideal,noisy_mean,noisy_stderr,mitigated_mean,mitigated_stderr,gamma_tot\n";
            for (std::size_t k = 0; k < rep.times.size(); ++k) {
                os << num(rep.times[k]) << ',' << num(rep.ideal[o][k]) << ',';
                if (noisy) os << num(rep.noisy[o].mean[k]) << ',' << num(rep.noisy[o].stderr_[k]);
                else os << ',';
                os << ',';
                if (mitigated) os << num(rep.mitigated[o].mean[k]) << ',' << num(rep.mitigated[o].stderr_[k]);
                else os << ',';
                os << ',' << num(rep.gamma_tot[k]) << '\n';
            }
            const std::string file = file_stem(rep.names[o]) + ".csv";
            write_file(dir / file, os.str());
            outputs.push_back(file);
        }
    }
    if (wants(cfg, "json") && mitigated) {
        write_file(dir / "plans.json", plans_to_json(rep.plans));
        outputs.push_back("plans.json");
    }
    write_file(dir / "config.json", serialize_config(cfg));
    outputs.push_back("config.json");

    json manifest;
    manifest["command"] = "run";
    manifest["config_path"] = opt.config;
    manifest["config_hash"] = config_hash(cfg);
    manifest["seed"] = cfg.run.seed;
    manifest["threads"] = resolve_threads(cfg.run.threads);
    manifest["versions"] = versions();
    manifest["samples"] = rep.samples;
    manifest["dead"] = rep.dead;
    manifest["aborted"] = rep.aborted;
    manifest["gamma_tot"] = rep.gamma_tot.back();
    manifest["bounds"] = bounds_json(rep.bounds);
    manifest["noise"] = {{"embedding_size", rep.diagnostics.embedding_size},
                         {"clipped_eigenvalues", rep.diagnostics.clipped},
                         {"warnings", rep.diagnostics.warnings}};
    manifest["outputs"] = outputs;
    manifest["wall_time_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");

    for (const auto& w : rep.diagnostics.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "wrote " << outputs.size() << " files to " << dir.string() << " (gamma_tot " << num(rep.gamma_tot.back())
              << ", " << rep.samples << " samples)\n";
    return 0;
}

int cmd_bounds(const Options& opt) {
    const ExperimentConfig cfg = load(opt);
    const RunConfig& run = cfg.run;
    std::vector<QuasiProbabilityPlan> plans;
    const bool compile = !run.bath.empty() && run.model.lambda() > 0.0;
    if (compile) plans = compile_plans(Generator(run.model, run.bath), run.dt, run.steps(), run.plan);
    const BoundValues b = bounds(run, compile ? &plans : nullptr);

    std::ostringstream os;
    os << "quantity,value\n";
    const json table = bounds_json(b);
    for (const auto& [key, value] : table.items())
        os << key << ',' << (value.is_string() ? value.get<std::string>() : num(value.get<double>())) << '\n';
    const fs::path dir = prepare_output(cfg);
    write_file(dir / "bounds.csv", os.str());
    std::cout << os.str();
    return 0;
}

int cmd_sweep(const Options& opt) {
    const ExperimentConfig cfg = load(opt);
    if (!cfg.has_sweep) throw std::invalid_argument("sweep: config has no sweep block with per-cutoff pole tables");
    const std::vector<SweepRow> rows = sweep_gamma_tot(cfg.run, cfg.cutoffs);
    std::ostringstream os;
    os << "omega_c,G_env,gamma_tot\n";
    for (const auto& r : rows) os << num(r.omega_c) << ',' << num(r.g_env) << ',' << num(r.gamma_tot.back()) << '\n';
    const fs::path dir = prepare_output(cfg);
    write_file(dir / "sweep.csv", os.str());
    std::cout << os.str();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Probabilistic error cancellation under non-Markovian noise"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(NMPEC_VERSION));

    Options opt;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", opt.seed, "override the config seed");
        sub->add_option("--threads", opt.threads, "worker threads (0 = hardware)");
        sub->add_option("--out", opt.out, "output directory (overrides the config)");
    };
    CLI::App* validate = app.add_subcommand("validate", "check a config and print G_env, theta and M");
    CLI::App* run = app.add_subcommand("run", "run the noisy and mitigated ensembles and write CSV plus manifest");
    CLI::App* bounds = app.add_subcommand("bounds", "evaluate the bias, overhead and sample-count bounds");
    CLI::App* sweep = app.add_subcommand("sweep", "gamma_tot at T for each cutoff in the sweep block");
    for (CLI::App* sub : {validate, run, bounds, sweep}) add_common(sub);

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) return cmd_validate(opt);
        if (run->parsed()) return cmd_run(opt);
        if (bounds->parsed()) return cmd_bounds(opt);
        if (sweep->parsed()) return cmd_sweep(opt);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}

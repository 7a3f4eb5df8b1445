// hysmc -- statistical model checking for hybrid automata with ODE modes.
//
//   hysmc verify    --model <uri|file> --property <text|file> [flags]
//   hysmc table3    [--only cardiac|circadian] [flags]
//   hysmc calibrate --p <prob> [flags]
//   hysmc simulate  --model <uri|file> --K <steps> [flags]
//
// Exit codes for verify: 0 = H0 accepted, 1 = H1 (violation found),
// 2 = error or inconclusive.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "hysmc/bltl.hpp"
#include "hysmc/models.hpp"
#include "hysmc/smc.hpp"

using nlohmann::json;

namespace {

hysmc::HybridAutomaton load_model(const std::string& spec) {
    if (spec.rfind("builtin:", 0) == 0) return hysmc::builtin_model(spec);
    std::ifstream in(spec);
    if (!in) throw hysmc::Error("cannot open model file '" + spec + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return hysmc::parse_model(buf.str());
}

std::string load_property_text(const std::string& spec) {
    if (std::filesystem::exists(spec)) {
        std::ifstream in(spec);
        std::stringstream buf;
        buf << in.rdbuf();
        std::string text = buf.str();
        while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
        return text;
    }
    return spec;
}

const char* decision_name(hysmc::Decision d) {
    switch (d) {
        case hysmc::Decision::H0: return "H0";
        case hysmc::Decision::H1: return "H1";
        default: return "inconclusive";
    }
}

struct RunFlags {
    double delta = 0.01;
    double alpha = 0.01;
    long K = 0;  // 0 = use the formula horizon
    int J = 10;
    int substeps = 100;
    std::uint64_t seed = 1;
    int threads = 1;
    bool robust = false;
    std::string json_path;
    std::string dump_path;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
    cmd->add_option("--delta", f.delta, "indifference parameter in (0,1)");
    cmd->add_option("--alpha", f.alpha, "false-positive bound in (0,1)");
    cmd->add_option("--K", f.K, "trajectory horizon in steps (default: formula horizon)");
    cmd->add_option("--J", f.J, "intermediate time points per step");
    cmd->add_option("--substeps", f.substeps, "RK4 substeps per unit interval");
    cmd->add_option("--seed", f.seed, "master RNG seed");
    cmd->add_option("--threads", f.threads, "worker threads (0 = hardware)");
    cmd->add_option("--json", f.json_path, "write a machine-readable report here");
}

struct RunOutput {
    hysmc::Verdict verdict;
    long K = 0;
    bool robust = false;
};

RunOutput run_verification(const hysmc::HybridAutomaton& H, const hysmc::BltlFormula& psi,
                           const RunFlags& flags) {
    long psi_horizon = hysmc::horizon(psi);
    long K = flags.K > 0 ? flags.K : psi_horizon;
    if (psi_horizon > K)
        throw hysmc::Error("formula horizon " + std::to_string(psi_horizon) +
                           " exceeds --K=" + std::to_string(K));
    if (K > H.max_horizon)
        throw hysmc::Error("K=" + std::to_string(K) + " exceeds the model horizon " +
                           std::to_string(H.max_horizon));

    hysmc::SamplerConfig scfg;
    scfg.intermediate_points = flags.J;
    scfg.horizon = K;
    scfg.flow.substeps = flags.substeps;
    if (flags.robust) {
        scfg.robust = true;
        scfg.avoid = hysmc::constant_sets(psi, H.dimension());
    }

    hysmc::SmcConfig cfg;
    cfg.delta = flags.delta;
    cfg.alpha = flags.alpha;
    cfg.seed = flags.seed;
    cfg.threads = flags.threads;

    RunOutput out;
    out.K = K;
    out.robust = flags.robust || hysmc::has_quantitative_atoms(psi);
    out.verdict = hysmc::run_smc(H, psi, cfg, scfg);
    return out;
}

json report_json(const std::string& model_spec, const std::string& property_text,
                 const hysmc::HybridAutomaton& H, const RunFlags& flags, const RunOutput& out) {
    const hysmc::Verdict& v = out.verdict;
    json j;
    j["schema"] = 1;
    j["model"] = model_spec;
    j["property"] = property_text;
    j["delta"] = flags.delta;
    j["alpha"] = flags.alpha;
    j["N"] = v.required_samples;
    j["J"] = flags.J;
    j["K"] = out.K;
    j["delta_t"] = H.delta;
    j["substeps"] = flags.substeps;
    j["seed"] = flags.seed;
    j["threads"] = flags.threads;
    j["robust"] = out.robust;
    j["verdict"] = decision_name(v.decision);
    j["samples"] = v.samples_drawn;
    std::string log;
    log.reserve(v.sample_log.size());
    for (char c : v.sample_log) log += c ? '1' : '0';
    j["sample_log"] = log;
    if (v.counterexample) {
        json ce;
        ce["seed"] = v.counterexample->seed;
        std::vector<std::string> mode_names;
        for (int m : v.counterexample->modes) mode_names.push_back(H.modes[m].name);
        ce["modes"] = mode_names;
        j["counterexample"] = ce;
    } else {
        j["counterexample"] = nullptr;
    }
    if (!v.error.empty()) j["error"] = v.error;
    j["timing"] = {{"wall_clock_s", v.wall_clock_seconds},
                   {"mean_sample_s", v.timing.mean_seconds},
                   {"min_sample_s", v.timing.min_seconds},
                   {"max_sample_s", v.timing.max_seconds}};
    return j;
}

void dump_trajectories(const std::string& path, const hysmc::HybridAutomaton& H,
                       const hysmc::BltlFormula& psi, const RunFlags& flags, const RunOutput& out) {
    std::ofstream os(path);
    if (!os) throw hysmc::Error("cannot open dump file '" + path + "'");
    hysmc::SamplerConfig scfg;
    scfg.intermediate_points = flags.J;
    scfg.horizon = out.K;
    scfg.flow.substeps = flags.substeps;
    if (out.robust) {
        scfg.robust = true;
        scfg.avoid = hysmc::constant_sets(psi, H.dimension());
    }
    for (long index = 1; index <= out.verdict.samples_drawn; index++) {
        hysmc::Trajectory tau =
            scfg.robust
                ? hysmc::sample_robust_trajectory(
                      H, scfg, hysmc::RngStream::substream(flags.seed, index))
                : hysmc::sample_trajectory(H, scfg,
                                           hysmc::RngStream::substream(flags.seed, index));
        for (long k = 0; k < tau.length(); k++) {
            json rec;
            rec["trajectory"] = index;
            rec["step"] = k;
            rec["mode"] = H.modes[tau.modes[k]].name;
            std::vector<double> vals(tau.states[k].data(),
                                     tau.states[k].data() + tau.states[k].size());
            rec["values"] = vals;
            if (k > 0) {
                const hysmc::StepRecord& sr = tau.steps[k - 1];
                if (sr.transition >= 0) {
                    rec["switched_guard"] = sr.guard_slot;
                    rec["t"] = sr.switch_time;
                } else {
                    rec["switched_guard"] = nullptr;
                }
            }
            os << rec.dump() << "\n";
        }
    }
}

int cmd_verify(const std::string& model_spec, const std::string& property_spec,
               const RunFlags& flags) {
    hysmc::HybridAutomaton H = load_model(model_spec);
    std::string property_text = load_property_text(property_spec);
    hysmc::BltlFormula psi = hysmc::parse_bltl(property_text, H.all_labels(), H.symbols);

    RunOutput out = run_verification(H, psi, flags);
    const hysmc::Verdict& v = out.verdict;

    std::cout << "model:     " << model_spec << "\n";
    std::cout << "property:  " << property_text << "\n";
    std::cout << "delta=" << flags.delta << " alpha=" << flags.alpha
              << " N=" << v.required_samples << " J=" << flags.J << " K=" << out.K
              << " substeps=" << flags.substeps << " seed=" << flags.seed
              << " robust=" << (out.robust ? "yes" : "no") << "\n";
    std::cout << "verdict:   " << decision_name(v.decision) << "\n";
    std::cout << "samples:   " << v.samples_drawn << "\n";
    if (v.counterexample) {
        std::cout << "counterexample seed: " << v.counterexample->seed << "\n";
        std::cout << "counterexample modes:";
        int last = -1;
        for (long k = 0; k < v.counterexample->length(); k++) {
            int m = v.counterexample->modes[k];
            if (m != last) {
                std::cout << " " << H.modes[m].name << "@" << k;
                last = m;
            }
        }
        std::cout << "\n";
    }
    if (!v.error.empty()) std::cout << "error:     " << v.error << "\n";
    std::cout << "wall clock: " << std::fixed << std::setprecision(2) << v.wall_clock_seconds
              << " s (mean " << std::setprecision(4) << v.timing.mean_seconds << " s/sample)\n";

    if (!flags.json_path.empty()) {
        std::ofstream os(flags.json_path);
        os << report_json(model_spec, property_text, H, flags, out).dump(2) << "\n";
    }
    if (!flags.dump_path.empty()) dump_trajectories(flags.dump_path, H, psi, flags, out);

    switch (v.decision) {
        case hysmc::Decision::H0: return 0;
        case hysmc::Decision::H1: return 1;
        default: return 2;
    }
}

int cmd_table3(const std::string& only, const RunFlags& base_flags) {
    std::vector<hysmc::PropertyCase> rows;
    if (only.empty() || only == "cardiac") {
        auto r = hysmc::property_suite(hysmc::CaseStudy::Cardiac);
        rows.insert(rows.end(), r.begin(), r.end());
    }
    if (only.empty() || only == "circadian") {
        auto r = hysmc::property_suite(hysmc::CaseStudy::Circadian);
        rows.insert(rows.end(), r.begin(), r.end());
    }
    if (rows.empty()) throw hysmc::Error("--only must be 'cardiac' or 'circadian'");

    json jrows = json::array();
    int mismatches = 0;
    std::cout << std::left << std::setw(4) << "id" << std::setw(32) << "scenario"
              << std::setw(10) << "expected" << std::setw(10) << "got" << std::setw(9)
              << "samples" << std::setw(9) << "seconds"
              << "status\n";
    for (std::size_t i = 0; i < rows.size(); i++) {
        const hysmc::PropertyCase& row = rows[i];
        hysmc::HybridAutomaton H = load_model(row.model_uri);
        hysmc::BltlFormula psi = hysmc::parse_bltl(row.property, H.all_labels(), H.symbols);

        RunFlags flags = base_flags;
        flags.K = row.horizon;
        flags.seed = base_flags.seed + i;  // one stream family per row
        RunOutput out = run_verification(H, psi, flags);

        bool got_true = out.verdict.decision == hysmc::Decision::H0;
        bool decision_match = out.verdict.decision != hysmc::Decision::Inconclusive &&
                              got_true == row.expected_true;
        bool samples_match = row.expected_true ? out.verdict.samples_drawn == 459
                                               : out.verdict.samples_drawn <= 5;
        bool match = decision_match && samples_match;
        if (!match) mismatches++;

        std::cout << std::left << std::setw(4) << row.id << std::setw(32) << row.scenario
                  << std::setw(10) << (row.expected_true ? "true" : "false") << std::setw(10)
                  << (out.verdict.decision == hysmc::Decision::Inconclusive
                          ? "error"
                          : got_true ? "true" : "false")
                  << std::setw(9) << out.verdict.samples_drawn << std::setw(9) << std::fixed
                  << std::setprecision(1) << out.verdict.wall_clock_seconds
                  << (match ? "match" : "MISMATCH") << "\n"
                  << std::flush;

        json jr;
        jr["id"] = row.id;
        jr["scenario"] = row.scenario;
        jr["model"] = row.model_uri;
        jr["property"] = row.property;
        jr["expected"] = row.expected_true;
        jr["expected_samples"] = row.expected_samples;
        jr["decision"] = decision_name(out.verdict.decision);
        jr["samples"] = out.verdict.samples_drawn;
        jr["match"] = match;
        jrows.push_back(jr);
    }
    std::cout << (mismatches == 0 ? "all rows match\n"
                                  : std::to_string(mismatches) + " row(s) mismatch\n");
    if (!base_flags.json_path.empty()) {
        json j;
        j["schema"] = 1;
        j["rows"] = jrows;
        j["mismatches"] = mismatches;
        std::ofstream os(base_flags.json_path);
        os << j.dump(2) << "\n";
    }
    return mismatches == 0 ? 0 : 1;
}

int cmd_calibrate(double p, long reps, const RunFlags& flags) {
    hysmc::SmcConfig cfg;
    cfg.delta = flags.delta;
    cfg.alpha = flags.alpha;
    cfg.seed = flags.seed;
    hysmc::CalibrationReport report = hysmc::calibration_report(cfg, p, reps);

    std::cout << "p=" << p << " delta=" << flags.delta << " alpha=" << flags.alpha
              << " N=" << report.required_samples << " reps=" << reps << "\n";
    std::cout << "H0: " << report.h0_count << "  H1: " << report.h1_count
              << "  observed H0 rate: " << report.observed_h0_rate << "\n";
    std::cout << "false negatives (p=1 only): " << report.false_negatives << "\n";
    std::cout << "samples per run: mean " << report.mean_samples << ", median "
              << report.median_samples << "\n";
    if (p >= 1.0)
        std::cout << (report.false_negatives == 0 ? "zero false negatives, as guaranteed\n"
                                                  : "FALSE NEGATIVES PRESENT (bug)\n");

    if (!flags.json_path.empty()) {
        json j;
        j["schema"] = 1;
        j["p"] = p;
        j["delta"] = flags.delta;
        j["alpha"] = flags.alpha;
        j["N"] = report.required_samples;
        j["repetitions"] = report.repetitions;
        j["h0"] = report.h0_count;
        j["h1"] = report.h1_count;
        j["observed_h0_rate"] = report.observed_h0_rate;
        j["false_negatives"] = report.false_negatives;
        j["mean_samples"] = report.mean_samples;
        j["median_samples"] = report.median_samples;
        std::ofstream os(flags.json_path);
        os << j.dump(2) << "\n";
    }
    return 0;
}

int cmd_simulate(const std::string& model_spec, long K, long count, const RunFlags& flags,
                 const std::string& csv_path) {
    hysmc::HybridAutomaton H = load_model(model_spec);
    if (K <= 0) throw hysmc::Error("--K must be positive");
    hysmc::SamplerConfig scfg;
    scfg.intermediate_points = flags.J;
    scfg.horizon = K;
    scfg.flow.substeps = flags.substeps;

    std::ofstream file;
    std::ostream* os = &std::cout;
    if (!csv_path.empty() && csv_path != "-") {
        file.open(csv_path);
        if (!file) throw hysmc::Error("cannot open '" + csv_path + "'");
        os = &file;
    }
    *os << "trajectory,step,mode";
    for (const std::string& v : H.symbols.variables()) *os << "," << v;
    *os << "\n";
    for (long i = 1; i <= count; i++) {
        hysmc::Trajectory tau =
            hysmc::sample_trajectory(H, scfg, hysmc::RngStream::substream(flags.seed, i));
        for (long k = 0; k < tau.length(); k++) {
            *os << i << "," << k << "," << H.modes[tau.modes[k]].name;
            for (int d = 0; d < H.dimension(); d++)
                *os << "," << std::setprecision(10) << tau.states[k][d];
            *os << "\n";
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"statistical model checker for hybrid automata with ODE mode dynamics"};
    app.require_subcommand(1);

    // verify
    std::string model_spec, property_spec;
    RunFlags verify_flags;
    CLI::App* verify = app.add_subcommand("verify", "check one property against one model");
    verify->add_option("--model", model_spec, "builtin:... URI or model file path")->required();
    verify->add_option("--property", property_spec, "formula text or file path")->required();
    add_run_flags(verify, verify_flags);
    verify->add_flag("--robust", verify_flags.robust,
                     "force the robust sampler (auto-enabled for quantitative atoms)");
    verify->add_option("--dump-trajectories", verify_flags.dump_path,
                       "write sampled trajectories as JSON lines");

    // table3
    std::string only;
    RunFlags table_flags;
    CLI::App* table3 = app.add_subcommand("table3", "run the full case-study batch");
    table3->add_option("--only", only, "restrict to 'cardiac' or 'circadian'");
    add_run_flags(table3, table_flags);

    // calibrate
    double p = 1.0;
    long reps = 1000;
    RunFlags cal_flags;
    CLI::App* calibrate =
        app.add_subcommand("calibrate", "error-rate check against a synthetic source");
    calibrate->add_option("--p", p, "true satisfaction probability")->required();
    calibrate->add_option("--reps", reps, "repetitions");
    add_run_flags(calibrate, cal_flags);

    // simulate
    std::string sim_model, csv_path;
    long sim_K = 0, sim_count = 1;
    RunFlags sim_flags;
    CLI::App* simulate = app.add_subcommand("simulate", "sample trajectories to CSV");
    simulate->add_option("--model", sim_model, "builtin:... URI or model file path")->required();
    simulate->add_option("--K", sim_K, "steps per trajectory")->required();
    simulate->add_option("--count", sim_count, "number of trajectories");
    simulate->add_option("--csv", csv_path, "output path ('-' for stdout)");
    add_run_flags(simulate, sim_flags);

    CLI11_PARSE(app, argc, argv);

    try {
        if (verify->parsed()) return cmd_verify(model_spec, property_spec, verify_flags);
        if (table3->parsed()) return cmd_table3(only, table_flags);
        if (calibrate->parsed()) return cmd_calibrate(p, reps, cal_flags);
        if (simulate->parsed()) return cmd_simulate(sim_model, sim_K, sim_count, sim_flags,
                                                    csv_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

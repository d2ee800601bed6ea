#include "descobs/cli.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "descobs/detect.hpp"
#include "descobs/io.hpp"
#include "descobs/observer.hpp"
#include "descobs/pencil.hpp"
#include "descobs/sim.hpp"

namespace descobs {

namespace {

std::string fmt(double v, int digits = 6) {
    std::ostringstream s;
    s << std::setprecision(digits) << v;
    return s.str();
}

std::string fmt(Complex z) {
    if (z.imag() == 0.0) return fmt(z.real());
    std::ostringstream s;
    s << fmt(z.real()) << (z.imag() < 0 ? " - " : " + ") << fmt(std::abs(z.imag())) << "i";
    return s.str();
}

std::string yes_no(bool b) { return b ? "yes" : "no"; }

bool is_identity(const Mat& E) {
    if (E.rows() != E.cols()) return false;
    if (E.size() == 0) return true;
    return (E - Mat::Identity(E.rows(), E.cols())).cwiseAbs().maxCoeff() == 0.0;
}

Vec parse_vector(const std::string& text, const char* what) {
    std::vector<double> vals;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        try {
            std::size_t used = 0;
            vals.push_back(std::stod(item, &used));
            if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw InputError(std::string("cannot parse ") + what + " entry \"" + item + "\"");
        }
    }
    return Eigen::Map<Vec>(vals.data(), static_cast<Index>(vals.size()));
}

// "re" or "re:im" entries; complex entries must come with their conjugates.
std::vector<Complex> parse_poles(const std::string& text) {
    std::vector<Complex> poles;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        const auto colon = item.find(':');
        try {
            if (colon == std::string::npos) {
                poles.emplace_back(std::stod(item), 0.0);
            } else {
                poles.emplace_back(std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1)));
            }
        } catch (const std::exception&) {
            throw InputError("cannot parse pole \"" + item + "\"");
        }
    }
    return poles;
}

struct CommonFlags {
    Tolerances tol;
    bool json = false;
};

void add_tolerance_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--tol", f.tol.rank_rtol, "relative rank tolerance")->capture_default_str();
    cmd->add_option("--stab-margin", f.tol.stab_margin, "stability margin")->capture_default_str();
    cmd->add_option("--zero-atol", f.tol.zero_atol, "relative zero-block threshold")->capture_default_str();
    cmd->add_option("--cluster-rtol", f.tol.cluster_rtol, "eigenvalue clustering radius")->capture_default_str();
}

std::string describe(const DescriptorSystem& sys) {
    std::ostringstream s;
    if (!sys.description.empty()) s << sys.description << " ";
    s << "(m=" << sys.m() << ", n=" << sys.n() << ", k=" << sys.k() << ", p=" << sys.p() << ", r=" << sys.r()
      << ")";
    return s.str();
}

void print_certificate(const DetectabilityCertificate& c, std::ostream& out) {
    out << to_string(c.method) << ": " << (c.verdict ? "detectable" : "NOT detectable")
        << (c.marginal() ? "  [marginal: a decision is close to its tolerance]" : "") << "\n";
    for (const auto& p : c.rank_probes)
        out << "  lambda = " << fmt(p.lambda) << "  l = " << p.block_length << "  rank G = " << p.rank_without_K
            << "  rank [G; K] = " << p.rank_with_K << "\n";
    for (const auto& p : c.wong_probes)
        out << "  lambda = " << fmt(p.lambda) << "  dim W* = " << p.dim_terminal << "  |K W*| = " << fmt(p.k_residual, 3)
            << (p.contained_in_kernel ? "  (in ker K)" : "  (not in ker K)") << "\n";
    if (c.qkf_probe)
        out << "  |K_eps| = " << fmt(c.qkf_probe->norm_K_eps, 3) << "  |K_f1| = " << fmt(c.qkf_probe->norm_K_f1, 3)
            << "  threshold " << fmt(c.qkf_probe->threshold, 3) << "  n_f1 = " << c.qkf_probe->n_f1 << "\n";
}

int cmd_check(const std::string& path, const std::string& method, const CommonFlags& f, std::ostream& out) {
    const auto sys = load_system(path);
    std::vector<Method> methods;
    if (method == "all") {
        methods = {Method::Rank, Method::Wong, Method::Qkf};
    } else if (method == "rank") {
        methods = {Method::Rank};
    } else if (method == "wong") {
        methods = {Method::Wong};
    } else {
        methods = {Method::Qkf};
    }
    std::vector<DetectabilityCertificate> certs;
    for (Method m : methods) certs.push_back(is_partially_detectable(sys, m, f.tol));
    bool agree = true;
    for (const auto& c : certs) agree = agree && c.verdict == certs.front().verdict;
    bool anyMarginal = false;
    for (const auto& c : certs) anyMarginal = anyMarginal || c.marginal();

    const bool behavioral = is_behaviorally_detectable(sys, f.tol);
    const bool stateSpace = is_identity(sys.E);
    bool tower = false, legacy = false;
    if (stateSpace && sys.n() > 0) {
        tower = ss_partial_detectability(sys.A, sys.C, sys.K, f.tol);
        legacy = legacy_functional_detectability(sys.A, sys.C, sys.K, f.tol);
    }

    if (f.json) {
        json j;
        j["system"] = describe(sys);
        json cs = json::array();
        for (const auto& c : certs) cs.push_back(certificate_to_json(c));
        j["certificates"] = std::move(cs);
        j["agree"] = agree;
        j["behavioral_detectability"] = behavioral;
        if (stateSpace && sys.n() > 0) {
            j["state_space_tower_test"] = tower;
            j["legacy_single_step_test"] = legacy;
        }
        out << j.dump(2) << "\n";
    } else {
        out << "system: " << describe(sys) << "\n";
        for (const auto& c : certs) print_certificate(c, out);
        out << "behavioral detectability (rank [lambda E - A; C] = n): " << yes_no(behavioral) << "\n";
        if (stateSpace && sys.n() > 0) {
            out << "state-space tower test: " << (tower ? "detectable" : "NOT detectable") << "\n";
            out << "legacy single-step test: " << (legacy ? "detectable" : "NOT detectable") << "\n";
            if (tower != legacy)
                out << "note: the single-step test misses Jordan-chain coupling; the tower test is authoritative\n";
        }
        if (!agree)
            out << "DISAGREEMENT between methods" << (anyMarginal ? " (at a tolerance boundary)" : "") << "\n";
        else
            out << "verdict: " << (certs.front().verdict ? "partially detectable" : "NOT partially detectable")
                << "\n";
    }
    if (!agree) return kExitDisagree;
    return certs.front().verdict ? kExitOk : kExitNegative;
}

int cmd_qkf(const std::string& path, const CommonFlags& f, std::ostream& out) {
    const auto sys = load_system(path);
    const auto sp = StackedPencil::from(sys);
    const auto q = qkf(sp.pencil(), f.tol);
    if (f.json) {
        out << qkf_to_json(q, true).dump(2) << "\n";
        return kExitOk;
    }
    const auto& s = q.sizes;
    out << "stacked pencil: " << sp.pencil().rows() << " x " << sp.pencil().cols() << "\n";
    out << "sizes (m_eps, n_eps, n_f, n_sig, m_eta, n_eta) = (" << s.m_eps << ", " << s.n_eps << ", " << s.n_f
        << ", " << s.n_sig << ", " << s.m_eta << ", " << s.n_eta << ")\n";
    out << "finite spectrum:";
    const auto spec = finite_spectrum(q, f.tol);
    if (spec.empty()) out << " (none)";
    for (const auto& c : spec) {
        out << " " << fmt(c.center);
        if (c.multiplicity > 1) out << " (x" << c.multiplicity << ")";
    }
    out << "\n";
    out << "nilpotency index h = " << q.h << "\n";
    out << "cond(P) = " << fmt(q.cond_P, 4) << ", cond(Q) = " << fmt(q.cond_Q, 4) << "\n";
    out << "off-diagonal residual = " << fmt(q.offdiag_residual, 3) << "\n";
    return kExitOk;
}

void print_matrix(const char* name, const Mat& M, std::ostream& out) {
    out << "  " << name << " =";
    if (M.size() == 0) {
        out << " [] (" << M.rows() << "x" << M.cols() << ")\n";
        return;
    }
    out << "\n";
    for (Index i = 0; i < M.rows(); ++i) {
        out << "    ";
        for (Index j = 0; j < M.cols(); ++j) out << std::setw(12) << fmt(round12(M(i, j)));
        out << "\n";
    }
}

int cmd_synthesize(const std::string& path, const std::string& poles, const std::string& strategy,
                   const std::string& outPath, const std::string& reducedOut, const CommonFlags& f,
                   std::ostream& out) {
    const json input = read_json_file(path);
    SynthConfig cfg;
    cfg.strategy = strategy == "place" ? GainStrategy::Place : GainStrategy::ZeroFirst;
    if (!poles.empty()) cfg.poles = parse_poles(poles);

    ReducedSystem red;
    SynthesisReport rep;
    ObserverRealization obs;
    try {
        if (is_reduced_json(input)) {
            red = reduced_from_json(input, f.tol);
            std::tie(obs, rep) = synthesize_reduced(red, cfg, f.tol);
        } else {
            const auto sys = system_from_json(input);
            std::tie(obs, rep) = synthesize(sys, cfg, f.tol);
            if (!reducedOut.empty()) red = reduce(sys, f.tol);
        }
    } catch (const NotPartiallyDetectable& e) {
        if (f.json) {
            out << json{{"partially_detectable", false}, {"sigma1", false}, {"sigma3", false}}.dump(2) << "\n";
        } else {
            out << "sigma1 (partially detectable): no\n" << e.what() << "\n";
        }
        return kExitNegative;
    }

    const json oj = observer_to_json(obs, &rep);
    if (!outPath.empty()) write_json_file(outPath, oj);
    if (!reducedOut.empty()) write_json_file(reducedOut, reduced_to_json(red));

    if (f.json) {
        out << oj.dump(2) << "\n";
    } else {
        out << "sigma1 (partially detectable): " << yes_no(rep.sigma1) << "\n";
        out << "gain: " << rep.gain_strategy << "\n";
        out << "observer order l = " << obs.l << ", derivative order h = " << obs.h << "\n";
        out << "stable: " << yes_no(obs.stable) << " (spectral abscissa " << fmt(obs.spectral_abscissa) << ")\n";
        out << "condition rank R = rank O(R, N): " << rep.condition8.rank_R << " vs " << rep.condition8.rank_O
            << (rep.condition8.holds ? " (holds)" : " (fails)") << "\n";
        out << "sigma3 (exact generalized functional observer): " << yes_no(rep.sigma3) << "\n";
        if (rep.asymptotic_only) out << "mode: asymptotic estimator only (z_hat converges but need not match at t0)\n";
        out << "cond(P) = " << fmt(rep.cond_P, 4) << ", cond(Q) = " << fmt(rep.cond_Q, 4) << ", cond(U1) = "
            << fmt(rep.cond_U1, 4) << ", cond(U2) = " << fmt(rep.cond_U2, 4) << "\n";
        print_matrix("N", obs.N, out);
        print_matrix("H", obs.H, out);
        print_matrix("R", obs.R, out);
        for (std::size_t i = 0; i < obs.M.size(); ++i) {
            const std::string name = "M" + std::to_string(i);
            print_matrix(name.c_str(), obs.M[i], out);
        }
        print_matrix("L", obs.L, out);
        if (!outPath.empty()) out << "observer written to " << outPath << "\n";
    }
    return rep.sigma3 ? kExitOk : kExitAsymptotic;
}

struct SimFlags {
    double t0 = 0.0, horizon = 10.0, dt = 1e-3;
    std::string init_f2, init_eta, init_w, out;
};

Vec initial_or_zero(const std::string& text, Index size, const char* what) {
    if (text.empty()) return Vec::Zero(size);
    Vec v = parse_vector(text, what);
    if (v.size() != size) {
        std::ostringstream msg;
        msg << what << " needs " << size << " entries, got " << v.size();
        throw InputError(msg.str());
    }
    return v;
}

int cmd_simulate(const std::string& sysPath, const std::string& obsPath, const std::string& sigPath,
                 const SimFlags& sf, const CommonFlags& f, std::ostream& out, std::ostream& err) {
    const json sysJson = read_json_file(sysPath);
    const ReducedSystem red =
        is_reduced_json(sysJson) ? reduced_from_json(sysJson, f.tol) : reduce(system_from_json(sysJson), f.tol);
    const ObserverRealization obs = observer_from_json(read_json_file(obsPath));
    const Signal sig = signal_from_json(read_json_file(sigPath));

    if (obs.l != red.l() || obs.R.rows() != red.r() || obs.H.cols() != red.inputs || obs.h != red.h)
        throw InputError("observer file does not match the system (different l, r, inputs or h)");

    SimConfig cfg;
    cfg.t0 = sf.t0;
    cfg.horizon = sf.horizon;
    cfg.dt = sf.dt;
    cfg.x_f2_0 = initial_or_zero(sf.init_f2, red.n_f2, "--init-f2");
    cfg.x_eta_0 = initial_or_zero(sf.init_eta, red.sizes.n_eta, "--init-eta");
    cfg.w0 = initial_or_zero(sf.init_w, obs.l, "--init-w");

    const Trajectory tr = simulate(red, obs, sig, cfg);
    for (const auto& w : tr.warnings) err << "warning: " << w << "\n";

    if (!sf.out.empty()) {
        std::ofstream csv(sf.out);
        if (!csv) throw InputError("cannot write " + sf.out);
        write_csv(tr, csv);
    }
    Vec e1(obs.l);
    e1 << cfg.x_f2_0, cfg.x_eta_0;
    e1 -= cfg.w0;
    const double dev = error_consistency(tr, obs.N, obs.R, e1);
    const double rate = fitted_decay_rate(tr);
    if (f.json) {
        json j{{"samples", tr.grid.samples()},
               {"final_error", round12(tr.final_error())},
               {"max_error", round12(tr.max_error())},
               {"max_algebraic_residual", round12(tr.max_residual())},
               {"error_dynamics_deviation", round12(dev)}};
        j["fitted_decay_rate"] = std::isfinite(rate) ? json(round12(rate)) : json(nullptr);
        out << j.dump(2) << "\n";
    } else {
        out << "samples: " << tr.grid.samples() << " (dt = " << fmt(tr.grid.dt) << ")\n";
        out << "final |e| = " << fmt(tr.final_error(), 4) << "\n";
        out << "max |e| = " << fmt(tr.max_error(), 4) << "\n";
        out << "max algebraic residual = " << fmt(tr.max_residual(), 4) << "\n";
        out << "deviation from R exp(N t) e1(0) = " << fmt(dev, 3) << "\n";
        out << "fitted decay rate = " << (std::isfinite(rate) ? fmt(rate, 4) : std::string("n/a")) << "\n";
        if (!sf.out.empty()) out << "trajectory written to " << sf.out << "\n";
    }
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Partial detectability and generalized functional observers for descriptor systems", "descobs"};
    app.require_subcommand(1);

    CommonFlags f;

    auto* check = app.add_subcommand("check", "decide partial detectability");
    std::string checkPath, method = "rank";
    check->add_option("system", checkPath, "system JSON file")->required();
    check->add_option("--method", method, "rank | wong | qkf | all")
        ->check(CLI::IsMember({"rank", "wong", "qkf", "all"}))
        ->capture_default_str();
    check->add_flag("--json", f.json, "machine-readable report");
    add_tolerance_flags(check, f);

    auto* qkfCmd = app.add_subcommand("qkf", "quasi-Kronecker form of the stacked pencil");
    std::string qkfPath;
    qkfCmd->add_option("system", qkfPath, "system JSON file")->required();
    qkfCmd->add_flag("--json", f.json, "dump all matrices as JSON");
    add_tolerance_flags(qkfCmd, f);

    auto* synth = app.add_subcommand("synthesize", "build a generalized functional observer");
    std::string synthPath, poles, strategy = "zero-first", outPath, reducedOut;
    synth->add_option("system", synthPath, "system JSON file (or reduced system)")->required();
    synth->add_option("--poles", poles, "comma-separated poles, re or re:im");
    synth->add_option("--gain-strategy", strategy, "zero-first | place")
        ->check(CLI::IsMember({"zero-first", "place"}))
        ->capture_default_str();
    synth->add_option("--out", outPath, "write the observer JSON here");
    synth->add_option("--reduced-out", reducedOut, "write the reduced system JSON here");
    synth->add_flag("--json", f.json, "print the observer JSON");
    add_tolerance_flags(synth, f);

    auto* simCmd = app.add_subcommand("simulate", "simulate system and observer, write a CSV trajectory");
    std::string simSys, simObs, simSig;
    SimFlags sf;
    simCmd->add_option("system", simSys, "system JSON file (or reduced system)")->required();
    simCmd->add_option("observer", simObs, "observer JSON file")->required();
    simCmd->add_option("signal", simSig, "signal JSON file")->required();
    simCmd->add_option("--t0", sf.t0)->capture_default_str();
    simCmd->add_option("--horizon", sf.horizon)->capture_default_str();
    simCmd->add_option("--dt", sf.dt)->capture_default_str();
    simCmd->add_option("--init-f2", sf.init_f2, "comma-separated x_f2(t0)");
    simCmd->add_option("--init-eta", sf.init_eta, "comma-separated x_eta(t0)");
    simCmd->add_option("--init-w", sf.init_w, "comma-separated w(t0)");
    simCmd->add_option("--out", sf.out, "CSV output path");
    simCmd->add_flag("--json", f.json, "machine-readable summary");
    add_tolerance_flags(simCmd, f);

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }

    try {
        f.tol.validate();
        if (*check) return cmd_check(checkPath, method, f, out);
        if (*qkfCmd) return cmd_qkf(qkfPath, f, out);
        if (*synth) return cmd_synthesize(synthPath, poles, strategy, outPath, reducedOut, f, out);
        if (*simCmd) return cmd_simulate(simSys, simObs, simSig, sf, f, out, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}

}  // namespace descobs

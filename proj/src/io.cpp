#include "descobs/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace descobs {

double round12(double v) {
    if (!std::isfinite(v)) return v;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    const double r = std::strtod(buf, nullptr);
    return r == 0.0 ? 0.0 : r;  // drop negative zero
}

json matrix_to_json(const Mat& M) {
    json rows = json::array();
    for (Index i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < M.cols(); ++j) row.push_back(round12(M(i, j)));
        rows.push_back(std::move(row));
    }
    return rows;
}

Mat matrix_from_json(const json& j, const std::string& name, Index rows, Index cols) {
    if (!j.is_array()) throw InputError("\"" + name + "\" must be an array of rows");
    const Index r = static_cast<Index>(j.size());
    if (r == 0) {
        // `[]` stands for any matrix with no entries: 0 x cols, or rows x 0.
        if (rows > 0 && cols > 0)
            throw InputError("\"" + name + "\" is empty but should be " + std::to_string(rows) + "x" + std::to_string(cols));
        if (rows > 0) return Mat(rows, 0);
        return Mat(0, cols < 0 ? 0 : cols);
    }
    Index c = -1;
    for (const auto& row : j) {
        if (!row.is_array()) throw InputError("\"" + name + "\" must be an array of rows");
        if (c < 0) c = static_cast<Index>(row.size());
        if (static_cast<Index>(row.size()) != c) throw InputError("\"" + name + "\" has ragged rows");
    }
    Mat M(r, c);
    for (Index i = 0; i < r; ++i) {
        for (Index k = 0; k < c; ++k) {
            const auto& v = j[i][k];
            if (!v.is_number()) throw InputError("\"" + name + "\" contains a non-numeric entry");
            M(i, k) = v.get<double>();
        }
    }
    if ((rows >= 0 && r != rows) || (cols >= 0 && c != cols)) {
        std::ostringstream msg;
        msg << "\"" << name << "\" is " << r << "x" << c << ", expected " << (rows >= 0 ? std::to_string(rows) : "?")
            << "x" << (cols >= 0 ? std::to_string(cols) : "?");
        throw InputError(msg.str());
    }
    return M;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError(path + ": " + e.what());
    }
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path);
    out << j.dump(2) << "\n";
}

DescriptorSystem system_from_json(const json& j) {
    if (!j.is_object()) throw InputError("system file must be a JSON object");
    for (const char* key : {"E", "A", "K"})
        if (!j.contains(key)) throw InputError(std::string("system file is missing \"") + key + "\"");
    const Index nHint = j.contains("n") ? j.at("n").get<Index>() : -1;
    Mat E = matrix_from_json(j.at("E"), "E", -1, nHint);
    const Index m = E.rows(), n = E.cols();
    Mat A = matrix_from_json(j.at("A"), "A", m, n);
    Mat B = j.contains("B") ? matrix_from_json(j.at("B"), "B", m, -1) : Mat(m, 0);
    if (B.rows() != m) throw InputError("\"B\" must have as many rows as E");
    const Index k = B.cols();
    Mat C = j.contains("C") ? matrix_from_json(j.at("C"), "C", -1, n) : Mat(0, n);
    const Index p = C.rows();
    Mat D = j.contains("D") ? matrix_from_json(j.at("D"), "D", p, k) : Mat(Mat::Zero(p, k));
    Mat K = matrix_from_json(j.at("K"), "K", -1, n);
    DescriptorSystem sys(std::move(E), std::move(A), std::move(B), std::move(C), std::move(D), std::move(K));
    if (j.contains("description")) sys.description = j.at("description").get<std::string>();
    return sys;
}

json system_to_json(const DescriptorSystem& sys) {
    json j;
    if (!sys.description.empty()) j["description"] = sys.description;
    j["n"] = sys.n();
    j["E"] = matrix_to_json(sys.E);
    j["A"] = matrix_to_json(sys.A);
    j["B"] = matrix_to_json(sys.B);
    j["C"] = matrix_to_json(sys.C);
    j["D"] = matrix_to_json(sys.D);
    j["K"] = matrix_to_json(sys.K);
    return j;
}

DescriptorSystem load_system(const std::string& path) {
    try {
        return system_from_json(read_json_file(path));
    } catch (const json::exception& e) {
        throw InputError(path + ": " + e.what());
    }
}

bool is_reduced_json(const json& j) {
    return j.is_object() && j.contains("reduced") && j.at("reduced").is_boolean() && j.at("reduced").get<bool>();
}

ReducedSystem reduced_from_json(const json& j, const Tolerances& tol) {
    ReducedSystem red;
    const json& s = j.at("sizes");
    red.sizes.m_eps = s.value("m_eps", Index{0});
    red.sizes.n_eps = s.value("n_eps", Index{0});
    red.sizes.n_f = s.value("n_f", Index{0});
    red.sizes.n_sig = s.at("n_sig").get<Index>();
    red.sizes.m_eta = s.at("m_eta").get<Index>();
    red.sizes.n_eta = s.at("n_eta").get<Index>();
    red.n_f2 = j.at("n_f2").get<Index>();
    red.n_f1 = j.value("n_f1", red.sizes.n_f - red.n_f2);
    red.inputs = j.at("inputs").get<Index>();
    const Index r = j.at("r").get<Index>();
    const Index ns = red.sizes.n_sig, ne = red.sizes.n_eta, alg = red.sizes.m_eta - ne, u = red.inputs;
    red.J_sig = matrix_from_json(j.at("J_sig"), "J_sig", ns, ns);
    red.B_sig = matrix_from_json(j.at("B_sig"), "B_sig", ns, u);
    red.J_f2 = matrix_from_json(j.at("J_f2"), "J_f2", red.n_f2, red.n_f2);
    red.B_f2 = matrix_from_json(j.at("B_f2"), "B_f2", red.n_f2, u);
    red.A_eta1 = matrix_from_json(j.at("A_eta1"), "A_eta1", ne, ne);
    red.B_eta1 = matrix_from_json(j.at("B_eta1"), "B_eta1", ne, u);
    red.A_eta2 = matrix_from_json(j.at("A_eta2"), "A_eta2", alg, ne);
    red.B_eta2 = matrix_from_json(j.at("B_eta2"), "B_eta2", alg, u);
    red.K_sig = matrix_from_json(j.at("K_sig"), "K_sig", r, ns);
    red.K_f2 = matrix_from_json(j.at("K_f2"), "K_f2", r, red.n_f2);
    red.K_eta = matrix_from_json(j.at("K_eta"), "K_eta", r, ne);
    red.h = j.contains("h") ? j.at("h").get<Index>() : nilpotency_index(red.J_sig, tol);
    red.K_eps = Mat(r, red.sizes.n_eps);
    red.K_eps.setZero();
    red.K_f1 = Mat::Zero(r, red.n_f1);
    red.validate();
    return red;
}

json reduced_to_json(const ReducedSystem& red) {
    json j;
    j["reduced"] = true;
    j["sizes"] = {{"m_eps", red.sizes.m_eps}, {"n_eps", red.sizes.n_eps}, {"n_f", red.sizes.n_f},
                  {"n_sig", red.sizes.n_sig}, {"m_eta", red.sizes.m_eta}, {"n_eta", red.sizes.n_eta}};
    j["n_f1"] = red.n_f1;
    j["n_f2"] = red.n_f2;
    j["inputs"] = red.inputs;
    j["r"] = red.r();
    j["h"] = red.h;
    j["J_sig"] = matrix_to_json(red.J_sig);
    j["B_sig"] = matrix_to_json(red.B_sig);
    j["J_f2"] = matrix_to_json(red.J_f2);
    j["B_f2"] = matrix_to_json(red.B_f2);
    j["A_eta1"] = matrix_to_json(red.A_eta1);
    j["B_eta1"] = matrix_to_json(red.B_eta1);
    j["A_eta2"] = matrix_to_json(red.A_eta2);
    j["B_eta2"] = matrix_to_json(red.B_eta2);
    j["K_sig"] = matrix_to_json(red.K_sig);
    j["K_f2"] = matrix_to_json(red.K_f2);
    j["K_eta"] = matrix_to_json(red.K_eta);
    return j;
}

json observer_to_json(const ObserverRealization& obs, const SynthesisReport* rep) {
    json j;
    j["l"] = obs.l;
    j["h"] = obs.h;
    j["r"] = obs.R.rows();
    j["inputs"] = obs.H.cols();
    j["N"] = matrix_to_json(obs.N);
    j["H"] = matrix_to_json(obs.H);
    j["R"] = matrix_to_json(obs.R);
    json M = json::array();
    for (const Mat& Mi : obs.M) M.push_back(matrix_to_json(Mi));
    j["M"] = std::move(M);
    j["L"] = matrix_to_json(obs.L);
    j["L_shape"] = {obs.L.rows(), obs.L.cols()};
    j["stable"] = obs.stable;
    j["exact"] = obs.exact;
    if (std::isfinite(obs.spectral_abscissa)) j["spectral_abscissa"] = round12(obs.spectral_abscissa);
    if (rep) {
        j["report"] = {{"partially_detectable", rep->partially_detectable},
                       {"sigma1", rep->sigma1},
                       {"sigma3", rep->sigma3},
                       {"asymptotic_only", rep->asymptotic_only},
                       {"rank_R", rep->condition8.rank_R},
                       {"rank_O", rep->condition8.rank_O},
                       {"condition8", rep->condition8.holds},
                       {"gain_strategy", rep->gain_strategy},
                       {"cond_P", round12(rep->cond_P)},
                       {"cond_Q", round12(rep->cond_Q)},
                       {"cond_U1", round12(rep->cond_U1)},
                       {"cond_U2", round12(rep->cond_U2)}};
    }
    return j;
}

ObserverRealization observer_from_json(const json& j) {
    try {
        ObserverRealization obs;
        obs.l = j.at("l").get<Index>();
        obs.h = j.at("h").get<Index>();
        const Index r = j.at("r").get<Index>();
        const Index u = j.at("inputs").get<Index>();
        obs.N = matrix_from_json(j.at("N"), "N", obs.l, obs.l);
        obs.H = matrix_from_json(j.at("H"), "H", obs.l, u);
        obs.R = matrix_from_json(j.at("R"), "R", r, obs.l);
        const auto& M = j.at("M");
        if (!M.is_array() || static_cast<Index>(M.size()) != obs.h)
            throw InputError("\"M\" must be a list of h matrices");
        for (std::size_t i = 0; i < M.size(); ++i)
            obs.M.push_back(matrix_from_json(M[i], "M[" + std::to_string(i) + "]", r, u));
        Index lr = 0, lc = 0;
        if (j.contains("L_shape")) {
            lr = j.at("L_shape")[0].get<Index>();
            lc = j.at("L_shape")[1].get<Index>();
        }
        obs.L = j.contains("L") ? matrix_from_json(j.at("L"), "L", lr, lc) : Mat(lr, lc);
        obs.stable = j.value("stable", false);
        obs.exact = j.value("exact", false);
        obs.spectral_abscissa =
            j.value("spectral_abscissa", -std::numeric_limits<double>::infinity());
        return obs;
    } catch (const json::exception& e) {
        throw InputError(std::string("observer file: ") + e.what());
    }
}

Signal signal_from_json(const json& j) {
    const json* list = &j;
    if (j.is_object() && j.contains("channels")) list = &j.at("channels");
    if (!list->is_array()) throw InputError("signal file must be a list of channel specs");
    std::vector<ChannelSpec> ch;
    try {
        for (const auto& c : *list) {
            ChannelSpec s;
            const std::string type = c.at("type").get<std::string>();
            if (type == "constant") {
                s.kind = ChannelSpec::Kind::Constant;
                s.value = c.value("value", 0.0);
            } else if (type == "polynomial") {
                s.kind = ChannelSpec::Kind::Polynomial;
                s.coeffs = c.at("coeffs").get<std::vector<double>>();
            } else if (type == "sin" || type == "cos") {
                s.kind = type == "sin" ? ChannelSpec::Kind::Sin : ChannelSpec::Kind::Cos;
                s.amp = c.value("amp", 1.0);
                s.freq = c.value("freq", 1.0);
                s.phase = c.value("phase", 0.0);
            } else if (type == "exp") {
                s.kind = ChannelSpec::Kind::Exp;
                s.amp = c.value("amp", 1.0);
                s.rate = c.value("rate", 0.0);
            } else {
                throw InputError("unknown signal type \"" + type + "\"");
            }
            if (c.contains("max_order")) s.max_order = c.at("max_order").get<Index>();
            ch.push_back(std::move(s));
        }
    } catch (const json::exception& e) {
        throw InputError(std::string("signal file: ") + e.what());
    }
    return Signal(std::move(ch));
}

json signal_to_json(const Signal& sig) {
    json list = json::array();
    for (const auto& s : sig.specs()) {
        json c;
        c["type"] = to_string(s.kind);
        switch (s.kind) {
            case ChannelSpec::Kind::Constant: c["value"] = s.value; break;
            case ChannelSpec::Kind::Polynomial: c["coeffs"] = s.coeffs; break;
            case ChannelSpec::Kind::Sin:
            case ChannelSpec::Kind::Cos:
                c["amp"] = s.amp;
                c["freq"] = s.freq;
                c["phase"] = s.phase;
                break;
            case ChannelSpec::Kind::Exp:
                c["amp"] = s.amp;
                c["rate"] = s.rate;
                break;
        }
        if (s.max_order != std::numeric_limits<int>::max()) c["max_order"] = s.max_order;
        list.push_back(std::move(c));
    }
    return list;
}

namespace {

json complex_to_json(Complex z) { return {round12(z.real()), round12(z.imag())}; }

}  // namespace

json certificate_to_json(const DetectabilityCertificate& c) {
    json j;
    j["method"] = to_string(c.method);
    j["verdict"] = c.verdict;
    j["marginal"] = c.marginal();
    j["block_length_used"] = c.block_length_used;
    json probes = json::array();
    for (const auto& p : c.rank_probes)
        probes.push_back({{"lambda", complex_to_json(p.lambda)},
                          {"block_length", p.block_length},
                          {"rank_without_K", p.rank_without_K},
                          {"rank_with_K", p.rank_with_K},
                          {"marginal", p.marginal}});
    for (const auto& p : c.wong_probes)
        probes.push_back({{"lambda", complex_to_json(p.lambda)},
                          {"dim_W", p.dim_terminal},
                          {"K_residual", round12(p.k_residual)},
                          {"threshold", round12(p.threshold)},
                          {"contained_in_kernel", p.contained_in_kernel},
                          {"marginal", p.marginal}});
    if (c.qkf_probe) {
        const auto& q = *c.qkf_probe;
        probes.push_back({{"norm_K_eps", round12(q.norm_K_eps)},
                          {"norm_K_f1", round12(q.norm_K_f1)},
                          {"threshold", round12(q.threshold)},
                          {"n_f1", q.n_f1},
                          {"marginal", q.marginal}});
    }
    j["probes"] = std::move(probes);
    return j;
}

json qkf_to_json(const QkfDecomposition& q, bool with_matrices) {
    json j;
    j["sizes"] = {{"m_eps", q.sizes.m_eps}, {"n_eps", q.sizes.n_eps}, {"n_f", q.sizes.n_f},
                  {"n_sig", q.sizes.n_sig}, {"m_eta", q.sizes.m_eta}, {"n_eta", q.sizes.n_eta}};
    json spec = json::array();
    for (const auto& c : finite_spectrum(q))
        spec.push_back({{"lambda", complex_to_json(c.center)}, {"multiplicity", c.multiplicity}});
    j["finite_spectrum"] = std::move(spec);
    j["h"] = q.h;
    j["cond_P"] = round12(q.cond_P);
    j["cond_Q"] = round12(q.cond_Q);
    j["offdiag_residual"] = round12(q.offdiag_residual);
    if (with_matrices) {
        j["P"] = matrix_to_json(q.P);
        j["Q"] = matrix_to_json(q.Q);
        j["E_eps"] = matrix_to_json(q.E_eps);
        j["A_eps"] = matrix_to_json(q.A_eps);
        j["J_f"] = matrix_to_json(q.J_f);
        j["J_sig"] = matrix_to_json(q.J_sig);
        j["E_eta"] = matrix_to_json(q.E_eta);
        j["A_eta"] = matrix_to_json(q.A_eta);
    }
    return j;
}

}  // namespace descobs

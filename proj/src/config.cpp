#include "nmpec/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace nmpec {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
    throw std::invalid_argument(field + ": " + what);
}

void check_keys(const json& j, const std::string& field, const std::set<std::string>& allowed) {
    if (!j.is_object()) fail(field, "expected an object");
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key)) fail(field + "." + key, "unknown field");
}

double get_number(const json& j, const std::string& field) {
    if (!j.is_number()) fail(field, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(field, "not finite");
    return v;
}

cplx get_complex(const json& j, const std::string& field) {
    if (j.is_number()) return {get_number(j, field), 0.0};
    if (!j.is_array() || j.size() != 2) fail(field, "expected a complex number [re, im]");
    return {get_number(j[0], field + "[0]"), get_number(j[1], field + "[1]")};
}

json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

std::string get_string(const json& j, const std::string& field) {
    if (!j.is_string()) fail(field, "expected a string");
    return j.get<std::string>();
}

Matrix parse_operator_canon(const json& j, int n, const std::string& field, json& canon) {
    const int d = 1 << n;
    if (j.is_string()) {
        canon = j;
        try {
            return parse_pauli_expression(j.get<std::string>(), n);
        } catch (const std::invalid_argument& e) {
            fail(field, e.what());
        }
    }
    if (j.is_array()) {
        Matrix m = Matrix::Zero(d, d);
        canon = json::array();
        for (std::size_t i = 0; i < j.size(); ++i) {
            const std::string f = field + "[" + std::to_string(i) + "]";
            const json& term = j[i];
            if (!term.is_array() || term.size() != 2) fail(f, "expected [coefficient, \"pauli word\"]");
            const double c = get_number(term[0], f + "[0]");
            const std::string word = get_string(term[1], f + "[1]");
            if (static_cast<int>(word.size()) != n) fail(f, "Pauli word '" + word + "' does not have " + std::to_string(n) + " letters");
            try {
                m += c * ops::pauli_string(word);
            } catch (const std::invalid_argument& e) {
                fail(f, e.what());
            }
            canon.push_back(json::array({c, word}));
        }
        return m;
    }
    if (j.is_object()) {
        check_keys(j, field, {"matrix"});
        const json& rows = j.at("matrix");
        if (!rows.is_array() || static_cast<int>(rows.size()) != d) fail(field + ".matrix", "expected " + std::to_string(d) + " rows");
        Matrix m(d, d);
        for (int r = 0; r < d; ++r) {
            const json& row = rows[static_cast<std::size_t>(r)];
            if (!row.is_array() || static_cast<int>(row.size()) != d)
                fail(field + ".matrix[" + std::to_string(r) + "]", "expected " + std::to_string(d) + " entries");
            for (int c = 0; c < d; ++c)
                m(r, c) = get_complex(row[static_cast<std::size_t>(c)],
                                      field + ".matrix[" + std::to_string(r) + "][" + std::to_string(c) + "]");
        }
        canon = json{{"matrix", rows}};
        return m;
    }
    fail(field, "expected a Pauli expression, a term list or {\"matrix\": ...}");
}

BathSpec parse_poles(const json& j, std::size_t channels, bool minus, const std::string& field, json& canon) {
    if (!j.is_array()) fail(field, "expected a list of poles");
    std::vector<Pole> poles;
    canon = json::array();
    for (std::size_t mu = 0; mu < j.size(); ++mu) {
        const std::string f = field + "[" + std::to_string(mu) + "]";
        check_keys(j[mu], f, {"g", "omega"});
        if (!j[mu].contains("g") || !j[mu].contains("omega")) fail(f, "pole needs both g and omega");
        Pole p;
        const json& g = j[mu]["g"];
        json gcanon = json::array();
        if (g.is_array() && !g.empty() && (g[0].is_array() || channels > 1)) {
            for (std::size_t c = 0; c < g.size(); ++c) p.amplitudes.push_back(get_complex(g[c], f + ".g[" + std::to_string(c) + "]"));
        } else {
            p.amplitudes.push_back(get_complex(g, f + ".g"));
        }
        for (const auto& a : p.amplitudes) gcanon.push_back(complex_json(a));
        if (p.amplitudes.size() != channels)
            fail(f + ".g", "expected " + std::to_string(channels) + " amplitudes, got " + std::to_string(p.amplitudes.size()));
        p.omega = get_complex(j[mu]["omega"], f + ".omega");
        if (minus) p.omega = -p.omega;
        canon.push_back({{"g", gcanon}, {"omega", complex_json(p.omega)}});
        poles.push_back(std::move(p));
    }
    try {
        return BathSpec(channels, std::move(poles));
    } catch (const std::invalid_argument& e) {
        fail(field, e.what());
    }
}

Vector parse_state(const json& j, int n, const std::string& field) {
    const int d = 1 << n;
    Vector psi;
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (static_cast<int>(s.size()) != n) fail(field, "state label must have one symbol per qubit");
        const double r = 1.0 / std::sqrt(2.0);
        Matrix acc = Matrix::Identity(1, 1);
        for (char c : s) {
            Matrix q(2, 1);
            switch (c) {
                case '0': q << 1, 0; break;
                case '1': q << 0, 1; break;
                case '+': q << r, r; break;
                case '-': q << r, -r; break;
                default: fail(field, std::string("unknown state symbol '") + c + "'");
            }
            acc = ops::kron(acc, q);
        }
        psi = acc.col(0);
    } else {
        if (!j.is_array() || static_cast<int>(j.size()) != d) fail(field, "expected " + std::to_string(d) + " amplitudes");
        psi.resize(d);
        for (int i = 0; i < d; ++i) psi(i) = get_complex(j[static_cast<std::size_t>(i)], field + "[" + std::to_string(i) + "]");
    }
    const double norm = psi.norm();
    if (std::abs(norm - 1.0) > 1e-6) {
        std::ostringstream os;
        os << "state is not normalized (norm " << norm << ")";
        fail(field, os.str());
    }
    return psi / norm;
}

template <class E>
E pick(const json& j, const std::string& field, const std::vector<std::pair<std::string, E>>& options) {
    const std::string s = get_string(j, field);
    for (const auto& [name, value] : options)
        if (name == s) return value;
    std::string list;
    for (const auto& o : options) list += (list.empty() ? "" : ", ") + o.first;
    fail(field, "unknown value '" + s + "' (expected one of " + list + ")");
}

}  // namespace

Matrix parse_pauli_expression(std::string_view text, int n) {
    const int d = 1 << n;
    Matrix m = Matrix::Zero(d, d);
    const std::string s(text);
    std::size_t i = 0;
    auto skip = [&] {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    };
    skip();
    if (i == s.size()) throw std::invalid_argument("empty operator expression");
    bool first = true;
    while (i < s.size()) {
        double sign = 1.0;
        if (s[i] == '+' || s[i] == '-') {
            sign = s[i] == '-' ? -1.0 : 1.0;
            ++i;
            skip();
        } else if (!first) {
            throw std::invalid_argument("expected '+' or '-' at position " + std::to_string(i) + " in '" + s + "'");
        }
        first = false;
        double coef = 1.0;
        bool has_coef = false;
        if (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.')) {
            char* end = nullptr;
            coef = std::strtod(s.c_str() + i, &end);
            i = static_cast<std::size_t>(end - s.c_str());
            has_coef = true;
            skip();
            if (i < s.size() && s[i] == '*') {
                ++i;
                skip();
            }
        }
        std::string word;
        while (i < s.size() && std::string_view("IXYZ").find(s[i]) != std::string_view::npos) word += s[i++];
        if (word.empty() && !has_coef) throw std::invalid_argument("expected a coefficient or Pauli word in '" + s + "'");
        if (word.empty()) word.assign(static_cast<std::size_t>(n), 'I');
        if (static_cast<int>(word.size()) != n)
            throw std::invalid_argument("Pauli word '" + word + "' does not have " + std::to_string(n) + " letters");
        m += sign * coef * ops::pauli_string(word);
        skip();
    }
    return m;
}

Matrix parse_operator(const json& j, int n, const std::string& field) {
    json canon;
    return parse_operator_canon(j, n, field, canon);
}

json operator_to_json(const Matrix& op) {
    const PauliBasis b = pauli_basis(qubit_count(op.rows()));
    const Vector c = b.coefficients(op);
    json out = json::array();
    for (std::size_t a = 0; a < b.size(); ++a) {
        const cplx v = c(static_cast<Eigen::Index>(a));
        if (std::abs(v) > 1e-15) out.push_back(json::array({v.real(), b.labels[a]}));
    }
    return out;
}

ExperimentConfig parse_config(const json& j) {
    check_keys(j, "config", {"model", "bath", "run", "output", "sweep"});
    if (!j.contains("model")) fail("model", "missing");
    if (!j.contains("run")) fail("run", "missing");
    ExperimentConfig cfg;
    json& canon = cfg.canonical;

    // model
    const json& jm = j["model"];
    check_keys(jm, "model", {"n", "hamiltonian", "couplings", "lambda", "lambda2"});
    if (!jm.contains("n") || !jm["n"].is_number_integer()) fail("model.n", "expected an integer qubit count");
    const int n = jm["n"].get<int>();
    if (n < 1 || n > kMaxQubits) fail("model.n", "qubit count must be in [1, 3]");
    json hcanon;
    const Matrix H = jm.contains("hamiltonian") ? parse_operator_canon(jm["hamiltonian"], n, "model.hamiltonian", hcanon)
                                                : (hcanon = json::array(), Matrix::Zero(1 << n, 1 << n));
    std::vector<Matrix> S;
    json scanon = json::array();
    if (jm.contains("couplings")) {
        const json& jc = jm["couplings"];
        if (!jc.is_array()) fail("model.couplings", "expected a list of operators");
        for (std::size_t c = 0; c < jc.size(); ++c) {
            json oc;
            S.push_back(parse_operator_canon(jc[c], n, "model.couplings[" + std::to_string(c) + "]", oc));
            scanon.push_back(oc);
        }
    }
    double lambda = 0.0;
    json mcanon{{"n", n}, {"hamiltonian", hcanon}, {"couplings", scanon}};
    if (jm.contains("lambda") && jm.contains("lambda2")) fail("model", "give either lambda or lambda2, not both");
    if (jm.contains("lambda")) {
        lambda = get_number(jm["lambda"], "model.lambda");
        mcanon["lambda"] = jm["lambda"];
    } else if (jm.contains("lambda2")) {
        const double l2 = get_number(jm["lambda2"], "model.lambda2");
        if (l2 < 0.0) fail("model.lambda2", "must be non-negative");
        lambda = std::sqrt(l2);
        mcanon["lambda2"] = jm["lambda2"];
    } else {
        mcanon["lambda"] = 0.0;
    }
    if (lambda < 0.0) fail("model.lambda", "must be non-negative");
    try {
        cfg.run.model = SystemModel(H, S, lambda);
    } catch (const std::invalid_argument& e) {
        fail("model", e.what());
    }
    canon["model"] = mcanon;

    // bath
    json bcanon{{"convention", "plus"}, {"poles", json::array()}};
    if (j.contains("bath")) {
        const json& jb = j["bath"];
        check_keys(jb, "bath", {"poles", "convention"});
        bool minus = false;
        if (jb.contains("convention")) {
            const std::string conv = get_string(jb["convention"], "bath.convention");
            if (conv == "minus") minus = true;
            else if (conv != "plus") fail("bath.convention", "expected \"plus\" (e^{+i omega t}) or \"minus\" (e^{-i omega t})");
        }
        if (jb.contains("poles")) {
            json pc;
            cfg.run.bath = parse_poles(jb["poles"], std::max<std::size_t>(S.size(), 1), minus, "bath.poles", pc);
            bcanon["poles"] = pc;
        }
    }
    canon["bath"] = bcanon;
    if (!cfg.run.bath.empty() && S.empty()) fail("model.couplings", "a bath needs at least one coupling operator");

    // run
    const json& jr = j["run"];
    check_keys(jr, "run", {"T", "dt", "dt_f", "N_r", "seed", "mode", "observables", "initial_state", "gamma_cap",
                           "quad_panels", "quadrature", "quasi_mode", "history", "epsilon", "delta", "noise", "memory",
                           "noise_convention"});
    RunConfig& run = cfg.run;
    json rc;
    for (const char* key : {"T", "dt"}) {
        if (!jr.contains(key)) fail(std::string("run.") + key, "missing");
    }
    run.T = get_number(jr["T"], "run.T");
    run.dt = get_number(jr["dt"], "run.dt");
    if (!(run.T > 0.0)) fail("run.T", "must be positive");
    if (!(run.dt > 0.0)) fail("run.dt", "must be positive");
    run.dt_f = jr.contains("dt_f") ? get_number(jr["dt_f"], "run.dt_f") : run.dt / 4.0;
    rc["T"] = run.T;
    rc["dt"] = run.dt;
    rc["dt_f"] = run.dt_f;
    {
        const double r = run.T / run.dt;
        if (std::abs(r - std::round(r)) > 1e-9 * std::max(1.0, r) || std::round(r) < 1) {
            std::ostringstream os;
            os << "T = " << run.T << " is not an integer multiple of dt = " << run.dt;
            fail("run.T", os.str());
        }
        const double q = run.dt / run.dt_f;
        if (!(run.dt_f > 0.0) || std::abs(q - std::round(q)) > 1e-9 * std::max(1.0, q) || std::round(q) < 1) {
            std::ostringstream os;
            os << "dt_f = " << run.dt_f << " does not divide dt = " << run.dt;
            fail("run.dt_f", os.str());
        }
    }
    if (jr.contains("N_r")) {
        if (!jr["N_r"].is_number_integer() || jr["N_r"].get<long long>() < 1) fail("run.N_r", "expected a positive integer");
        run.N_r = jr["N_r"].get<std::size_t>();
    }
    rc["N_r"] = run.N_r;
    if (jr.contains("seed")) {
        if (!jr["seed"].is_number_integer()) fail("run.seed", "expected an integer");
        run.seed = jr["seed"].get<std::uint64_t>();
    }
    rc["seed"] = run.seed;
    run.mode = jr.contains("mode") ? pick<RunMode>(jr["mode"], "run.mode",
                                                   {{"noisy", RunMode::noisy_only},
                                                    {"mitigated", RunMode::mitigated},
                                                    {"both", RunMode::both}})
                                   : RunMode::both;
    rc["mode"] = run.mode == RunMode::noisy_only ? "noisy" : (run.mode == RunMode::mitigated ? "mitigated" : "both");

    json oc = json::array();
    if (!jr.contains("observables")) fail("run.observables", "missing");
    const json& jo = jr["observables"];
    auto add_obs = [&](const std::string& name, const json& op, const std::string& field) {
        json c;
        run.observables.push_back(parse_operator_canon(op, n, field, c));
        if (!is_hermitian(run.observables.back())) fail(field, "observable is not Hermitian");
        run.observable_names.push_back(name);
        oc.push_back({{"name", name}, {"op", c}});
    };
    if (jo.is_object()) {
        for (const auto& [name, op] : jo.items()) add_obs(name, op, "run.observables." + name);
    } else if (jo.is_array()) {
        for (std::size_t i = 0; i < jo.size(); ++i) {
            const std::string f = "run.observables[" + std::to_string(i) + "]";
            check_keys(jo[i], f, {"name", "op"});
            if (!jo[i].contains("op")) fail(f, "missing op");
            const std::string name = jo[i].contains("name") ? get_string(jo[i]["name"], f + ".name") : "O" + std::to_string(i);
            add_obs(name, jo[i]["op"], f + ".op");
        }
    } else {
        fail("run.observables", "expected a list or an object");
    }
    if (run.observables.empty()) fail("run.observables", "at least one observable is required");
    rc["observables"] = oc;

    const json state = jr.contains("initial_state") ? jr["initial_state"] : json(std::string(static_cast<std::size_t>(n), '0'));
    run.psi0 = parse_state(state, n, "run.initial_state");
    rc["initial_state"] = state;

    run.plan.gamma_cap = jr.contains("gamma_cap") ? get_number(jr["gamma_cap"], "run.gamma_cap") : kDefaultGammaCap;
    if (!(run.plan.gamma_cap >= 1.0)) fail("run.gamma_cap", "must be at least 1");
    rc["gamma_cap"] = run.plan.gamma_cap;
    if (jr.contains("quad_panels")) {
        if (!jr["quad_panels"].is_number_integer() || jr["quad_panels"].get<int>() < 1)
            fail("run.quad_panels", "expected a positive integer");
        run.plan.quad_panels = jr["quad_panels"].get<int>();
    }
    rc["quad_panels"] = run.plan.quad_panels;
    run.plan.exact_coefficients =
        jr.contains("quadrature") && pick<bool>(jr["quadrature"], "run.quadrature", {{"trapezoid", false}, {"exact", true}});
    rc["quadrature"] = run.plan.exact_coefficients ? "exact" : "trapezoid";
    run.plan.mode = jr.contains("quasi_mode") ? pick<QuasiMode>(jr["quasi_mode"], "run.quasi_mode",
                                                                {{"full", QuasiMode::full}, {"incoherent", QuasiMode::incoherent}})
                                              : QuasiMode::full;
    rc["quasi_mode"] = run.plan.mode == QuasiMode::full ? "full" : "incoherent";
    run.history = jr.contains("history") ? pick<HistoryMode>(jr["history"], "run.history",
                                                             {{"post", HistoryMode::post_operation},
                                                              {"pre", HistoryMode::pre_operation}})
                                         : HistoryMode::post_operation;
    rc["history"] = run.history == HistoryMode::post_operation ? "post" : "pre";
    run.nmsse.noise = jr.contains("noise") ? pick<NoiseMethod>(jr["noise"], "run.noise",
                                                               {{"circulant", NoiseMethod::circulant},
                                                                {"pole_recursion", NoiseMethod::pole_recursion}})
                                           : NoiseMethod::circulant;
    rc["noise"] = run.nmsse.noise == NoiseMethod::circulant ? "circulant" : "pole_recursion";
    run.nmsse.memory = jr.contains("memory") ? pick<MemoryMethod>(jr["memory"], "run.memory",
                                                                  {{"pole_recursion", MemoryMethod::pole_recursion},
                                                                   {"history", MemoryMethod::history}})
                                             : MemoryMethod::pole_recursion;
    rc["memory"] = run.nmsse.memory == MemoryMethod::pole_recursion ? "pole_recursion" : "history";
    run.nmsse.convention = jr.contains("noise_convention")
                               ? pick<NoiseConvention>(jr["noise_convention"], "run.noise_convention",
                                                       {{"conjugate_bcf", NoiseConvention::conjugate_bcf},
                                                        {"bcf", NoiseConvention::bcf}})
                               : NoiseConvention::conjugate_bcf;
    rc["noise_convention"] = run.nmsse.convention == NoiseConvention::conjugate_bcf ? "conjugate_bcf" : "bcf";
    run.epsilon = jr.contains("epsilon") ? get_number(jr["epsilon"], "run.epsilon") : 0.1;
    run.delta = jr.contains("delta") ? get_number(jr["delta"], "run.delta") : 0.05;
    rc["epsilon"] = run.epsilon;
    rc["delta"] = run.delta;
    canon["run"] = rc;
    try {
        run.validate();
    } catch (const std::invalid_argument& e) {
        fail("run", e.what());
    }

    // output
    json outc{{"directory", cfg.output_directory}, {"formats", cfg.formats}};
    if (j.contains("output")) {
        const json& jo2 = j["output"];
        check_keys(jo2, "output", {"directory", "formats"});
        if (jo2.contains("directory")) cfg.output_directory = get_string(jo2["directory"], "output.directory");
        if (jo2.contains("formats")) {
            if (!jo2["formats"].is_array()) fail("output.formats", "expected a list");
            cfg.formats.clear();
            for (std::size_t i = 0; i < jo2["formats"].size(); ++i) {
                const std::string f = get_string(jo2["formats"][i], "output.formats[" + std::to_string(i) + "]");
                if (f != "csv" && f != "json") fail("output.formats[" + std::to_string(i) + "]", "expected csv or json");
                cfg.formats.push_back(f);
            }
        }
        outc = {{"directory", cfg.output_directory}, {"formats", cfg.formats}};
    }
    canon["output"] = outc;

    // sweep
    if (j.contains("sweep")) {
        cfg.has_sweep = true;
        const json& js = j["sweep"];
        check_keys(js, "sweep", {"cutoffs"});
        json cc = json::array();
        if (js.contains("cutoffs")) {
            if (!js["cutoffs"].is_array()) fail("sweep.cutoffs", "expected a list");
            for (std::size_t i = 0; i < js["cutoffs"].size(); ++i) {
                const std::string f = "sweep.cutoffs[" + std::to_string(i) + "]";
                const json& e = js["cutoffs"][i];
                check_keys(e, f, {"omega_c", "poles", "single_pole_scale", "convention"});
                if (!e.contains("omega_c")) fail(f + ".omega_c", "missing");
                CutoffBath cb;
                cb.omega_c = get_number(e["omega_c"], f + ".omega_c");
                json entry{{"omega_c", cb.omega_c}};
                if (e.contains("poles")) {
                    bool minus = false;
                    if (e.contains("convention")) minus = pick<bool>(e["convention"], f + ".convention", {{"plus", false}, {"minus", true}});
                    json pc;
                    cb.bath = parse_poles(e["poles"], std::max<std::size_t>(S.size(), 1), minus, f + ".poles", pc);
                    entry["poles"] = pc;
                } else if (e.contains("single_pole_scale")) {
                    const double scale = get_number(e["single_pole_scale"], f + ".single_pole_scale");
                    try {
                        cb.bath = single_pole_cutoff(cb.omega_c, scale);
                    } catch (const std::invalid_argument& err) {
                        fail(f, err.what());
                    }
                    entry["single_pole_scale"] = scale;
                } else {
                    std::ostringstream os;
                    os << "missing pole table for cutoff omega_c = " << cb.omega_c;
                    fail(f, os.str());
                }
                if (!cb.bath.empty() && cb.bath.channels() != S.size()) fail(f, "pole table channel count does not match the couplings");
                cfg.cutoffs.push_back(std::move(cb));
                cc.push_back(entry);
            }
        }
        canon["sweep"] = {{"cutoffs", cc}};
    }
    return cfg;
}

ExperimentConfig parse_config_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("malformed config: ") + e.what());
    }
    return parse_config(j);
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string serialize_config(const ExperimentConfig& config) { return config.canonical.dump(2) + "\n"; }

std::string config_hash(const ExperimentConfig& config) {
    const std::string s = config.canonical.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace nmpec

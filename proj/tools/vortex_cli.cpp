#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <omp.h>
#include <openssl/evp.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "verify_suite.hpp"
#include "vortex/biot_savart.hpp"
#include "vortex/correction.hpp"
#include "vortex/dynamics.hpp"
#include "vortex/field.hpp"
#include "vortex/geometry.hpp"
#include "vortex/profiles.hpp"

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;
using namespace vortex;

namespace {

constexpr const char* kVersion = "1.0.0";

std::string sha256_hex(const std::string& data)
{
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
    std::string out;
    char buf[3];
    for (unsigned i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", md[i]);
        out += buf;
    }
    return out;
}

std::string file_sha256(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return sha256_hex(ss.str());
}

// ---- schema validation ----

enum class Kind { number, integer, boolean, string, object, array };

struct Rule {
    std::string key;
    Kind kind;
    bool required = false;
    json fallback = nullptr;
    std::optional<double> gt, ge, le, lt;
    std::vector<std::string> choices;
};

const char* kind_name(Kind k)
{
    switch (k) {
    case Kind::number: return "a number";
    case Kind::integer: return "an integer";
    case Kind::boolean: return "a boolean";
    case Kind::string: return "a string";
    case Kind::object: return "an object";
    case Kind::array: return "an array";
    }
    return "?";
}

bool kind_matches(const json& v, Kind k)
{
    switch (k) {
    case Kind::number: return v.is_number();
    case Kind::integer: return v.is_number_integer();
    case Kind::boolean: return v.is_boolean();
    case Kind::string: return v.is_string();
    case Kind::object: return v.is_object();
    case Kind::array: return v.is_array();
    }
    return false;
}

std::string num(double v)
{
    std::ostringstream s;
    s << v;
    return s.str();
}

void validate(json& obj, const std::vector<Rule>& rules, const std::string& path, bool allow_extra = false)
{
    if (!obj.is_object()) throw ConfigError(path + ": expected an object");
    for (const auto& r : rules) {
        std::string p = path + "." + r.key;
        if (!obj.contains(r.key)) {
            if (r.required) throw ConfigError(p + ": missing required field");
            if (!r.fallback.is_null()) obj[r.key] = r.fallback;
            continue;
        }
        const json& v = obj[r.key];
        if (!kind_matches(v, r.kind)) throw ConfigError(p + ": expected " + kind_name(r.kind));
        if (v.is_number()) {
            double x = v.get<double>();
            if (!std::isfinite(x)) throw ConfigError(p + ": must be finite");
            if (r.gt && !(x > *r.gt)) throw ConfigError(p + ": must be > " + num(*r.gt));
            if (r.ge && !(x >= *r.ge)) throw ConfigError(p + ": must be >= " + num(*r.ge));
            if (r.lt && !(x < *r.lt)) throw ConfigError(p + ": must be < " + num(*r.lt));
            if (r.le && !(x <= *r.le)) throw ConfigError(p + ": must be <= " + num(*r.le));
        }
        if (!r.choices.empty() && std::find(r.choices.begin(), r.choices.end(), v.get<std::string>()) == r.choices.end()) {
            std::string all;
            for (const auto& c : r.choices) all += (all.empty() ? "" : ", ") + c;
            throw ConfigError(p + ": must be one of " + all);
        }
    }
    if (!allow_extra)
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            bool known = std::any_of(rules.begin(), rules.end(), [&](const Rule& r) { return r.key == it.key(); });
            if (!known) throw ConfigError(path + "." + it.key() + ": unknown field");
        }
}

Rule number(std::string k, bool req, json def = nullptr) { return {std::move(k), Kind::number, req, std::move(def)}; }
Rule positive(std::string k, bool req, json def = nullptr)
{
    Rule r = number(std::move(k), req, std::move(def));
    r.gt = 0;
    return r;
}
Rule integer(std::string k, bool req, json def, double ge)
{
    Rule r{std::move(k), Kind::integer, req, std::move(def)};
    r.ge = ge;
    return r;
}

void validate_curve(json& c, const std::string& path)
{
    Rule type{"type", Kind::string, true};
    type.choices = {"circle", "ellipse", "perturbed-ring", "from-file"};
    Rule zeta = number("zeta", false, 0.0);
    zeta.ge = 0;
    zeta.le = 1;
    validate(c, {type, positive("R", false), positive("a", false), positive("b", false), integer("n", false, nullptr, 0),
                 number("amplitude", false), zeta, {"file", Kind::string}, integer("N", false, 256, 16)},
             path);
    if (c["type"] == "from-file" && !c.contains("file")) throw ConfigError(path + ".file: missing required field");
}

void validate_quadrature(json& q, const std::string& path)
{
    Rule order = integer("extrapolation_order", false, 2, 1);
    order.le = 2;
    validate(q, {{"ladder_spacings", Kind::array}, {"epsilon_ladder", Kind::array}, order, positive("abs_tol", false, 1e-3)},
             path);
    for (const char* k : {"ladder_spacings", "epsilon_ladder"})
        if (q.contains(k))
            for (std::size_t i = 0; i < q[k].size(); ++i)
                if (!q[k][i].is_number() || !(q[k][i].get<double>() > 0))
                    throw ConfigError(path + "." + k + "[" + std::to_string(i) + "]: expected a positive number");
}

CurveSpec curve_spec(const json& c)
{
    CurveSpec s;
    s.type = c["type"].get<std::string>();
    for (auto it = c.begin(); it != c.end(); ++it)
        if (it.value().is_number()) s.params[it.key()] = it.value().get<double>();
    if (c.contains("file")) s.file = c["file"].get<std::string>();
    return s;
}

QuadratureSpec quadrature_spec(const json& cfg)
{
    QuadratureSpec q;
    if (!cfg.contains("quadrature")) return q;
    const json& j = cfg["quadrature"];
    if (j.contains("ladder_spacings")) q.ladder_spacings = j["ladder_spacings"].get<std::vector<double>>();
    if (j.contains("epsilon_ladder")) q.epsilon_ladder = j["epsilon_ladder"].get<std::vector<double>>();
    q.extrapolation_order = j.value("extrapolation_order", 2);
    q.abs_tol = j.value("abs_tol", 1e-3);
    return q;
}

// "ellipse:a=2,b=1,N=512" or "from-file:path.csv"
json parse_curve_string(const std::string& s)
{
    json c;
    auto colon = s.find(':');
    c["type"] = s.substr(0, colon);
    if (colon == std::string::npos) return c;
    std::string rest = s.substr(colon + 1);
    if (c["type"] == "from-file") {
        c["file"] = rest;
        return c;
    }
    std::stringstream ss(rest);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto eq = item.find('=');
        if (eq == std::string::npos) throw ConfigError("--curve: expected key=value, got '" + item + "'");
        std::string key = item.substr(0, eq), val = item.substr(eq + 1);
        try {
            c[key] = json::parse(val);
        } catch (const json::exception&) {
            c[key] = val;
        }
    }
    return c;
}

json literal(const std::string& v)
{
    try {
        return json::parse(v);
    } catch (const json::exception&) {
        return v;
    }
}

// ---- output helpers ----

struct Run {
    fs::path out;
    bool quiet = false;
    json config;
    std::vector<fs::path> outputs;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    FILE* open(const std::string& name)
    {
        fs::path p = out / name;
        FILE* f = std::fopen(p.c_str(), "w");
        if (!f) throw ConfigError("cannot write " + p.string());
        outputs.push_back(p);
        return f;
    }
    void note(const std::string& s) const
    {
        if (!quiet) std::cout << s << "\n";
    }
};

void write_manifest(Run& run, const std::string& sub, const std::string& status, const std::string& message = "")
{
    json m;
    m["tool"] = "vortex";
    m["version"] = kVersion;
    m["subcommand"] = sub;
    m["status"] = status;
    if (!message.empty()) m["message"] = message;
    m["config"] = run.config;
    m["config_sha256"] = sha256_hex(run.config.dump());
    m["threads"] = omp_get_max_threads();
    m["wall_time_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - run.start).count();
    json outs = json::array();
    for (const auto& p : run.outputs)
        if (fs::exists(p)) outs.push_back({{"path", p.filename().string()}, {"sha256", file_sha256(p)}});
    m["outputs"] = outs;
    std::ofstream(run.out / (sub + "_manifest.json")) << m.dump(2) << "\n";
}

void write_json(Run& run, const std::string& name, const json& j)
{
    fs::path p = run.out / name;
    std::ofstream(p) << j.dump(2) << "\n";
    run.outputs.push_back(p);
}

// ---- subcommands ----

int cmd_evolve(Run& run)
{
    json& c = run.config;
    Rule law{"law", Kind::string, false, "LIA"};
    law.choices = {"LIA", "FULL", "lia", "full"};
    validate(c, {{"curve", Kind::object, true}, number("gamma", true), positive("nu", true), positive("t0", false),
                 positive("t1", true), law, integer("steps", false, 100, 1), integer("checkpoint_every", false, 0, 0),
                 integer("resample_every", false, 10, 0), {"quadrature", Kind::object}},
             "$");
    validate_curve(c["curve"], "$.curve");
    if (c.contains("quadrature")) validate_quadrature(c["quadrature"], "$.quadrature");
    double nu = c["nu"], gamma = c["gamma"];
    if (!c.contains("t0")) c["t0"] = 1e-6 / nu;
    double t0 = c["t0"], t1 = c["t1"];
    if (!(t1 > t0)) throw ConfigError("$.t1: must exceed t0");
    if (!(nu * t1 < 1)) throw ConfigError("$.t1: nu*t1 must be below 1");
    ClosedCurve curve = make_curve(curve_spec(c["curve"]), c["curve"]["N"].get<int>());
    DtControl dt;
    dt.steps = c["steps"];
    dt.checkpoint_every = c["checkpoint_every"];
    dt.resample_every = c["resample_every"];
    dt.quadrature = quadrature_spec(c);
    dt.quadrature.ladder(curve.spacing());
    EvolutionState st(curve, t0, parse_law(c["law"]));
    st.history.push_back({t0, curve});
    auto res = evolve_curve(st, gamma, nu, t1, dt);
    int idx = 0;
    for (const auto& cp : res.history) {
        char name[64];
        std::snprintf(name, sizeof name, "checkpoint_%04d.csv", idx++);
        ClosedCurve cc = resample_arclength(cp.curve.nodes, cp.curve.size());
        FrameField f = compute_frenet(cc);
        FILE* out = run.open(name);
        std::fprintf(out, "# t=%.12e\ns,x,y,z,kappa,tau\n", cp.t);
        for (int j = 0; j < cc.size(); ++j)
            std::fprintf(out, "%.12e,%.12e,%.12e,%.12e,%.12e,%.12e\n", j * cc.spacing(), cc.nodes[j].x, cc.nodes[j].y,
                         cc.nodes[j].z, f.kappa[j], f.tau[j]);
        std::fclose(out);
    }
    run.note("evolve: " + std::to_string(res.history.size()) + " checkpoints, arclength drift " +
             num(res.max_length_drift));
    return 0;
}

int cmd_field(Run& run)
{
    json& c = run.config;
    Rule safety = positive("tube_safety", false, 0.5);
    safety.le = 1;
    validate(c, {{"curve", Kind::object, true}, number("gamma", true), positive("nu", true), positive("t", true),
                 {"grid", Kind::object, true}, {"dipole", Kind::boolean, false, true},
                 {"correction", Kind::boolean, false, false}, integer("stations", false, 8, 1), safety,
                 {"quadrature", Kind::object}},
             "$");
    validate_curve(c["curve"], "$.curve");
    if (c.contains("quadrature")) validate_quadrature(c["quadrature"], "$.quadrature");
    json& g = c["grid"];
    Rule kind{"kind", Kind::string, true};
    kind.choices = {"box", "tube"};
    validate(g, {kind, integer("nx", false, 32, 1), integer("ny", false, 32, 1), integer("nz", false, 32, 1),
                 {"origin", Kind::array}, positive("spacing", false), integer("ns", false, 64, 1),
                 integer("nrho", false, 41, 1), integer("ntheta", false, 32, 1), positive("rho_max", false, 8.0)},
             "$.grid");
    FlowParams p{c["gamma"], c["nu"], c["t"]};
    check_expansion_regime(p.nu_t());
    Filament fil(make_curve(curve_spec(c["curve"]), c["curve"]["N"].get<int>()));
    TubeChart chart{tube_radius(fil.curve(), fil.frames(), c["tube_safety"]).R};
    ExpansionOptions opt;
    opt.dipole = c["dipole"];
    CorrectionField corr;
    if (c["correction"].get<bool>()) {
        if (std::abs(p.ratio()) > 0.25) throw ConfigError("$.gamma: Gamma/nu must not exceed 0.25 when correction is on");
        corr = build_correction_field(fil, p.gamma, p.nu, c["stations"], quadrature_spec(c));
        opt.correction = &corr;
    }
    if (g["kind"] == "box") {
        Vec3 lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
        for (const auto& x : fil.curve().nodes)
            for (int k = 0; k < 3; ++k) {
                lo[k] = std::min(lo[k], x[k] - chart.R);
                hi[k] = std::max(hi[k], x[k] + chart.R);
            }
        int nx = g["nx"], ny = g["ny"], nz = g["nz"];
        double h = 0;
        for (int k = 0; k < 3; ++k) h = std::max(h, (hi[k] - lo[k]) / std::max(1, std::vector<int>{nx, ny, nz}[k] - 1));
        if (g.contains("spacing")) h = g["spacing"];
        Vec3 origin = lo;
        if (g.contains("origin")) {
            if (g["origin"].size() != 3) throw ConfigError("$.grid.origin: expected three numbers");
            for (int k = 0; k < 3; ++k) {
                if (!g["origin"][k].is_number())
                    throw ConfigError("$.grid.origin[" + std::to_string(k) + "]: expected a number");
                origin[k] = g["origin"][k].get<double>();
            }
        }
        BoxGrid grid = assemble_box_grid(fil, chart, p, origin, h, nx, ny, nz, opt);
        fs::path path = run.out / "field.vtk";
        write_vtk(grid, path.string());
        run.outputs.push_back(path);
    } else {
        TubeGrid grid = assemble_tube_grid(fil, chart, p, g["ns"], g["nrho"], g["ntheta"], g["rho_max"], opt);
        fs::path path = run.out / "field_tube.csv";
        write_tube_csv(grid, path.string());
        run.outputs.push_back(path);
    }
    run.note("field: tube radius " + num(chart.R) + ", written " + run.outputs.back().filename().string());
    return 0;
}

int cmd_desing(Run& run)
{
    json& c = run.config;
    validate(c, {{"curve", Kind::object, true}, number("gamma", false, 1.0), integer("samples", false, 16, 1),
                 {"quadrature", Kind::object}},
             "$");
    validate_curve(c["curve"], "$.curve");
    if (c.contains("quadrature")) validate_quadrature(c["quadrature"], "$.quadrature");
    Filament fil(make_curve(curve_spec(c["curve"]), c["curve"]["N"].get<int>()));
    QuadratureSpec q = quadrature_spec(c);
    int k = c["samples"];
    double gamma = c["gamma"];
    std::vector<DesingResult> res(k);
    for (int i = 0; i < k; ++i) res[i] = desingularized_velocity(fil, gamma, fil.length() * i / k, q);
    FILE* f = run.open("desing.csv");
    std::fprintf(f, "s,vx,vy,vz,diag\n");
    for (int i = 0; i < k; ++i)
        std::fprintf(f, "%.12e,%.12e,%.12e,%.12e,%.6e\n", fil.length() * i / k, res[i].v.x, res[i].v.y, res[i].v.z,
                     res[i].diagnostic);
    std::fclose(f);
    run.note("desing: " + std::to_string(k) + " samples on a curve of length " + num(fil.length()));
    return 0;
}

int cmd_tables(Run& run)
{
    json& c = run.config;
    Rule rho_max = positive("rho_max", false, 10.0);
    rho_max.le = 12;
    validate(c, {rho_max, positive("step", false, 0.1)}, "$");
    double rm = c["rho_max"], h = c["step"];
    int n = static_cast<int>(std::floor(rm / h + 1e-9));
    FILE* f = run.open("tables.csv");
    std::fprintf(f, "# tolerances: F abs 1e-10 (exp-sinh tail), H abs 1e-9 (nested quadrature, rho_cut 12), G and "
                    "Omega0 and V0 closed form\n");
    std::fprintf(f, "rho,F,G,H,Omega0,V0\n");
    for (int i = 0; i <= n; ++i) {
        double r = i * h;
        std::fprintf(f, "%.6f,%.12e,%.12e,%.12e,%.12e,%.12e\n", r, special_F(r), special_G(r), special_H(r), omega0(r),
                     v0(r));
    }
    std::fclose(f);
    run.note("tables: " + std::to_string(n + 1) + " rows");
    return 0;
}

int cmd_correction(Run& run)
{
    json& c = run.config;
    validate(c, {positive("kappa", true), number("vstar_n", false, 0.0), number("vstar_b", false, 0.0),
                 number("gamma", true), positive("nu", true)},
             "$");
    double gamma = c["gamma"], nu = c["nu"];
    if (std::abs(gamma / nu) > 0.25) throw ConfigError("$.gamma: Gamma/nu must not exceed 0.25");
    auto force = build_force_modes(c["kappa"], c["vstar_n"], c["vstar_b"], gamma, nu);
    auto pair = solve_omega1_2(force);
    FILE* f = run.open("correction.csv");
    std::fprintf(f, "rho,Omega1c,Omega1s,V1rc,V1rs,V1thc,V1ths\n");
    for (int i = 0; i <= 200; ++i) {
        double r = 0.05 * i;
        std::fprintf(f, "%.4f,%.12e,%.12e,%.12e,%.12e,%.12e,%.12e\n", r, pair.omega_c(r), pair.omega_s(r), pair.vr_c(r),
                     pair.vr_s(r), pair.vth_c(r), pair.vth_s(r));
    }
    std::fclose(f);
    json side{{"iterations", pair.iterations},
              {"contraction_estimate", pair.contraction_estimate},
              {"weighted_norm", pair.weighted_norm},
              {"envelope_cos", {{"C", force.envelope_c.C}, {"M", force.envelope_c.M}}},
              {"envelope_sin", {{"C", force.envelope_s.C}, {"M", force.envelope_s.M}}}};
    write_json(run, "correction.json", side);
    run.note("correction: " + std::to_string(pair.iterations) + " sweeps, contraction " + num(pair.contraction_estimate));
    return 0;
}

int cmd_ring(Run& run)
{
    json& c = run.config;
    validate(c, {positive("R", false, 1.0), number("gamma", false, 1.0), positive("nu", false, 1.0),
                 positive("t", false, 1e-4), integer("N", false, 256, 16), {"dipole", Kind::boolean, false, false}},
             "$");
    double R = c["R"], gamma = c["gamma"];
    FlowParams p{gamma, c["nu"], c["t"]};
    check_expansion_regime(p.nu_t());
    Filament fil(make_circle(R, c["N"]));
    TubeChart chart{tube_radius(fil.curve(), fil.frames(), 1.0).R};
    LocalFrame fr = fil.frame_at(0);
    TubeQuadratureOptions o;
    o.dipole = c["dipole"];
    double q = dot(tube_velocity_quadrature(fil, chart, p, fr.x, o), fr.b);
    double predicted = center_velocity_coefficient(1 / R, gamma, p.nu_t()) + ring_vstar(R, gamma);
    double gap = std::abs(q - predicted) / std::abs(predicted);
    json r{{"predicted", predicted}, {"quadrature", q}, {"relative_gap", gap}};
    write_json(run, "ring.json", r);
    if (!run.quiet) std::printf("predicted %.10f  quadrature %.10f  relative gap %.3e\n", predicted, q, gap);
    return 0;
}

int cmd_verify(Run& run)
{
    validate(run.config, {}, "$");
    json checks = json::array();
    int failed = 0;
    auto res = verify::run_all([&](const verify::Check& ch) {
        if (!run.quiet)
            std::printf("%s %2d %-40s %s\n", ch.pass ? "PASS" : "FAIL", ch.id, ch.name.c_str(), ch.detail.c_str());
        std::fflush(stdout);
    });
    for (const auto& ch : res) {
        if (!ch.pass) ++failed;
        checks.push_back(
            {{"id", ch.id}, {"name", ch.name}, {"pass", ch.pass}, {"detail", ch.detail}, {"seconds", ch.seconds}});
    }
    json report{{"checks", checks}, {"passed", static_cast<int>(res.size()) - failed}, {"failed", failed}};
    write_json(run, "verify_report.json", report);
    return failed == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"vortex filament expansion toolkit"};
    app.require_subcommand(1);
    std::string config_path, out_dir = "vortex_out";
    int threads = 0;
    bool quiet = false;
    app.add_option("--config", config_path, "JSON configuration file");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--threads", threads, "worker threads")->check(CLI::NonNegativeNumber);
    app.add_flag("--quiet", quiet, "suppress console output");
    app.set_version_flag("--version", kVersion);

    // flag name -> config key
    std::map<std::string, std::map<std::string, std::string>> flag_values;
    auto add = [&](CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
        sub->add_option_function<std::string>(
            "--" + flag, [&flag_values, sub, key](const std::string& v) { flag_values[sub->get_name()][key] = v; }, help);
    };
    std::map<std::string, CLI::App*> subs;
    for (auto [name, help] : std::vector<std::pair<std::string, std::string>>{
             {"evolve", "evolve a closed filament under LIA or the full law"},
             {"field", "assemble the vorticity expansion on a grid"},
             {"desing", "desingularized self-induced velocity along a curve"},
             {"tables", "tabulate the radial special functions"},
             {"correction", "solve the second-order correction fixed point"},
             {"ring", "ring-centre speed: prediction vs tube quadrature"},
             {"verify", "run the acceptance suite"}}) {
        subs[name] = app.add_subcommand(name, help);
        subs[name]->fallthrough();
    }
    for (const char* k : {"gamma", "nu", "t0", "t1", "law", "steps"}) add(subs["evolve"], k, k, k);
    add(subs["evolve"], "checkpoint-every", "checkpoint_every", "checkpoint interval in steps");
    add(subs["evolve"], "curve", "curve", "curve spec, e.g. circle:R=1,N=128");
    for (const char* k : {"gamma", "nu", "t"}) add(subs["field"], k, k, k);
    add(subs["field"], "curve", "curve", "curve spec");
    add(subs["desing"], "curve", "curve", "curve spec, e.g. ellipse:a=2,b=1,N=512");
    add(subs["desing"], "gamma", "gamma", "circulation");
    add(subs["desing"], "samples", "samples", "number of equispaced s values");
    add(subs["tables"], "rho-max", "rho_max", "largest rho");
    add(subs["tables"], "step", "step", "rho step");
    add(subs["correction"], "kappa", "kappa", "curvature");
    add(subs["correction"], "vstar-n", "vstar_n", "normal component of v*");
    add(subs["correction"], "vstar-b", "vstar_b", "binormal component of v*");
    add(subs["correction"], "gamma", "gamma", "circulation");
    add(subs["correction"], "nu", "nu", "viscosity");
    for (const char* k : {"R", "gamma", "nu", "t", "N"}) add(subs["ring"], k, k, k);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    std::string sub = app.get_subcommands().front()->get_name();

    Run run;
    run.quiet = quiet;
    run.out = out_dir;
    try {
        if (threads > 0) omp_set_num_threads(threads);
        json cfg = json::object();
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw ConfigError("--config: cannot open " + config_path);
            try {
                cfg = json::parse(in);
            } catch (const json::parse_error& e) {
                throw ConfigError(std::string("--config: invalid JSON: ") + e.what());
            }
            if (!cfg.is_object()) throw ConfigError("$: expected an object");
        }
        for (const auto& [key, value] : flag_values[sub])
            cfg[key] = (key == "curve") ? parse_curve_string(value) : literal(value);
        run.config = cfg;
        fs::create_directories(run.out);
        int code = 0;
        if (sub == "evolve") code = cmd_evolve(run);
        else if (sub == "field") code = cmd_field(run);
        else if (sub == "desing") code = cmd_desing(run);
        else if (sub == "tables") code = cmd_tables(run);
        else if (sub == "correction") code = cmd_correction(run);
        else if (sub == "ring") code = cmd_ring(run);
        else code = cmd_verify(run);
        write_manifest(run, sub, code == 0 ? "ok" : "checks failed");
        return code;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        try {
            if (fs::is_directory(run.out)) write_manifest(run, sub, "error", e.what());
        } catch (...) {
        }
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}

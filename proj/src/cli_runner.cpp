#include "trotter/cli_runner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>

#include "trotter/dense_operator.hpp"
#include "trotter/semiclassics.hpp"
#include "trotter/spectral_toolkit.hpp"

namespace trotter {

using nlohmann::json;

const std::vector<std::string>& known_commands() {
    static const std::vector<std::string> cmds{"spectrum", "effective-ham", "defect",  "semiclassics", "portrait",
                                               "overlap-map", "rabi",        "sweep",   "noise"};
    return cmds;
}

std::string code_version() {
#ifdef TROTTER_VERSION
    return std::string("trotter ") + TROTTER_VERSION;
#else
    return "trotter unknown";
#endif
}

// ---------------------------------------------------------------- parsing

namespace {

// Reads the keys of one JSON object and rejects whatever was not asked for.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + "expected an object");
    }

    void num(const char* key, double& out) {
        if (const json* v = find(key)) {
            if (v->is_null()) {
                out = std::numeric_limits<double>::quiet_NaN();
            } else if (v->is_number()) {
                out = v->get<double>();
            } else {
                throw ConfigError(where(key) + "expected a number");
            }
        }
    }
    template <class Int>
    void integer(const char* key, Int& out) {
        if (const json* v = find(key)) {
            if (!v->is_number_integer()) throw ConfigError(where(key) + "expected an integer");
            if (std::is_unsigned_v<Int> && v->is_number_integer() && !v->is_number_unsigned())
                throw ConfigError(where(key) + "expected a non-negative integer");
            out = v->get<Int>();
        }
    }
    void str(const char* key, std::string& out) {
        if (const json* v = find(key)) {
            if (!v->is_string()) throw ConfigError(where(key) + "expected a string");
            out = v->get<std::string>();
        }
    }
    void boolean(const char* key, bool& out) {
        if (const json* v = find(key)) {
            if (!v->is_boolean()) throw ConfigError(where(key) + "expected true or false");
            out = v->get<bool>();
        }
    }
    void num_list(const char* key, std::vector<double>& out) {
        if (const json* v = find(key)) {
            if (!v->is_array()) throw ConfigError(where(key) + "expected an array of numbers");
            out.clear();
            for (const auto& x : *v) {
                if (!x.is_number()) throw ConfigError(where(key) + "expected an array of numbers");
                out.push_back(x.get<double>());
            }
        }
    }
    void int_list(const char* key, std::vector<int>& out) {
        if (const json* v = find(key)) {
            if (!v->is_array()) throw ConfigError(where(key) + "expected an array of integers");
            out.clear();
            for (const auto& x : *v) {
                if (!x.is_number_integer()) throw ConfigError(where(key) + "expected an array of integers");
                out.push_back(x.get<int>());
            }
        }
    }
    const json* object(const char* key) { return find(key); }
    std::string child(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError("unknown key '" + child(it.key().c_str()) + "'");
    }

private:
    const json* find(const char* key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }
    std::string where(const char* key = nullptr) const {
        return "config field '" + (key ? child(key) : (path_.empty() ? std::string("<root>") : path_)) + "': ";
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void read_potential(const json& j, const std::string& path, PotentialConfig& p) {
    ObjectReader r(j, path);
    r.str("kind", p.kind);
    r.num("P", p.P);
    r.num("alpha", p.alpha);
    r.num("w", p.w);
    r.num("dn", p.dn);
    r.num("tilt_length", p.tilt_length);
    r.num_list("values", p.values);
    r.str("file", p.file);
    r.finish();
}

void read_chain(const json& j, const std::string& path, ChainConfig& c) {
    ObjectReader r(j, path);
    r.integer("L", c.L);
    r.num("J", c.J);
    r.num("a", c.a);
    if (const json* p = r.object("potential")) read_potential(*p, r.child("potential"), c.potential);
    r.finish();
}

void read_plan(const json& j, const std::string& path, PlanConfig& p) {
    ObjectReader r(j, path);
    r.num("dt", p.dt);
    r.str("ordering", p.ordering);
    r.num("split_alpha", p.split_alpha);
    r.finish();
}

void read_experiment(const json& j, const std::string& path, ExperimentSection& e) {
    ObjectReader r(j, path);
    r.num("P", e.P);
    r.num("w", e.w);
    r.num("dn", e.dn);
    r.num("alpha", e.alpha);
    r.num("tilt_length", e.tilt_length);
    r.integer("doublet_index", e.doublet_index);
    r.num("noise_level", e.noise_level);
    r.integer("M", e.M);
    r.integer("dM", e.dM);
    r.num_list("dt_grid", e.dt_grid);
    r.boolean("tune_alpha", e.tune_alpha);
    r.num("alpha_lo", e.alpha_lo);
    r.num("alpha_hi", e.alpha_hi);
    r.finish();
}

void read_semiclassics(const json& j, const std::string& path, SemiclassicsSection& s) {
    ObjectReader r(j, path);
    r.str("kinetic", s.kinetic);
    r.str("boundary", s.boundary);
    r.num("x_bottom", s.x_bottom);
    r.num("partner_x_bottom", s.partner_x_bottom);
    r.num("e_min", s.e_min);
    r.num("e_max", s.e_max);
    r.num_list("energies", s.energies);
    r.integer("samples", s.samples);
    r.finish();
}

Boundary boundary_from_string(const std::string& s) {
    if (s == "two_turning_points") return Boundary::two_turning_points;
    if (s == "hard_wall_left") return Boundary::hard_wall_left;
    if (s == "hard_wall_right") return Boundary::hard_wall_right;
    throw ConfigError("config field 'semiclassics.boundary': unknown value '" + s + "'");
}

std::string boundary_name(Boundary b) {
    switch (b) {
    case Boundary::two_turning_points: return "two_turning_points";
    case Boundary::hard_wall_left: return "hard_wall_left";
    case Boundary::hard_wall_right: return "hard_wall_right";
    }
    return "two_turning_points";
}

json nan_to_null(double x) { return std::isnan(x) ? json(nullptr) : json(x); }

}  // namespace

RunConfig parse_config(const json& j) {
    RunConfig c;
    ObjectReader r(j, "");
    r.str("command", c.command);
    r.str("output_dir", c.output_dir);
    r.integer("seed", c.seed);
    r.integer("workers", c.workers);
    r.str("operator_format", c.operator_format);
    if (const json* v = r.object("chain")) read_chain(*v, "chain", c.chain);
    if (const json* v = r.object("plan")) read_plan(*v, "plan", c.plan);
    if (const json* v = r.object("experiment")) read_experiment(*v, "experiment", c.experiment);
    if (const json* v = r.object("semiclassics")) read_semiclassics(*v, "semiclassics", c.semiclassics);
    if (const json* v = r.object("defect")) {
        ObjectReader d(*v, "defect");
        d.int_list("levels", c.defect.levels);
        d.num_list("dt_values", c.defect.dt_values);
        d.finish();
    }
    if (const json* v = r.object("overlap")) {
        ObjectReader o(*v, "overlap");
        o.num("h_ref", c.overlap.h_ref);
        o.finish();
    }
    if (const json* v = r.object("noise")) {
        ObjectReader n(*v, "noise");
        n.num("dt", c.noise.dt);
        n.num("phase_sigma", c.noise.phase_sigma);
        n.integer("trials", c.noise.trials);
        n.finish();
    }
    r.finish();
    return c;
}

json to_json(const RunConfig& c) {
    const auto& p = c.chain.potential;
    const auto& e = c.experiment;
    const auto& s = c.semiclassics;
    return json{
        {"command", c.command},
        {"output_dir", c.output_dir},
        {"seed", c.seed},
        {"workers", c.workers},
        {"operator_format", c.operator_format},
        {"chain",
         {{"L", c.chain.L},
          {"J", c.chain.J},
          {"a", c.chain.a},
          {"potential",
           {{"kind", p.kind},
            {"P", p.P},
            {"alpha", p.alpha},
            {"w", p.w},
            {"dn", p.dn},
            {"tilt_length", p.tilt_length},
            {"values", p.values},
            {"file", p.file}}}}},
        {"plan", {{"dt", c.plan.dt}, {"ordering", c.plan.ordering}, {"split_alpha", c.plan.split_alpha}}},
        {"experiment",
         {{"P", e.P},
          {"w", e.w},
          {"dn", e.dn},
          {"alpha", e.alpha},
          {"tilt_length", e.tilt_length},
          {"doublet_index", e.doublet_index},
          {"noise_level", e.noise_level},
          {"M", e.M},
          {"dM", e.dM},
          {"dt_grid", e.dt_grid},
          {"tune_alpha", e.tune_alpha},
          {"alpha_lo", e.alpha_lo},
          {"alpha_hi", e.alpha_hi}}},
        {"semiclassics",
         {{"kinetic", s.kinetic},
          {"boundary", s.boundary},
          {"x_bottom", s.x_bottom},
          {"partner_x_bottom", s.partner_x_bottom},
          {"e_min", nan_to_null(s.e_min)},
          {"e_max", nan_to_null(s.e_max)},
          {"energies", s.energies},
          {"samples", s.samples}}},
        {"defect", {{"levels", c.defect.levels}, {"dt_values", c.defect.dt_values}}},
        {"overlap", {{"h_ref", c.overlap.h_ref}}},
        {"noise", {{"dt", c.noise.dt}, {"phase_sigma", c.noise.phase_sigma}, {"trials", c.noise.trials}}},
    };
}

void apply_override(json& j, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not of the form key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(text);
    } catch (const json::exception&) {
        value = text;
    }
    json* node = &j;
    std::stringstream ss(key);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) {
        if (part.empty()) throw ConfigError("override '" + assignment + "' has an empty path component");
        parts.push_back(part);
    }
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        if (!node->is_object()) throw ConfigError("override '" + key + "': '" + parts[i] + "' is not an object");
        node = &(*node)[parts[i]];
        if (node->is_null()) *node = json::object();
    }
    if (!node->is_object()) throw ConfigError("override '" + key + "': parent is not an object");
    (*node)[parts.back()] = value;
}

ChainSpec RunConfig::chain_spec() const {
    const auto& p = chain.potential;
    PotentialFamily fam;
    try {
        switch (potential_kind_from_string(p.kind)) {
        case PotentialKind::cosine: fam = PotentialFamily::cosine(p.P); break;
        case PotentialKind::linear: fam = PotentialFamily::linear(p.alpha); break;
        case PotentialKind::experimental:
            fam = PotentialFamily::experimental(p.P, p.w, p.dn, p.alpha, p.tilt_length);
            break;
        case PotentialKind::custom:
            fam = PotentialFamily::custom(p.values.empty() && !p.file.empty() ? load_potential_file(p.file) : p.values);
            break;
        }
        const int L = fam.kind == PotentialKind::custom ? static_cast<int>(fam.values.size()) : chain.L;
        ChainSpec spec = build_chain(L, chain.J, fam);
        spec.a = chain.a;
        return spec;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("chain: ") + e.what());
    }
}

TrotterPlan RunConfig::trotter_plan() const {
    TrotterPlan p;
    p.dt = plan.dt;
    try {
        p.ordering = ordering_from_string(plan.ordering);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config field 'plan.ordering': ") + e.what());
    }
    p.split_alpha = plan.split_alpha;
    return p;
}

ExperimentConfig RunConfig::experiment_config() const {
    ExperimentConfig x;
    x.L = chain.L;
    x.J = chain.J;
    x.P = experiment.P;
    x.w = experiment.w;
    x.dn = experiment.dn;
    x.alpha = experiment.alpha;
    x.tilt_length = experiment.tilt_length;
    x.doublet_index = experiment.doublet_index;
    x.noise_level = experiment.noise_level;
    x.seed = seed;
    x.M = experiment.M;
    x.dM = experiment.dM;
    x.dt_grid = experiment.dt_grid;
    const TrotterPlan p = trotter_plan();
    x.ordering = p.ordering;
    x.split_alpha = p.split_alpha;
    return x;
}

// ---------------------------------------------------------------- validation

Diagnostics validate(const RunConfig& c) {
    Diagnostics d;
    const auto& cmds = known_commands();
    if (std::find(cmds.begin(), cmds.end(), c.command) == cmds.end())
        d.errors.push_back("config field 'command': unknown command '" + c.command + "'");
    if (c.operator_format != "text" && c.operator_format != "binary")
        d.errors.push_back("config field 'operator_format': expected 'text' or 'binary'");
    if (c.workers < 0) d.errors.push_back("config field 'workers': must be >= 0");
    if (!(c.chain.J > 0.0)) d.errors.push_back("config field 'chain.J': must be positive");
    if (c.chain.L < 2 && c.chain.potential.kind != "custom") d.errors.push_back("config field 'chain.L': must be >= 2");
    if (!(c.plan.dt > 0.0)) d.errors.push_back("config field 'plan.dt': must be positive");
    try {
        const Ordering o = ordering_from_string(c.plan.ordering);
        if (o == Ordering::split && !(c.plan.split_alpha >= 0.0 && c.plan.split_alpha <= 1.0))
            d.errors.push_back("config field 'plan.split_alpha': must lie in [0, 1] for the split ordering");
    } catch (const std::invalid_argument& e) {
        d.errors.push_back(std::string("config field 'plan.ordering': ") + e.what());
    }
    try {
        kinetic_kind_from_string(c.semiclassics.kinetic);
    } catch (const std::invalid_argument&) {
        d.errors.push_back("config field 'semiclassics.kinetic': unknown kinetic kind '" + c.semiclassics.kinetic + "'");
    }
    try {
        boundary_from_string(c.semiclassics.boundary);
    } catch (const ConfigError& e) {
        d.errors.push_back(e.what());
    }
    if (c.semiclassics.samples < 2) d.errors.push_back("config field 'semiclassics.samples': must be >= 2");
    const auto& e = c.experiment;
    if (!(e.noise_level >= 0.0 && e.noise_level < 1.0))
        d.errors.push_back("config field 'experiment.noise_level': must lie in [0, 1)");
    if (e.M <= 0 || e.dM <= 0 || e.M % e.dM != 0)
        d.errors.push_back("config field 'experiment.M': must be a positive multiple of experiment.dM");
    for (double dt : e.dt_grid)
        if (!(dt > 0.0)) d.errors.push_back("config field 'experiment.dt_grid': entries must be positive");
    for (double dt : c.defect.dt_values)
        if (!(dt > 0.0)) d.errors.push_back("config field 'defect.dt_values': entries must be positive");
    if (c.noise.trials < 10) d.errors.push_back("config field 'noise.trials': must be >= 10");
    if (!(c.noise.phase_sigma >= 0.0)) d.errors.push_back("config field 'noise.phase_sigma': must be >= 0");
    if (!d.errors.empty()) return d;

    ChainSpec spec;
    try {
        spec = c.chain_spec();
    } catch (const ConfigError& ex) {
        d.errors.push_back(ex.what());
        return d;
    }
    const double J = spec.J, P = spec.potential_range();
    std::vector<double> dts{c.plan.dt};
    if (c.command == "sweep") dts = e.dt_grid;
    if (c.command == "noise") dts = {c.noise.dt};
    if (c.command == "defect") dts = c.defect.dt_values;
    for (double dt : dts) {
        std::ostringstream tag;
        tag << std::setprecision(17) << "dt=" << dt << ": ";
        if (J * dt >= 1.0) d.advisories.push_back(tag.str() + "J dt >= 1 (naive Trotter criterion)");
        if (P * dt >= 1.0) d.advisories.push_back(tag.str() + "P dt >= 1 (naive Trotter criterion)");
        if (J * dt / 4.0 >= 1.0)
            d.warnings.push_back(tag.str() + "J dt / 4 >= 1, effective Hamiltonian is not local");
    }
    return d;
}

// ---------------------------------------------------------------- artifacts

namespace {

class Artifacts {
public:
    Artifacts(const std::string& dir, RunResult& result) : dir_(dir), result_(result) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
    }

    std::ofstream open(const std::string& name) {
        const auto path = std::filesystem::path(dir_) / name;
        std::ofstream out(path);
        if (!out) throw ConfigError("cannot write '" + path.string() + "'");
        out << std::setprecision(17);
        result_.artifacts.push_back(name);
        return out;
    }
    std::string path(const std::string& name) {
        result_.artifacts.push_back(name);
        return (std::filesystem::path(dir_) / name).string();
    }
    void json_file(const std::string& name, const json& j) { open(name) << j.dump(2) << '\n'; }

private:
    std::string dir_;
    RunResult& result_;
};

std::string kind_name(TurningKind k) {
    switch (k) {
    case TurningKind::standard: return "standard";
    case TurningKind::anomalous: return "anomalous";
    case TurningKind::wall: return "wall";
    }
    return "standard";
}

void write_energies(std::ofstream&& out, const Eigen::VectorXd& E) {
    out << "index,energy\n";
    for (Eigen::Index i = 0; i < E.size(); ++i) out << i << ',' << E(i) << '\n';
}

void write_doublets(std::ofstream& out, const DoubletSearch& ds) {
    out << "index,lower,upper,E_mean,eta,epsilon,left_weight,right_weight,localisation\n";
    for (const auto& d : ds.doublets)
        out << d.index << ',' << d.lower << ',' << d.upper << ',' << d.E_mean << ',' << d.eta << ',' << d.epsilon
            << ',' << d.left_weight << ',' << d.right_weight << ',' << d.localisation << '\n';
}

void write_operator(Artifacts& art, const std::string& stem, const DenseOperator& op, const std::string& fmt) {
    const bool bin = fmt == "binary";
    save_operator(op, art.path(stem + (bin ? ".bin" : ".txt")), bin ? MatrixFormat::binary : MatrixFormat::text);
}

double default_x_bottom(const ChainSpec& spec) {
    const auto it = std::min_element(spec.h.begin(), spec.h.end());
    return static_cast<double>(it - spec.h.begin() + 1);
}

json peak_json(const SpectralPeak& p) {
    return {{"bin", p.bin}, {"omega", p.omega}, {"period", p.period}, {"amplitude", p.amplitude}, {"power", p.power}};
}

void check_trace(const RabiTrace& t) {
    if (t.norm_error > 1e-8) throw NumericalError("state norm drifted by " + std::to_string(t.norm_error));
}

// ---- commands

json cmd_spectrum(const RunConfig& c, Artifacts& art, std::vector<std::string>& warnings) {
    const ChainSpec spec = c.chain_spec();
    const double centre = 0.5 * (spec.L + 1);
    const SpectrumReport ex = diagonalize(spec);
    write_energies(art.open("energies.csv"), ex.energies);
    auto od = art.open("doublets.csv");
    write_doublets(od, find_doublets(ex, spec, centre));

    const TrotterPlan plan = c.trotter_plan();
    const EffectiveHamiltonian heff = effective_hamiltonian(spec, plan);
    if (heff.folding) warnings.push_back("folding: spectral width exceeds 2 pi / dt");
    for (const auto& w : heff.warnings) warnings.push_back(w);
    const SpectrumReport ef = diagonalize(heff, plan);
    write_energies(art.open("effective_energies.csv"), ef.energies);
    auto oe = art.open("effective_doublets.csv");
    write_doublets(oe, find_doublets(ef, spec, centre));
    return {{"levels", spec.L}, {"folding", heff.folding}};
}

json cmd_effective_ham(const RunConfig& c, Artifacts& art, std::vector<std::string>& warnings) {
    const ChainSpec spec = c.chain_spec();
    const TrotterPlan plan = c.trotter_plan();
    const DenseOperator U = step_unitary(spec, plan);
    if (U.tag_violation() > 1e-10) throw NumericalError("step unitary fails the unitarity check");
    const EffectiveHamiltonian heff = effective_hamiltonian(spec, plan);
    if (heff.folding) warnings.push_back("folding: spectral width exceeds 2 pi / dt");
    for (const auto& w : heff.warnings) warnings.push_back(w);
    write_operator(art, "unitary", U, c.operator_format);
    write_operator(art, "heff", heff.H, c.operator_format);
    write_energies(art.open("effective_energies.csv"), heff.energies);
    const LocalityProfile lp = locality_profile(heff.H);
    auto out = art.open("locality_profile.csv");
    out << "k,max_abs,fit_ratio\n";
    for (std::size_t k = 0; k < lp.max_abs.size(); ++k) out << k << ',' << lp.max_abs[k] << ',' << lp.fit_ratio << '\n';
    const Eigen::MatrixXcd H = hamiltonian_real(spec).cast<cplx>();
    return {{"fit_ratio", lp.fit_ratio},
            {"fit_k_min", lp.fit_k_min},
            {"fit_k_max", lp.fit_k_max},
            {"heff_minus_h_norm", spectral_norm(heff.H.m - H)},
            {"folding", heff.folding}};
}

json cmd_defect(const RunConfig& c, Artifacts& art, std::vector<std::string>& warnings) {
    const ChainSpec spec = c.chain_spec();
    const TrotterPlan base = c.trotter_plan();
    const DenseOperator D = bch_defect(ordering_operators(spec, base));
    write_operator(art, "bch_defect", D, c.operator_format);
    const SpectrumReport ex = diagonalize(spec);
    const Eigen::MatrixXcd H = hamiltonian_real(spec).cast<cplx>();
    for (int N : c.defect.levels)
        if (N < 0 || N >= spec.L) throw ConfigError("config field 'defect.levels': level " + std::to_string(N) + " out of range");

    auto out = art.open("defect.csv");
    out << "dt,N,delta_P,direct,C_N,flagged\n";
    auto err = art.open("heff_error.csv");
    err << "dt,heff_minus_h,heff_minus_h_minus_dt2_D\n";
    for (double dt : c.defect.dt_values) {
        TrotterPlan plan = base;
        plan.dt = dt;
        const EffectiveHamiltonian heff = effective_hamiltonian(spec, plan);
        if (heff.folding) warnings.push_back("folding at dt=" + std::to_string(dt));
        DenseOperator dH{heff.H.m - H, OperatorTag::hermitian};
        err << dt << ',' << spectral_norm(dH.m) << ',' << spectral_norm(dH.m - dt * dt * D.m) << '\n';
        const SpectrumReport ef = diagonalize(heff, plan);
        for (int N : c.defect.levels) {
            const ProbabilityDefect pd = probability_defect(N, ex, dH, spec.J * dt);
            out << dt << ',' << N << ',' << pd.delta_P << ',' << overlap_defect(N, ex, ef) << ',' << pd.C_N << ','
                << pd.flagged.size() << '\n';
        }
    }
    return {{"levels", c.defect.levels}, {"dt_values", c.defect.dt_values}};
}

json cmd_semiclassics(const RunConfig& c, Artifacts& art, std::vector<std::string>& warnings) {
    const ChainSpec spec = c.chain_spec();
    const auto& s = c.semiclassics;
    const KineticKind kind = kinetic_kind_from_string(s.kinetic);
    const double dt = c.plan.dt;
    const PhaseSpaceModel model(spec, kind, kind == KineticKind::bare ? 0.0 : dt);
    const PhaseSpaceModel bare = PhaseSpaceModel::bare(spec);

    Well well;
    well.x_bottom = s.x_bottom > 0.0 ? s.x_bottom : default_x_bottom(spec);
    well.boundary = boundary_from_string(s.boundary);
    well.e_min = s.e_min;
    well.e_max = s.e_max;
    auto levels = bohr_levels(model, well);
    if (levels.empty()) throw NumericalError("no quantized levels found in the well");

    std::vector<LevelPrediction> partner;
    if (s.partner_x_bottom > 0.0) {
        Well pw = well;
        pw.x_bottom = s.partner_x_bottom;
        if (well.boundary == Boundary::hard_wall_left) pw.boundary = Boundary::hard_wall_right;
        if (well.boundary == Boundary::hard_wall_right) pw.boundary = Boundary::hard_wall_left;
        pw.e_min = pw.e_max = std::numeric_limits<double>::quiet_NaN();
        partner = bohr_levels(model, pw);
    }

    bool exceeded = false;
    auto out = art.open("levels.csv");
    out << "N,E,spacing,S12,T12,x1,x1_kind,x2,x2_kind,n_cl,S_B,eta,Gamma,dS12,dE,dS_B,dE_N,eta_ratio,gamma_ratio,"
           "dT1_over_T,dT2_over_T,perturbative_exceeded\n";
    for (auto& lv : levels) {
        const LevelPrediction* mate = nullptr;
        for (const auto& p : partner)
            if (p.N == lv.N) mate = &p;
        try {
            if (mate) {
                const TunnelingRates tr = tunneling_rates(lv, *mate, model);
                lv.S_B = tr.S_B;
                lv.eta = tr.eta;
                lv.Gamma = tr.Gamma;
            } else {
                const double xm = 0.5 * (lv.x1.x + lv.x2.x);
                lv.S_B = barrier_action(model, lv.E, xm, model.x_hi()).S_B;
                lv.Gamma = lv.spacing / (2.0 * std::numbers::pi) * std::exp(-2.0 * lv.S_B);
            }
        } catch (const std::invalid_argument& e) {
            warnings.push_back("level " + std::to_string(lv.N) + ": barrier action unavailable (" + e.what() + ")");
        }
        PeriodChange pc;
        if (kind == KineticKind::bare) {
            lv.shifts = perturbation_shifts(lv, bare, dt, mate);
            pc = period_change(lv, bare, dt);
            exceeded = exceeded || lv.shifts.perturbative_exceeded;
        }
        const auto& sh = lv.shifts;
        out << lv.N << ',' << lv.E << ',' << lv.spacing << ',' << lv.S12 << ',' << lv.T12 << ',' << lv.x1.x << ','
            << kind_name(lv.x1.kind) << ',' << lv.x2.x << ',' << kind_name(lv.x2.kind) << ',' << lv.n_cl << ','
            << lv.S_B << ',' << lv.eta << ',' << lv.Gamma << ',' << sh.dS12 << ',' << sh.dE << ',' << sh.dS_B << ','
            << sh.dE_N << ',' << sh.eta_ratio << ',' << sh.gamma_ratio << ',' << pc.dT1_over_T << ','
            << pc.dT2_over_T << ',' << (sh.perturbative_exceeded ? 1 : 0) << '\n';
    }
    if (exceeded) warnings.push_back("perturbative regime exceeded: (J dt)^2 P / J > 1");
    return {{"levels", levels.size()},
            {"x_bottom", well.x_bottom},
            {"boundary", boundary_name(well.boundary)},
            {"perturbative_exceeded", exceeded}};
}

json cmd_portrait(const RunConfig& c, Artifacts& art, std::vector<std::string>&) {
    const ChainSpec spec = c.chain_spec();
    const auto& s = c.semiclassics;
    const PhaseSpaceModel model = PhaseSpaceModel::large_step(spec, c.plan.dt);
    std::vector<double> energies = s.energies;
    if (energies.empty()) {
        const double lo = spec.h_min() - spec.J, hi = spec.h_max() + spec.J;
        for (int i = 1; i <= 9; ++i) energies.push_back(lo + (hi - lo) * i / 10.0);
    }
    const PhasePortrait pp = phase_portrait(model, energies, s.samples);
    auto out = art.open("portrait.csv");
    out << "E,x,p\n";
    for (const auto& p : pp.points) out << p.E << ',' << p.x << ',' << p.p << '\n';
    auto reg = art.open("portrait_regions.csv");
    reg << "E,x1,x2,area\n";
    for (const auto& r : pp.regions) reg << r.E << ',' << r.x1 << ',' << r.x2 << ',' << r.area << '\n';
    return {{"kinetic", "large_step"}, {"energies", energies}, {"regions", pp.regions.size()}};
}

json cmd_overlap_map(const RunConfig& c, Artifacts& art, std::vector<std::string>& warnings) {
    const ChainSpec spec = c.chain_spec();
    const TrotterPlan plan = c.trotter_plan();
    const EffectiveHamiltonian heff = effective_hamiltonian(spec, plan);
    if (heff.folding) warnings.push_back("folding: spectral width exceeds 2 pi / dt");
    const SpectrumReport ex = diagonalize(spec);
    const SpectrumReport ef = diagonalize(heff, plan);
    const OverlapMap om = overlap_map(ex, ef, plan.dt, spec.J, c.overlap.h_ref);
    auto out = art.open("overlap_map.csv");
    for (Eigen::Index m = 0; m < om.values.rows(); ++m) {
        for (Eigen::Index n = 0; n < om.values.cols(); ++n) out << (n ? "," : "") << om.values(m, n);
        out << '\n';
    }
    json ridges = json::array();
    for (const auto& r : om.ridges) ridges.push_back({{"name", r.name}, {"slope", r.slope}, {"intercept", r.intercept}});
    std::vector<double> e_exact(ex.energies.data(), ex.energies.data() + ex.energies.size());
    std::vector<double> e_eff(ef.energies.data(), ef.energies.data() + ef.energies.size());
    art.json_file("overlap_map.json", {{"rows", "exact level M"},
                                       {"columns", "effective level N"},
                                       {"dim", om.values.rows()},
                                       {"dt", plan.dt},
                                       {"normalization", om.normalization},
                                       {"ridges", ridges},
                                       {"energies_exact", e_exact},
                                       {"energies_effective", e_eff}});
    return {{"normalization", om.normalization}};
}

ExperimentConfig tuned_experiment(const RunConfig& c, json& results) {
    ExperimentConfig x = c.experiment_config();
    if (c.experiment.tune_alpha) {
        const AlphaTuning t = tune_alpha_for_resonance(x, c.experiment.alpha_lo, c.experiment.alpha_hi);
        results["alpha_tuning"] = {{"alpha", t.alpha}, {"gap", t.gap}, {"epsilon", t.epsilon},
                                   {"rabi_period", t.rabi_period}, {"ok", t.ok}, {"message", t.message}};
        if (!t.ok) throw NumericalError("alpha tuning failed: " + t.message);
        x.alpha = t.alpha;
    }
    return x;
}

json cmd_rabi(const RunConfig& c, Artifacts& art, std::vector<std::string>&) {
    json res;
    ExperimentConfig x = tuned_experiment(c, res);
    x.dt_grid = {c.plan.dt};
    x.validate();
    const ChainSpec spec = x.chain();
    const DoubletStates d = exact_doublet(spec, x.doublet_index);
    const Eigen::VectorXcd psi = prepare_initial_state(d.states, x.noise_level, x.seed);
    const RabiTrace tr = run_trace(psi, spec, x.plan(c.plan.dt), x.M, x.dM);
    check_trace(tr);
    auto out = art.open("trace.csv");
    out << "step,time,n_left\n";
    for (std::size_t i = 0; i < tr.times.size(); ++i) out << tr.steps[i] << ',' << tr.times[i] << ',' << tr.n_left[i] << '\n';
    auto sp = art.open("spectrum.csv");
    sp << "omega,power\n";
    for (std::size_t i = 0; i < tr.spectrum.omega.size(); ++i) sp << tr.spectrum.omega[i] << ',' << tr.spectrum.power[i] << '\n';
    res["peak"] = peak_json(tr.peak);
    res["exact_gap"] = d.E_upper - d.E_lower;
    res["exact_period"] = 2.0 * std::numbers::pi / (d.E_upper - d.E_lower);
    res["initial_left_occupancy"] = left_occupancy(psi);
    res["norm_error"] = tr.norm_error;
    return res;
}

json cmd_sweep(const RunConfig& c, Artifacts& art, std::vector<std::string>&) {
    json res;
    const ExperimentConfig x = tuned_experiment(c, res);
    const DensityMap map = rabi_density_map(x, c.workers);
    auto out = art.open("density_map.csv");
    out << "dt,omega,power\n";
    for (const auto& t : map.traces) {
        check_trace(t);
        for (std::size_t i = 0; i < t.spectrum.omega.size(); ++i)
            out << t.dt << ',' << t.spectrum.omega[i] << ',' << t.spectrum.power[i] << '\n';
    }
    auto pk = art.open("peaks.csv");
    pk << "dt,omega,period,amplitude,overlay_fixed_pi,overlay_fixed_2pi,overlay_requantized_pi,overlay_requantized_2pi\n";
    json overlays = json::array(), peaks = json::array();
    std::vector<double> dts, periods, amps;
    for (std::size_t i = 0; i < map.traces.size(); ++i) {
        const auto& t = map.traces[i];
        const auto& o = map.overlays[i];
        pk << t.dt << ',' << t.peak.omega << ',' << t.peak.period << ',' << t.peak.amplitude << ','
           << o.period_fixed() << ',' << o.period_fixed(true) << ',' << o.period_requantized() << ','
           << o.period_requantized(true) << '\n';
        peaks.push_back({{"dt", t.dt}, {"peak", peak_json(t.peak)}});
        overlays.push_back({{"dt", o.dt},
                            {"valid", o.valid},
                            {"E_fixed", o.E_fixed},
                            {"T_fixed", o.T_fixed},
                            {"S_B_fixed", o.S_B_fixed},
                            {"E_requantized", o.E_requantized},
                            {"T_requantized", o.T_requantized},
                            {"S_B_requantized", o.S_B_requantized},
                            {"period_fixed_pi", o.period_fixed()},
                            {"period_fixed_2pi", o.period_fixed(true)},
                            {"period_requantized_pi", o.period_requantized()},
                            {"period_requantized_2pi", o.period_requantized(true)}});
        dts.push_back(t.dt);
        periods.push_back(t.peak.period);
        amps.push_back(t.peak.amplitude);
    }
    const DoubletStates d = exact_doublet(x.chain(), x.doublet_index);
    const double T0 = 2.0 * std::numbers::pi / (d.E_upper - d.E_lower);
    if (dts.size() >= 5) {
        const DetuningFit fit = detuning_fit(dts, periods, T0, x.J);
        const VisibilityCurve vis = visibility_curve(periods, amps, T0);
        res["detuning_fit"] = {{"alpha", fit.alpha}, {"T0", T0}, {"rms_residual", fit.rms_residual},
                               {"monotone_input", fit.monotone_input}};
        res["visibility"] = {{"n0", vis.n0}, {"measured", vis.measured}, {"predicted", vis.predicted}};
    }
    art.json_file("density_map.json", {{"config", to_json(c)},
                                       {"seed", c.seed},
                                       {"alpha", x.alpha},
                                       {"columns", {"dt", "omega", "power"}},
                                       {"exact_period", T0},
                                       {"peaks", peaks},
                                       {"overlays", overlays}});
    res["cells"] = map.traces.size();
    return res;
}

json cmd_noise(const RunConfig& c, Artifacts& art, std::vector<std::string>&) {
    json res;
    const ExperimentConfig x = tuned_experiment(c, res);
    const NoiseEnsemble ne = gate_noise_ensemble(x, c.noise.dt, c.noise.phase_sigma, c.noise.trials, c.workers);
    auto out = art.open("noise.csv");
    out << "trial,visibility,energy_shift\n";
    for (std::size_t i = 0; i < ne.visibilities.size(); ++i)
        out << i << ',' << ne.visibilities[i] << ',' << ne.energy_shifts[i] << '\n';
    res["noise"] = {{"dt", ne.dt},
                    {"phase_sigma", ne.phase_sigma},
                    {"mean", ne.mean},
                    {"stddev", ne.stddev},
                    {"median", ne.median},
                    {"noiseless_visibility", ne.noiseless_visibility},
                    {"threshold", ne.threshold},
                    {"n_cl", ne.n_cl},
                    {"energy_shift_std", ne.energy_shift_std},
                    {"energy_shift_predicted", ne.energy_shift_predicted},
                    {"below_threshold", ne.phase_sigma <= ne.threshold}};
    return res;
}

}  // namespace

RunResult run(const RunConfig& c) {
    const Diagnostics diag = validate(c);
    if (!diag.ok()) {
        std::string msg;
        for (const auto& e : diag.errors) msg += (msg.empty() ? "" : "; ") + e;
        throw ConfigError(msg);
    }
    RunResult result;
    result.output_dir = c.output_dir;
    Artifacts art(c.output_dir, result);
    std::vector<std::string> warnings = diag.warnings;
    json results;
    try {
        if (c.command == "spectrum") results = cmd_spectrum(c, art, warnings);
        else if (c.command == "effective-ham") results = cmd_effective_ham(c, art, warnings);
        else if (c.command == "defect") results = cmd_defect(c, art, warnings);
        else if (c.command == "semiclassics") results = cmd_semiclassics(c, art, warnings);
        else if (c.command == "portrait") results = cmd_portrait(c, art, warnings);
        else if (c.command == "overlap-map") results = cmd_overlap_map(c, art, warnings);
        else if (c.command == "rabi") results = cmd_rabi(c, art, warnings);
        else if (c.command == "sweep") results = cmd_sweep(c, art, warnings);
        else if (c.command == "noise") results = cmd_noise(c, art, warnings);
    } catch (const ConfigError&) {
        throw;
    } catch (const NumericalError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    } catch (const std::exception& e) {
        throw NumericalError(e.what());
    }
    result.warnings = warnings;
    std::vector<std::string> artifacts = result.artifacts;
    art.json_file("config.json", to_json(c));
    art.json_file("manifest.json", {{"command", c.command},
                                    {"code_version", code_version()},
                                    {"seed", c.seed},
                                    {"config", to_json(c)},
                                    {"warnings", warnings},
                                    {"advisories", diag.advisories},
                                    {"artifacts", artifacts},
                                    {"results", results}});
    return result;
}

int run_cli(const CliOptions& o) {
    try {
        json j = json::object();
        if (!o.config_path.empty()) {
            std::ifstream in(o.config_path);
            if (!in) throw ConfigError("cannot open config '" + o.config_path + "'");
            try {
                j = json::parse(in);
            } catch (const json::parse_error& e) {
                throw ConfigError("config '" + o.config_path + "' is not valid JSON: " + e.what());
            }
            // a manifest reproduces its run
            if (j.is_object() && j.contains("code_version") && j.contains("config")) j = j["config"];
        }
        if (!o.command.empty()) j["command"] = o.command;
        for (const auto& s : o.overrides) apply_override(j, s);
        if (o.seed) j["seed"] = *o.seed;
        if (o.workers) j["workers"] = *o.workers;
        if (o.out_dir) j["output_dir"] = *o.out_dir;
        const RunConfig cfg = parse_config(j);
        const RunResult r = run(cfg);
        for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
        std::cout << r.output_dir << '\n';
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace trotter

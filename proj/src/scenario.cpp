#include "ilab/scenario.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <toml.hpp>

#include "ilab/ensemble.hpp"
#include "ilab/errors.hpp"
#include "ilab/fraunhofer.hpp"
#include "ilab/io.hpp"

namespace ilab::scenario {

namespace {

constexpr double pi = std::numbers::pi;

// Reads one TOML table, remembering which keys were consumed so leftovers can be rejected.
class TableReader {
public:
    TableReader(const toml::table* table, std::string prefix) : table_(table), prefix_(std::move(prefix)) {}

    bool has(std::string_view key) const { return table_ && table_->contains(key); }

    double real(std::string_view key, double fallback) {
        const toml::node* n = take(key);
        if (!n) return fallback;
        return to_real(*n, path(key));
    }

    std::optional<double> optional_real(std::string_view key) {
        const toml::node* n = take(key);
        if (!n) return std::nullopt;
        return to_real(*n, path(key));
    }

    std::size_t count(std::string_view key, std::size_t fallback) {
        const toml::node* n = take(key);
        if (!n) return fallback;
        return to_count(*n, path(key));
    }

    std::string text(std::string_view key, std::string fallback) {
        const toml::node* n = take(key);
        if (!n) return fallback;
        if (!n->is_string()) throw ConfigError(path(key), path(key) + ": expected a string");
        return std::string(*n->value<std::string_view>());
    }

    std::vector<double> reals(std::string_view key) {
        const toml::node* n = take(key);
        if (!n) return {};
        const toml::array* arr = n->as_array();
        if (!arr) throw ConfigError(path(key), path(key) + ": expected an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < arr->size(); ++i)
            out.push_back(to_real(*arr->get(i), path(key) + "[" + std::to_string(i) + "]"));
        return out;
    }

    std::vector<std::size_t> counts(std::string_view key, std::vector<std::size_t> fallback) {
        const toml::node* n = take(key);
        if (!n) return fallback;
        const toml::array* arr = n->as_array();
        if (!arr) throw ConfigError(path(key), path(key) + ": expected an array of integers");
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < arr->size(); ++i)
            out.push_back(to_count(*arr->get(i), path(key) + "[" + std::to_string(i) + "]"));
        return out;
    }

    std::vector<std::string> strings(std::string_view key, std::vector<std::string> fallback) {
        const toml::node* n = take(key);
        if (!n) return fallback;
        const toml::array* arr = n->as_array();
        if (!arr) throw ConfigError(path(key), path(key) + ": expected an array of strings");
        std::vector<std::string> out;
        for (std::size_t i = 0; i < arr->size(); ++i) {
            const auto* s = arr->get(i)->as_string();
            if (!s) throw ConfigError(path(key), path(key) + ": expected an array of strings");
            out.push_back(s->get());
        }
        return out;
    }

    const toml::array* table_array(std::string_view key) {
        const toml::node* n = take(key);
        if (!n) return nullptr;
        const toml::array* arr = n->as_array();
        if (!arr || !arr->is_array_of_tables())
            throw ConfigError(path(key), path(key) + ": expected an array of tables");
        return arr;
    }

    std::string path(std::string_view key) const {
        return prefix_.empty() ? std::string(key) : prefix_ + "." + std::string(key);
    }

    /// Rejects any key that was not consumed.
    void finish() const {
        if (!table_) return;
        for (auto&& [k, v] : *table_) {
            (void)v;
            if (!used_.contains(std::string(k.str())))
                throw ConfigError(path(k.str()), "unknown key '" + path(k.str()) + "'");
        }
    }

private:
    const toml::node* take(std::string_view key) {
        if (!table_) return nullptr;
        used_.insert(std::string(key));
        return table_->get(key);
    }

    static double to_real(const toml::node& n, const std::string& where) {
        if (auto i = n.as_integer()) return static_cast<double>(i->get());
        if (auto f = n.as_floating_point()) return f->get();
        throw ConfigError(where, where + ": expected a number");
    }

    static std::size_t to_count(const toml::node& n, const std::string& where) {
        const auto* i = n.as_integer();
        if (!i || i->get() < 0) throw ConfigError(where, where + ": expected a non-negative integer");
        return static_cast<std::size_t>(i->get());
    }

    const toml::table* table_;
    std::string prefix_;
    std::set<std::string> used_;
};

const toml::table* subtable(const toml::table& root, std::string_view key) {
    const toml::node* n = root.get(key);
    if (!n) return nullptr;
    if (!n->is_table()) throw ConfigError(std::string(key), std::string(key) + ": expected a table");
    return n->as_table();
}

std::string section_name(Kind kind) {
    switch (kind) {
        case Kind::Fraunhofer: return "fraunhofer";
        case Kind::Kirchhoff: return "kirchhoff";
        case Kind::Ensemble: return "ensemble";
        case Kind::QtmPotential: return "potential";
        case Kind::QtmTrajectories: return "trajectories";
        case Kind::QtmAccumulate: return "accumulate";
    }
    return {};
}

bool is_qtm(Kind kind) {
    return kind == Kind::QtmPotential || kind == Kind::QtmTrajectories || kind == Kind::QtmAccumulate;
}

template <class F>
void validating(const std::string& key, F&& check) {
    try {
        check();
    } catch (const DomainError& e) {
        throw ConfigError(key, key + ": " + e.what());
    }
}

void require(bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError(key, key + ": " + what);
}

FraunhoferParams read_fraunhofer(TableReader& r) {
    FraunhoferParams p;
    p.k = r.real("k", p.k);
    p.a = r.real("a", p.a);
    p.theta_min = r.real("theta_min", p.theta_min);
    p.theta_max = r.real("theta_max", p.theta_max);
    p.theta_count = r.count("theta_count", p.theta_count);
    const bool radians = r.has("alpha");
    const bool over_pi = r.has("alpha_over_pi");
    require(!(radians && over_pi), r.path("alpha"), "give either alpha or alpha_over_pi, not both");
    if (radians) {
        p.alpha = r.reals("alpha");
    } else if (over_pi) {
        for (double f : r.reals("alpha_over_pi")) p.alpha.push_back(f * pi);
    } else {
        p.alpha = {0.0, pi / 6.0, pi / 4.0, pi / 3.0, pi / 2.0};
    }
    validating(r.path("k"), [&] { fraunhofer::FraunhoferSpec{p.k, p.a, 0.0, {}}.validated(); });
    validating(r.path("theta_count"), [&] { Grid1D::spanning(p.theta_min, p.theta_max, p.theta_count); });
    require(!p.alpha.empty(), r.path("alpha"), "alpha grid is empty");
    return p;
}

KirchhoffParams read_kirchhoff(TableReader& r) {
    KirchhoffParams p;
    p.wavelength = r.real("wavelength", p.wavelength);
    require(p.wavelength > 0.0, r.path("wavelength"), "must be positive");
    if (const toml::array* arr = r.table_array("opening")) {
        p.openings.clear();
        for (std::size_t i = 0; i < arr->size(); ++i) {
            TableReader o(arr->get(i)->as_table(), r.path("opening") + "[" + std::to_string(i) + "]");
            kirchhoff::Rect rect;
            rect.cx = o.real("cx", 0.0);
            rect.cy = o.real("cy", 0.0);
            rect.half_x = o.real("half_x", rect.half_x);
            rect.half_y = o.real("half_y", rect.half_y);
            o.finish();
            p.openings.push_back(rect);
        }
    }
    validating(r.path("opening"), [&] { kirchhoff::Aperture{p.openings}.validate(); });
    p.source_z = r.optional_real("source_z");
    p.alpha = r.real("alpha", p.alpha);
    validating(r.path("source_z"), [&] {
        kirchhoff::SourceSpec s;
        if (p.source_z) s.position = Vec3{0.0, 0.0, *p.source_z};
        s.validate();
    });
    p.distance = r.real("distance", p.distance);
    require(p.distance > 0.0, r.path("distance"), "must be positive");
    p.screen_min = r.real("screen_min", p.screen_min);
    p.screen_max = r.real("screen_max", p.screen_max);
    p.screen_count = r.count("screen_count", p.screen_count);
    validating(r.path("screen_count"), [&] { Grid1D::spanning(p.screen_min, p.screen_max, p.screen_count); });
    p.quadrature.order = r.count("quadrature_order", p.quadrature.order);
    p.quadrature.max_refinement = r.count("max_refinement", p.quadrature.max_refinement);
    p.quadrature.rel_tol = r.real("rel_tol", p.quadrature.rel_tol);
    validating(r.path("rel_tol"), [&] { p.quadrature.validate(); });
    return p;
}

EnsembleParams read_ensemble(TableReader& r) {
    EnsembleParams p;
    p.total_energy = r.real("total_energy", p.total_energy);
    p.potential = r.real("potential", p.potential);
    p.weight = r.real("weight", p.weight);
    p.mass = r.real("mass", p.mass);
    p.hbar = r.real("hbar", p.hbar);
    const std::string mode = r.text("mode", "mass");
    require(mode == "mass" || mode == "unit", r.path("mode"), "expected \"mass\" or \"unit\"");
    p.unit_probability = mode == "unit";
    p.r_min = r.real("r_min", p.r_min);
    p.r_max = r.real("r_max", p.r_max);
    p.r_count = r.count("r_count", p.r_count);
    require(p.weight > 0.0, r.path("weight"), "must be positive");
    require(p.mass > 0.0, r.path("mass"), "must be positive");
    require(p.hbar > 0.0, r.path("hbar"), "must be positive");
    require(p.r_min >= 0.0, r.path("r_min"), "must be non-negative");
    validating(r.path("r_count"), [&] { Grid1D::spanning(p.r_min, p.r_max, p.r_count); });
    if (p.unit_probability)
        require(p.total_energy > p.potential, r.path("mode"),
                "unit probability needs total_energy > potential (non-empty k-sphere)");
    return p;
}

qtm::QMethod read_method(TableReader& r) {
    const std::string m = r.text("method", "analytic");
    require(m == "analytic" || m == "fd", r.path("method"), "expected \"analytic\" or \"fd\"");
    return m == "analytic" ? qtm::QMethod::Analytic : qtm::QMethod::FiniteDifference;
}

std::string hits_name(std::size_t checkpoint) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "hits_%06zu.csv", checkpoint);
    return buf;
}

nlohmann::ordered_json setup_json(const qtm::TwoSlitSetup& s) {
    nlohmann::ordered_json j;
    j["half_separation"] = s.half_separation;
    j["sigma0"] = s.sigma0;
    j["v_long"] = s.v_long;
    j["screen_distance"] = s.screen_distance;
    j["hbar"] = s.hbar;
    j["mass"] = s.mass;
    return j;
}

}  // namespace

std::string_view kind_name(Kind kind) {
    switch (kind) {
        case Kind::Fraunhofer: return "fraunhofer";
        case Kind::Kirchhoff: return "kirchhoff";
        case Kind::Ensemble: return "ensemble";
        case Kind::QtmPotential: return "qtm-potential";
        case Kind::QtmTrajectories: return "qtm-trajectories";
        case Kind::QtmAccumulate: return "qtm-accumulate";
    }
    return "unknown";
}

std::optional<Kind> parse_kind(std::string_view name) {
    for (Kind k : {Kind::Fraunhofer, Kind::Kirchhoff, Kind::Ensemble, Kind::QtmPotential, Kind::QtmTrajectories,
                   Kind::QtmAccumulate})
        if (kind_name(k) == name) return k;
    return std::nullopt;
}

ScenarioConfig default_config(Kind kind) { return parse_config("", kind); }

ScenarioConfig parse_config(std::string_view toml_text, Kind kind) {
    toml::table root;
    try {
        root = toml::parse(toml_text);
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << "TOML parse error at line " << e.source().begin.line << ": " << e.description();
        throw ConfigError("<toml>", msg.str());
    }

    ScenarioConfig cfg;
    cfg.kind = kind;
    TableReader top(&root, "");
    if (top.has("scenario")) {
        const std::string named = top.text("scenario", "");
        require(parse_kind(named) == kind, "scenario",
                "config names scenario '" + named + "' but '" + std::string(kind_name(kind)) + "' was requested");
    }
    if (top.has("seed")) cfg.seed = top.count("seed", 0);

    TableReader out(subtable(root, "output"), "output");
    cfg.output.dir = out.text("dir", cfg.output.dir.string());
    const auto formats = out.strings("formats", {"csv", "pgm"});
    cfg.output.csv = cfg.output.pgm = false;
    for (const auto& f : formats) {
        require(f == "csv" || f == "pgm", "output.formats", "unknown format '" + f + "'");
        (f == "csv" ? cfg.output.csv : cfg.output.pgm) = true;
    }
    out.finish();

    if (is_qtm(kind)) {
        TableReader q(subtable(root, "qtm"), "qtm");
        auto& s = cfg.setup;
        s.half_separation = q.real("half_separation", s.half_separation);
        s.sigma0 = q.real("sigma0", s.sigma0);
        s.v_long = q.real("v_long", s.v_long);
        s.screen_distance = q.real("screen_distance", s.screen_distance);
        s.hbar = q.real("hbar", s.hbar);
        s.mass = q.real("mass", s.mass);
        q.finish();
        validating("qtm", [&] { s.validate(); });
    }

    const std::string section = section_name(kind);
    TableReader r(subtable(root, section), section);
    switch (kind) {
        case Kind::Fraunhofer: cfg.params = read_fraunhofer(r); break;
        case Kind::Kirchhoff: cfg.params = read_kirchhoff(r); break;
        case Kind::Ensemble: cfg.params = read_ensemble(r); break;
        case Kind::QtmPotential: {
            QtmPotentialParams p;
            p.x_min = r.real("x_min", p.x_min);
            p.x_max = r.real("x_max", p.x_max);
            p.x_count = r.count("x_count", p.x_count);
            p.t_min = r.real("t_min", p.t_min);
            p.t_max = r.optional_real("t_max");
            p.t_count = r.count("t_count", p.t_count);
            p.method = read_method(r);
            require(p.t_min >= 0.0, r.path("t_min"), "must be non-negative");
            validating(r.path("x_count"), [&] { Grid1D::spanning(p.x_min, p.x_max, p.x_count); });
            validating(r.path("t_count"),
                       [&] { Grid1D::spanning(p.t_min, p.t_max.value_or(cfg.setup.screen_time()), p.t_count); });
            cfg.params = p;
            break;
        }
        case Kind::QtmTrajectories: {
            QtmTrajectoryParams p;
            p.count = r.count("count", p.count);
            const std::string seeding = r.text("seeding", "quantile");
            require(seeding == "quantile" || seeding == "random", r.path("seeding"),
                    "expected \"quantile\" or \"random\"");
            p.random = seeding == "random";
            p.samples = r.count("samples", p.samples);
            p.rel_tol = r.real("rel_tol", p.rel_tol);
            require(p.count >= 1, r.path("count"), "must be at least 1");
            require(p.samples >= 3, r.path("samples"), "must be at least 3");
            require(p.rel_tol > 0.0 && p.rel_tol < 1.0, r.path("rel_tol"), "must lie in (0, 1)");
            cfg.params = p;
            break;
        }
        case Kind::QtmAccumulate: {
            QtmAccumulateParams p;
            p.count = r.count("count", p.count);
            p.checkpoints = r.counts("checkpoints", p.checkpoints);
            p.bins = r.count("bins", p.bins);
            p.rel_tol = r.real("rel_tol", p.rel_tol);
            require(p.count >= 1, r.path("count"), "must be at least 1");
            require(!p.checkpoints.empty(), r.path("checkpoints"), "must not be empty");
            require(std::is_sorted(p.checkpoints.begin(), p.checkpoints.end()), r.path("checkpoints"),
                    "must be sorted ascending");
            require(p.checkpoints.back() <= p.count, r.path("checkpoints"), "largest checkpoint exceeds count");
            require(p.checkpoints.front() >= 1, r.path("checkpoints"), "checkpoints must be positive");
            require(p.bins >= 1, r.path("bins"), "must be at least 1");
            require(p.rel_tol > 0.0 && p.rel_tol < 1.0, r.path("rel_tol"), "must lie in (0, 1)");
            cfg.params = p;
            break;
        }
    }
    r.finish();

    // Top level: only the recognised keys and the sections for this kind.
    std::set<std::string> allowed{"scenario", "seed", "output", section};
    if (is_qtm(kind)) allowed.insert("qtm");
    for (auto&& [k, v] : root) {
        (void)v;
        if (!allowed.contains(std::string(k.str())))
            throw ConfigError(std::string(k.str()), "unknown key '" + std::string(k.str()) + "' for scenario " +
                                                        std::string(kind_name(kind)));
    }
    return cfg;
}

ScenarioConfig parse_config_file(const std::filesystem::path& path, Kind kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("--config", "cannot read config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), kind);
}

nlohmann::ordered_json ScenarioConfig::resolved() const {
    nlohmann::ordered_json j;
    j["scenario"] = kind_name(kind);
    j["seed"] = seed;
    j["units"] = "nondimensional, hbar = m_e = 1 unless overridden";
    nlohmann::ordered_json formats = nlohmann::ordered_json::array();
    if (output.csv) formats.push_back("csv");
    if (output.pgm) formats.push_back("pgm");
    j["output"]["formats"] = formats;
    if (is_qtm(kind)) j["qtm"] = setup_json(setup);

    std::visit(
        [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            nlohmann::ordered_json s;
            if constexpr (std::is_same_v<P, FraunhoferParams>) {
                s["k"] = p.k;
                s["a"] = p.a;
                s["theta_min"] = p.theta_min;
                s["theta_max"] = p.theta_max;
                s["theta_count"] = p.theta_count;
                s["alpha"] = p.alpha;
            } else if constexpr (std::is_same_v<P, KirchhoffParams>) {
                s["wavelength"] = p.wavelength;
                nlohmann::ordered_json ops = nlohmann::ordered_json::array();
                for (const auto& o : p.openings)
                    ops.push_back({{"cx", o.cx}, {"cy", o.cy}, {"half_x", o.half_x}, {"half_y", o.half_y}});
                s["opening"] = ops;
                s["source_z"] = p.source_z ? nlohmann::ordered_json(*p.source_z) : nlohmann::ordered_json("plane");
                s["alpha"] = p.alpha;
                s["distance"] = p.distance;
                s["screen_min"] = p.screen_min;
                s["screen_max"] = p.screen_max;
                s["screen_count"] = p.screen_count;
                s["quadrature_order"] = p.quadrature.order;
                s["max_refinement"] = p.quadrature.max_refinement;
                s["rel_tol"] = p.quadrature.rel_tol;
            } else if constexpr (std::is_same_v<P, EnsembleParams>) {
                s["total_energy"] = p.total_energy;
                s["potential"] = p.potential;
                s["weight"] = p.weight;
                s["mass"] = p.mass;
                s["hbar"] = p.hbar;
                s["mode"] = p.unit_probability ? "unit" : "mass";
                s["r_min"] = p.r_min;
                s["r_max"] = p.r_max;
                s["r_count"] = p.r_count;
            } else if constexpr (std::is_same_v<P, QtmPotentialParams>) {
                s["x_min"] = p.x_min;
                s["x_max"] = p.x_max;
                s["x_count"] = p.x_count;
                s["t_min"] = p.t_min;
                s["t_max"] = p.t_max.value_or(setup.screen_time());
                s["t_count"] = p.t_count;
                s["method"] = p.method == qtm::QMethod::Analytic ? "analytic" : "fd";
            } else if constexpr (std::is_same_v<P, QtmTrajectoryParams>) {
                s["count"] = p.count;
                s["seeding"] = p.random ? "random" : "quantile";
                s["samples"] = p.samples;
                s["rel_tol"] = p.rel_tol;
            } else {
                s["count"] = p.count;
                s["checkpoints"] = p.checkpoints;
                s["bins"] = p.bins;
                s["rel_tol"] = p.rel_tol;
            }
            j[section_name(kind)] = s;
        },
        params);
    return j;
}

namespace {

class Emitter {
public:
    Emitter(const OutputSpec& spec) : spec_(spec) { std::filesystem::create_directories(spec.dir); }

    void csv(const std::string& name, const io::CsvTable& table) {
        if (!spec_.csv) return;
        const auto path = spec_.dir / name;
        io::write_file_atomic(path, table.text());
        files_.push_back(path);
    }

    void heatmap(const std::string& name, std::span<const double> values, std::size_t width, std::size_t height,
                 std::span<const std::uint8_t> mask = {}) {
        if (!spec_.pgm) return;
        for (auto& p : io::emit_heatmap(values, width, height, spec_.dir / name, mask)) files_.push_back(p);
    }

    std::vector<std::filesystem::path> take() { return std::move(files_); }

private:
    OutputSpec spec_;
    std::vector<std::filesystem::path> files_;
};

void run_fraunhofer(const FraunhoferParams& p, Emitter& emit, RunReport&) {
    const Grid1D theta = Grid1D::spanning(p.theta_min, p.theta_max, p.theta_count);
    const fraunhofer::FraunhoferSpec spec{p.k, p.a, 0.0, theta.nodes()};
    const auto table = fraunhofer::phase_scan_surface(spec, p.alpha);
    std::vector<std::string> header{"theta [rad]"};
    for (double a : p.alpha) header.push_back("I(alpha=" + io::format_double(a) + " rad) [normalized]");
    io::CsvTable csv(header);
    std::vector<double> row(header.size());
    for (std::size_t i = 0; i < table.theta.size(); ++i) {
        row[0] = table.theta[i];
        for (std::size_t j = 0; j < table.alpha.size(); ++j) row[j + 1] = table.at(i, j);
        csv.add_row(row);
    }
    emit.csv("phase_scan.csv", csv);
    emit.heatmap("phase_scan.pgm", table.values, table.alpha.size(), table.theta.size());
}

void run_kirchhoff(const KirchhoffParams& p, Emitter& emit, RunReport& report, unsigned threads) {
    const kirchhoff::Aperture aperture{p.openings};
    kirchhoff::SourceSpec source;
    if (p.source_z) source.position = Vec3{0.0, 0.0, *p.source_z};
    source.phase_alpha = p.alpha;
    const double k = 2.0 * pi / p.wavelength;
    const Grid1D screen = Grid1D::spanning(p.screen_min, p.screen_max, p.screen_count);
    const auto prof = kirchhoff::far_field_profile(aperture, source, k, screen, p.distance, p.quadrature, threads);
    io::CsvTable csv({"x [length]", "theta [rad]", "intensity [normalized]"});
    for (std::size_t i = 0; i < prof.x.size(); ++i) csv.add_row({prof.x[i], prof.theta[i], prof.intensity[i]});
    emit.csv("far_field.csv", csv);
    for (const auto& w : prof.warnings) report.warnings.push_back(w);
}

void run_ensemble(const EnsembleParams& p, Emitter& emit, RunReport& report) {
    ensemble::EnsembleSpec spec;
    spec.total_energy = p.total_energy;
    spec.potential = ensemble::ConstantPotential{p.potential};
    spec.ensemble_weight = p.weight;
    spec.mass = p.mass;
    spec.hbar = p.hbar;
    if (p.unit_probability) spec = ensemble::renormalize(spec);
    const double k1 = ensemble::k_cutoff(spec);
    report.diagnostics["k1"] = k1;
    report.diagnostics["total_norm"] = ensemble::norm_constant_potential(spec);
    if (k1 > 0.0) report.diagnostics["chi0"] = ensemble::mode_amplitude(spec);
    const Grid1D r = Grid1D::spanning(p.r_min, p.r_max, p.r_count);
    io::CsvTable csv({"r [length]", "psi_re [length^-3/2]", "psi_im [length^-3/2]", "psi_abs2 [length^-3]"});
    for (std::size_t i = 0; i < r.size(); ++i) {
        const cplx psi = ensemble::ensemble_wavefunction(spec, Vec3{r.node(i), 0.0, 0.0});
        csv.add_row({r.node(i), psi.real(), psi.imag(), std::norm(psi)});
    }
    emit.csv("ensemble.csv", csv);
}

void run_qtm_potential(const QtmPotentialParams& p, const qtm::TwoSlitSetup& setup, Emitter& emit, RunReport& report,
                       unsigned threads) {
    const qtm::TwoSlitState state(setup);
    const Grid1D xs = Grid1D::spanning(p.x_min, p.x_max, p.x_count);
    const Grid1D ts = Grid1D::spanning(p.t_min, p.t_max.value_or(setup.screen_time()), p.t_count);
    const auto surf = qtm::quantum_potential_surface(state, xs, ts, p.method, threads);
    io::CsvTable csv({"t [time]", "x [length]", "Q [energy]", "masked [1]"});
    for (std::size_t row = 0; row < ts.size(); ++row)
        for (std::size_t col = 0; col < xs.size(); ++col) {
            const std::size_t i = surf.field.grid.index(row, col);
            csv.add_row({ts.node(row), xs.node(col), surf.field.values[i], static_cast<double>(surf.mask[i])});
        }
    emit.csv("quantum_potential.csv", csv);
    emit.heatmap("quantum_potential.pgm", surf.field.values, xs.size(), ts.size(), surf.mask);
    report.diagnostics["masked_cells"] = surf.masked_count();
}

void run_qtm_trajectories(const QtmTrajectoryParams& p, const ScenarioConfig& cfg, Emitter& emit,
                          RunReport& report, unsigned threads) {
    const qtm::TwoSlitState state(cfg.setup);
    qtm::IntegratorOptions opt;
    opt.rel_tol = p.rel_tol;
    opt.abs_tol = p.rel_tol;
    opt.output_samples = p.samples;
    const qtm::Seeding seeding =
        p.random ? qtm::Seeding{qtm::RandomSeeding{cfg.seed}} : qtm::Seeding{qtm::QuantileSeeding{}};
    const auto fan = qtm::trajectory_fan(state, p.count, seeding, cfg.setup.screen_time(), opt, threads);
    io::CsvTable paths({"index [1]", "t [time]", "x [length]", "v [length/time]"});
    io::CsvTable hits({"index [1]", "x0 [length]", "x_screen [length]", "completed [1]"});
    for (std::size_t i = 0; i < fan.trajectories.size(); ++i) {
        const auto& tr = fan.trajectories[i];
        for (const auto& s : tr.samples) paths.add_row({static_cast<double>(i), s.t, s.x, s.v});
        const bool done = tr.status == qtm::TrajectoryStatus::Completed;
        hits.add_row({static_cast<double>(i), tr.samples.front().x, tr.final_x(), done ? 1.0 : 0.0});
    }
    emit.csv("trajectories.csv", paths);
    emit.csv("screen_hits.csv", hits);
    report.diagnostics["failures"] = fan.failures.size();
    for (const auto& f : fan.failures)
        report.warnings.push_back("trajectory " + std::to_string(f.index) + ": " + f.message);
}

void run_qtm_accumulate(const QtmAccumulateParams& p, const ScenarioConfig& cfg, Emitter& emit, RunReport& report,
                        unsigned threads) {
    const qtm::TwoSlitState state(cfg.setup);
    qtm::IntegratorOptions opt;
    opt.rel_tol = p.rel_tol;
    opt.abs_tol = p.rel_tol;
    const qtm::Binning bins = qtm::default_screen_binning(cfg.setup, p.bins);
    const double T = cfg.setup.screen_time();
    const auto acc = qtm::accumulate_hits(state, p.count, cfg.seed, p.checkpoints, T, bins, opt, threads);
    const auto reference = qtm::density_bin_probabilities(state, T, bins, bins.hi - bins.lo);
    io::CsvTable summary({"electrons [1]", "recorded [1]", "below [1]", "above [1]", "tv_distance [1]"});
    for (const auto& h : acc.histograms) {
        io::CsvTable csv({"x_lo [length]", "x_hi [length]", "count [1]", "reference_probability [1]"});
        for (std::size_t b = 0; b < bins.bins; ++b)
            csv.add_row({bins.edge(b), bins.edge(b + 1), static_cast<double>(h.counts[b]), reference.inside[b]});
        emit.csv(hits_name(h.electrons), csv);
        summary.add_row({static_cast<double>(h.electrons), static_cast<double>(h.recorded),
                         static_cast<double>(h.below), static_cast<double>(h.above),
                         qtm::total_variation(h, reference)});
    }
    emit.csv("accumulation_summary.csv", summary);
    report.diagnostics["failed_trajectories"] = acc.failed;
    report.diagnostics["final_tv_distance"] = qtm::total_variation(acc.histograms.back(), reference);
}

}  // namespace

RunReport run_scenario(const ScenarioConfig& config, unsigned threads) {
    RunReport report;
    report.diagnostics = nlohmann::ordered_json::object();
    Emitter emit(config.output);
    if (is_qtm(config.kind))
        for (const auto& w : config.setup.validate()) report.warnings.push_back(w);

    std::visit(
        [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, FraunhoferParams>)
                run_fraunhofer(p, emit, report);
            else if constexpr (std::is_same_v<P, KirchhoffParams>)
                run_kirchhoff(p, emit, report, threads);
            else if constexpr (std::is_same_v<P, EnsembleParams>)
                run_ensemble(p, emit, report);
            else if constexpr (std::is_same_v<P, QtmPotentialParams>)
                run_qtm_potential(p, config.setup, emit, report, threads);
            else if constexpr (std::is_same_v<P, QtmTrajectoryParams>)
                run_qtm_trajectories(p, config, emit, report, threads);
            else
                run_qtm_accumulate(p, config, emit, report, threads);
        },
        config.params);
    report.files = emit.take();

    nlohmann::ordered_json manifest;
    manifest["tool"] = "ilab";
    manifest["version"] = ILAB_VERSION;
    manifest["scenario"] = kind_name(config.kind);
    manifest["seed"] = config.seed;
    manifest["parameters"] = config.resolved();
    manifest["files"] = nlohmann::ordered_json::array();
    for (const auto& f : report.files) {
        nlohmann::ordered_json e;
        e["name"] = f.filename().string();
        e["bytes"] = std::filesystem::file_size(f);
        e["sha256"] = io::sha256_file(f);
        manifest["files"].push_back(e);
    }
    manifest["warnings"] = report.warnings;
    manifest["diagnostics"] = report.diagnostics;
    report.manifest = config.output.dir / "manifest.json";
    io::write_file_atomic(report.manifest, manifest.dump(2) + "\n");
    return report;
}

std::vector<std::string> verify_manifest(const std::filesystem::path& manifest) {
    std::ifstream in(manifest);
    if (!in) throw std::runtime_error("cannot read manifest " + manifest.string());
    const auto j = nlohmann::json::parse(in);
    std::vector<std::string> bad;
    for (const auto& f : j.at("files")) {
        const std::string name = f.at("name");
        const auto path = manifest.parent_path() / name;
        if (!std::filesystem::exists(path) || io::sha256_file(path) != f.at("sha256").get<std::string>())
            bad.push_back(name);
    }
    return bad;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"ilab: scalar interference simulations (diffraction, ensembles, quantum trajectories)"};
    app.require_subcommand(1, 1);
    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::vector<CLI::App*> subs;
    for (Kind k : {Kind::Fraunhofer, Kind::Kirchhoff, Kind::Ensemble, Kind::QtmPotential, Kind::QtmTrajectories,
                   Kind::QtmAccumulate}) {
        auto* sub = app.add_subcommand(std::string(kind_name(k)), "run the " + std::string(kind_name(k)) + " scenario");
        sub->add_option("--config", config_path, "scenario TOML file")->required();
        sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
        sub->add_option("--seed", seed, "64-bit seed (overrides seed)");
        sub->add_option("--threads", threads, "worker threads (fallback: ILAB_THREADS)");
        subs.push_back(sub);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }

    Kind kind = Kind::Fraunhofer;
    for (auto* sub : subs)
        if (sub->parsed()) kind = *parse_kind(sub->get_name());

    unsigned workers = 0;
    if (threads) {
        workers = *threads;
    } else if (const char* env = std::getenv("ILAB_THREADS")) {
        try {
            workers = static_cast<unsigned>(std::stoul(env));
        } catch (const std::exception&) {
            err << "error: ILAB_THREADS must be a non-negative integer\n";
            return 1;
        }
    }

    try {
        ScenarioConfig cfg = parse_config_file(config_path, kind);
        if (out_dir) cfg.output.dir = *out_dir;
        if (seed) cfg.seed = *seed;
        const RunReport report = run_scenario(cfg, workers);
        for (const auto& w : report.warnings) err << "warning: " << w << "\n";
        for (const auto& f : report.files) out << f.string() << "\n";
        out << report.manifest.string() << "\n";
        return 0;
    } catch (const ConfigError& e) {
        err << "config error [" << e.key() << "]: " << e.what() << "\n";
        return 1;
    } catch (const DomainError& e) {
        err << "config error: " << e.what() << "\n";
        return 1;
    } catch (const NormalizationError& e) {
        err << "config error: " << e.what() << "\n";
        return 1;
    } catch (const ConvergenceError& e) {
        err << "numerical error: " << e.what() << " (last " << e.last_estimate() << ", previous "
            << e.previous_estimate() << ")\n";
        return 2;
    } catch (const StepUnderflowError& e) {
        err << "numerical error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace ilab::scenario

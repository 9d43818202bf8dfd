#include "nlq/cli_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "nlq/leslie.hpp"
#include "nlq/verify.hpp"

namespace nlq {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(trim(cur));
    return out;
}

std::string fmt(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

double to_double(const std::string& v, int line, const std::string& key)
{
    double x = 0.0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
    if (v.empty() || r.ec != std::errc() || r.ptr != v.data() + v.size() || !std::isfinite(x))
        throw ConfigError(key + ": expected a number, got '" + v + "'", line);
    return x;
}

template <class Int>
Int to_int(const std::string& v, int line, const std::string& key)
{
    Int x = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
    if (v.empty() || r.ec != std::errc() || r.ptr != v.data() + v.size())
        throw ConfigError(key + ": expected an integer, got '" + v + "'", line);
    return x;
}

bool to_bool(const std::string& v, int line, const std::string& key)
{
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'", line);
}

std::vector<double> to_list(const std::string& v, int line, const std::string& key)
{
    std::vector<double> out;
    for (const auto& t : split(v, ',')) out.push_back(to_double(t, line, key));
    if (out.empty()) throw ConfigError(key + ": empty list", line);
    return out;
}

const char* scheme_name(StepperOptions::Scheme s)
{
    return s == StepperOptions::Scheme::imex_bdf2 ? "imex_bdf2" : "imex_euler";
}

std::string join(const std::vector<double>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
    return s;
}

}  // namespace

// ---------------------------------------------------------------- config

RunConfig parse_config_string(const std::string& text)
{
    RunConfig c;
    int n = c.grid.n;
    double L = c.grid.L;
    std::map<std::string, int> seen;
    using Setter = std::function<void(const std::string&, int, const std::string&)>;
    MaterialParams& m = c.material;
    const std::map<std::string, Setter> keys{
        {"grid.n", [&](auto& v, int l, auto& k) { n = to_int<int>(v, l, k); }},
        {"grid.L", [&](auto& v, int l, auto& k) { L = to_double(v, l, k); }},
        {"time.dt",
         [&](auto& v, int l, auto& k) {
             c.dt_auto = v == "auto";
             if (!c.dt_auto) {
                 c.dt = to_double(v, l, k);
                 if (!(c.dt > 0.0)) throw ConfigError("time.dt > 0 required", l);
             }
         }},
        {"time.t_end", [&](auto& v, int l, auto& k) { c.t_end = to_double(v, l, k); }},
        {"time.output_interval", [&](auto& v, int l, auto& k) { c.output_interval = to_double(v, l, k); }},
        {"time.scheme",
         [&](auto& v, int l, auto&) {
             if (v == "imex_euler") c.scheme = StepperOptions::Scheme::imex_euler;
             else if (v == "imex_bdf2") c.scheme = StepperOptions::Scheme::imex_bdf2;
             else throw ConfigError("time.scheme: expected imex_euler or imex_bdf2, got '" + v + "'", l);
         }},
        {"time.dealias", [&](auto& v, int l, auto& k) { c.dealias = to_bool(v, l, k); }},
        {"material.a", [&](auto& v, int l, auto& k) { m.a = to_double(v, l, k); }},
        {"material.b", [&](auto& v, int l, auto& k) { m.b = to_double(v, l, k); }},
        {"material.c", [&](auto& v, int l, auto& k) { m.c = to_double(v, l, k); }},
        {"material.L1", [&](auto& v, int l, auto& k) { m.L1 = to_double(v, l, k); }},
        {"material.Gamma", [&](auto& v, int l, auto& k) { m.Gamma = to_double(v, l, k); }},
        {"material.xi", [&](auto& v, int l, auto& k) { m.xi = to_double(v, l, k); }},
        {"material.eta", [&](auto& v, int l, auto& k) { m.eta = to_double(v, l, k); }},
        {"material.eps", [&](auto& v, int l, auto& k) { m.eps = to_double(v, l, k); }},
        {"init.kind",
         [&](auto& v, int l, auto&) {
             if (v != "uniaxial_director" && v != "file")
                 throw ConfigError("init.kind: expected uniaxial_director or file, got '" + v + "'", l);
             c.init_kind = v;
         }},
        {"init.amplitude", [&](auto& v, int l, auto& k) { c.amplitude = to_double(v, l, k); }},
        {"init.seed", [&](auto& v, int l, auto& k) { c.seed = to_int<std::uint64_t>(v, l, k); }},
        {"init.file", [&](auto& v, int, auto&) { c.init_file = v; }},
        {"init.v0_modes",
         [&](auto& v, int l, auto& k) {
             c.v0_modes.clear();
             for (const auto& item : split(v, ';')) {
                 if (item.empty()) continue;
                 const auto f = split(item, ':');
                 if (f.size() != 4) throw ConfigError(k + ": expected m1:m2:amplitude:phase, got '" + item + "'", l);
                 VelocityMode md{to_int<int>(f[0], l, k), to_int<int>(f[1], l, k), to_double(f[2], l, k),
                                 to_double(f[3], l, k)};
                 if (md.m1 == 0 && md.m2 == 0) throw ConfigError(k + ": zero wavenumber", l);
                 c.v0_modes.push_back(md);
             }
         }},
        {"sweep.epsilons", [&](auto& v, int l, auto& k) { c.epsilons = to_list(v, l, k); }},
        {"thresholds.delta0", [&](auto& v, int l, auto& k) { c.delta0 = to_double(v, l, k); }},
        {"thresholds.radii", [&](auto& v, int l, auto& k) { c.radii = to_list(v, l, k); }},
        {"thresholds.identity_tol", [&](auto& v, int l, auto& k) { c.identity_tol = to_double(v, l, k); }},
        {"thresholds.energy_tol", [&](auto& v, int l, auto& k) { c.energy_tol = to_double(v, l, k); }},
        {"output.dir", [&](auto& v, int, auto&) { c.output_dir = v; }},
    };

    std::istringstream is(text);
    std::string raw;
    int line = 0;
    while (std::getline(is, raw)) {
        ++line;
        const std::string s = trim(raw.substr(0, raw.find('#')));
        if (s.empty()) continue;
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("expected 'section.key = value'", line);
        const std::string key = trim(s.substr(0, eq)), val = trim(s.substr(eq + 1));
        const auto it = keys.find(key);
        if (it == keys.end()) throw ConfigError("unknown key '" + key + "'", line);
        if (seen.count(key)) throw ConfigError("duplicate key '" + key + "'", line);
        seen[key] = line;
        it->second(val, line, key);
    }
    auto line_of = [&](const std::string& k) { return seen.count(k) ? seen.at(k) : 0; };

    try {
        c.grid = Grid2D(n, L);
    } catch (const ParameterError& e) {
        throw ConfigError(e.what(), line_of(seen.count("grid.n") ? "grid.n" : "grid.L"));
    }
    try {
        m.validate();
        (void)s_plus(m);
    } catch (const ParameterError& e) {
        const std::string msg = e.what();
        const std::string tok = msg.substr(0, msg.find(' '));
        int l = line_of("material." + tok);
        if (l == 0)
            for (const auto& [k, v] : seen)
                if (k.rfind("material.", 0) == 0) l = std::max(l, v);
        throw ConfigError(msg, l);
    }
    if (!(c.t_end >= 0.0)) throw ConfigError("time.t_end >= 0 required", line_of("time.t_end"));
    if (!(c.output_interval >= 0.0))
        throw ConfigError("time.output_interval >= 0 required", line_of("time.output_interval"));
    for (std::size_t i = 0; i < c.epsilons.size(); ++i) {
        if (!(c.epsilons[i] > 0.0)) throw ConfigError("sweep.epsilons must be positive", line_of("sweep.epsilons"));
        if (i > 0 && !(c.epsilons[i] < c.epsilons[i - 1]))
            throw ConfigError("sweep.epsilons must be strictly decreasing", line_of("sweep.epsilons"));
    }
    for (double r : c.radii)
        if (!(r > 0.0)) throw ConfigError("thresholds.radii must be positive", line_of("thresholds.radii"));
    if (!(c.identity_tol > 0.0))
        throw ConfigError("thresholds.identity_tol > 0 required", line_of("thresholds.identity_tol"));
    if (!(c.energy_tol > 0.0)) throw ConfigError("thresholds.energy_tol > 0 required", line_of("thresholds.energy_tol"));
    if (c.init_kind == "file" && c.init_file.empty())
        throw ConfigError("missing required key init.file for init.kind = file", line_of("init.kind"));
    if (c.output_dir.empty()) throw ConfigError("output.dir must not be empty", line_of("output.dir"));
    return c;
}

RunConfig parse_config(const std::string& path)
{
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path, 0);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config_string(ss.str());
}

std::string serialize_config(const RunConfig& c)
{
    std::ostringstream os;
    const MaterialParams& m = c.material;
    os << "grid.n = " << c.grid.n << "\n"
       << "grid.L = " << fmt(c.grid.L) << "\n"
       << "time.dt = " << (c.dt_auto ? std::string("auto") : fmt(c.dt)) << "\n"
       << "time.t_end = " << fmt(c.t_end) << "\n"
       << "time.output_interval = " << fmt(c.output_interval) << "\n"
       << "time.scheme = " << scheme_name(c.scheme) << "\n"
       << "time.dealias = " << (c.dealias ? "true" : "false") << "\n"
       << "material.a = " << fmt(m.a) << "\n"
       << "material.b = " << fmt(m.b) << "\n"
       << "material.c = " << fmt(m.c) << "\n"
       << "material.L1 = " << fmt(m.L1) << "\n"
       << "material.Gamma = " << fmt(m.Gamma) << "\n"
       << "material.xi = " << fmt(m.xi) << "\n"
       << "material.eta = " << fmt(m.eta) << "\n"
       << "material.eps = " << fmt(m.eps) << "\n"
       << "init.kind = " << c.init_kind << "\n"
       << "init.amplitude = " << fmt(c.amplitude) << "\n"
       << "init.seed = " << c.seed << "\n";
    if (!c.init_file.empty()) os << "init.file = " << c.init_file << "\n";
    os << "init.v0_modes = ";
    for (std::size_t i = 0; i < c.v0_modes.size(); ++i) {
        const auto& md = c.v0_modes[i];
        os << (i ? "; " : "") << md.m1 << ":" << md.m2 << ":" << fmt(md.amplitude) << ":" << fmt(md.phase);
    }
    os << "\n"
       << "sweep.epsilons = " << join(c.epsilons) << "\n"
       << "thresholds.delta0 = " << fmt(c.delta0) << "\n"
       << "thresholds.radii = " << join(c.radii) << "\n"
       << "thresholds.identity_tol = " << fmt(c.identity_tol) << "\n"
       << "thresholds.energy_tol = " << fmt(c.energy_tol) << "\n"
       << "output.dir = " << c.output_dir << "\n";
    return os.str();
}

InitialData initial_data(const RunConfig& c)
{
    if (c.init_kind == "file") {
        Snapshot s;
        try {
            s = read_snapshot(c.init_file);
        } catch (const DomainError& e) {
            throw ConfigError(std::string("init.file: ") + e.what(), 0);
        }
        if (s.ncomp != 3) throw ConfigError("init.file: director snapshot must have 3 components", 0);
        InitialData d{VectorField3(s.grid), velocity_modes(s.grid, c.v0_modes)};
        d.d.data() = s.data;
        return d;
    }
    return {winding_director(c.grid, c.amplitude, c.seed), velocity_modes(c.grid, c.v0_modes)};
}

double resolve_dt(const RunConfig& c, const InitialData& init, Model m, const std::vector<double>& epsilons)
{
    if (!c.dt_auto) return c.dt;
    double dt = std::numeric_limits<double>::infinity();
    if (m != Model::el) {
        for (double e : epsilons) {
            MaterialParams pe = c.material;
            pe.eps = e;
            const WellPrepared w = well_prepared_init(init.d, init.v, pe);
            dt = std::min(dt, 0.8 * stability_cap(w.be.Q, pe));
        }
    }
    if (m != Model::be) {
        const WellPrepared w = well_prepared_init(init.d, init.v, c.material);
        dt = std::min(dt, 0.5 * el_stability_cap(w.el, derive_coefficients(c.material)));
    }
    if (c.output_interval > 0.0 && std::isfinite(dt)) dt = c.output_interval / std::ceil(c.output_interval / dt);
    return dt;
}

RunOptions run_options(const RunConfig& c, double dt)
{
    RunOptions o;
    o.dt = dt;
    o.t_end = c.t_end;
    o.output_interval = c.output_interval;
    o.stepper.scheme = c.scheme;
    o.stepper.dealias = c.dealias;
    return o;
}

// ---------------------------------------------------------------- CSV / JSON

const char* const energy_csv_header =
    "t,kinetic,elastic,bulk_over_eps,total,viscous_dissip_cum,rotational_dissip_cum,div_residual,min_eig_gap,"
    "dist_to_N_L2";

void write_energy_csv(std::ostream& os, const std::vector<EnergyRecord>& series)
{
    os << energy_csv_header << "\n";
    for (const auto& r : series) {
        os << fmt(r.t) << ',' << fmt(r.kinetic) << ',' << fmt(r.elastic) << ',' << fmt(r.bulk_over_eps) << ','
           << fmt(r.total) << ',' << fmt(r.viscous_dissip_cum) << ',' << fmt(r.rotational_dissip_cum) << ','
           << fmt(r.div_residual) << ',' << fmt(r.min_eig_gap) << ',' << fmt(r.dist_to_N_L2) << "\n";
    }
}

void write_energy_csv(const std::string& path, const std::vector<EnergyRecord>& series)
{
    std::ofstream os(path);
    if (!os) throw DomainError("cannot write " + path);
    write_energy_csv(os, series);
}

std::vector<EnergyRecord> read_energy_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line) || trim(line) != energy_csv_header)
        throw ConfigError("energy CSV header mismatch", 1);
    std::vector<EnergyRecord> out;
    int ln = 1;
    while (std::getline(is, line)) {
        ++ln;
        if (trim(line).empty()) continue;
        const auto f = split(trim(line), ',');
        if (f.size() != 10) throw ConfigError("energy CSV row has " + std::to_string(f.size()) + " fields", ln);
        std::array<double, 10> x{};
        for (int i = 0; i < 10; ++i) {
            char* end = nullptr;
            x[i] = std::strtod(f[i].c_str(), &end);
            if (f[i].empty() || *end != '\0') throw ConfigError("energy CSV: bad number '" + f[i] + "'", ln);
        }
        out.push_back({x[0], x[1], x[2], x[3], x[4], x[5], x[6], x[7], x[8], x[9]});
    }
    return out;
}

std::vector<EnergyRecord> read_energy_csv(const std::string& path)
{
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open " + path, 0);
    return read_energy_csv(is);
}

const char* const sweep_csv_header =
    "epsilon,diverged,sup_bulk_over_eps,sup_dist_to_N_L2,director_error_L2,velocity_error_L2,concentration_count,"
    "count_bound,d3_bound_ratio";

void write_sweep_csv(std::ostream& os, const SweepReport& r)
{
    os << sweep_csv_header << "\n";
    for (const auto& x : r.records) {
        os << fmt(x.eps) << ',' << (x.diverged ? 1 : 0) << ',' << fmt(x.sup_bulk_over_eps) << ','
           << fmt(x.sup_dist_L2) << ',' << fmt(x.director_error) << ',' << fmt(x.velocity_error) << ','
           << x.concentration_count << ',' << x.count_bound << ',' << fmt(x.d3_bound_ratio) << "\n";
    }
}

std::string sweep_json(const SweepReport& r, const std::vector<std::string>& series_files, const std::string& el_file)
{
    json j;
    j["t_end"] = r.t_end;
    j["dt"] = r.dt;
    const MaterialParams& p = r.params;
    j["material"] = {{"a", p.a}, {"b", p.b}, {"c", p.c}, {"L1", p.L1}, {"Gamma", p.Gamma}, {"xi", p.xi}, {"eta", p.eta}};
    json recs = json::array();
    for (std::size_t i = 0; i < r.records.size(); ++i) {
        const auto& x = r.records[i];
        recs.push_back({{"epsilon", x.eps},
                        {"diverged", x.diverged},
                        {"error", x.error},
                        {"sup_bulk_over_eps", x.sup_bulk_over_eps},
                        {"sup_dist_to_N_L2", x.sup_dist_L2},
                        {"director_error_L2", x.director_error},
                        {"velocity_error_L2", x.velocity_error},
                        {"concentration_count", x.concentration_count},
                        {"count_bound", x.count_bound},
                        {"d3_bound_ratio", x.d3_bound_ratio},
                        {"series_file", i < series_files.size() ? series_files[i] : ""}});
    }
    j["records"] = recs;
    j["el"] = {{"diverged", r.el_diverged}, {"error", r.el_error}, {"series_file", el_file}};
    j["summary"] = {{"bulk_monotone", r.bulk_monotone()},
                    {"director_monotone", r.director_monotone()},
                    {"director_ratio", r.director_ratio()},
                    {"counts_within_bound", r.counts_within_bound()}};
    return j.dump(2);
}

const char* const plot_csv_header = "epsilon,metric,value,t";

void export_plot_data(const std::string& sweep_dir, std::ostream& os)
{
    const fs::path dir(sweep_dir);
    std::ifstream is(dir / "sweep.json");
    if (!is) throw ConfigError("cannot open " + (dir / "sweep.json").string(), 0);
    json j;
    try {
        j = json::parse(is);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("sweep.json: ") + e.what(), 0);
    }
    static const char* const names[] = {"kinetic", "elastic", "bulk_over_eps", "total", "viscous_dissip_cum",
                                        "rotational_dissip_cum", "div_residual", "min_eig_gap", "dist_to_N_L2"};
    auto series_rows = [&](double eps, const std::string& file) {
        if (file.empty()) return;
        for (const auto& r : read_energy_csv((dir / file).string())) {
            const double v[] = {r.kinetic, r.elastic, r.bulk_over_eps, r.total, r.viscous_dissip_cum,
                                r.rotational_dissip_cum, r.div_residual, r.min_eig_gap, r.dist_to_N_L2};
            for (int k = 0; k < 9; ++k) os << fmt(eps) << ',' << names[k] << ',' << fmt(v[k]) << ',' << fmt(r.t) << "\n";
        }
    };
    auto num = [](const json& x) { return x.is_number() ? x.get<double>() : std::numeric_limits<double>::quiet_NaN(); };
    try {
        const double t_end = j.at("t_end").get<double>();
        os << plot_csv_header << "\n";
        for (const auto& rec : j.at("records")) {
            const double eps = rec.at("epsilon").get<double>();
            series_rows(eps, rec.at("series_file").get<std::string>());
            for (const char* m : {"sup_bulk_over_eps", "sup_dist_to_N_L2", "director_error_L2", "velocity_error_L2",
                                  "concentration_count", "count_bound"})
                os << fmt(eps) << ',' << m << ',' << fmt(num(rec.at(m))) << ',' << fmt(t_end) << "\n";
        }
        series_rows(0.0, j.at("el").at("series_file").get<std::string>());
    } catch (const json::exception& e) {
        throw ConfigError(std::string("sweep.json schema: ") + e.what(), 0);
    }
}

std::string error_json(const std::string& kind, const std::string& message, int exit_code)
{
    return json{{"error", kind}, {"message", message}, {"exit_code", exit_code}}.dump();
}

std::string error_json(const Error& e)
{
    json j{{"error", e.kind()}, {"message", e.what()}, {"exit_code", e.exit_code()}};
    if (const auto* ce = dynamic_cast<const ConfigError*>(&e); ce && ce->line() > 0) j["line"] = ce->line();
    return j.dump();
}

// ---------------------------------------------------------------- CLI

namespace {

struct Common {
    std::string config;
    std::string out;
};

RunConfig load(const Common& o)
{
    RunConfig c = o.config.empty() ? RunConfig{} : parse_config(o.config);
    if (!o.out.empty()) c.output_dir = o.out;
    return c;
}

fs::path prepare_dir(const RunConfig& c)
{
    fs::path d(c.output_dir);
    fs::create_directories(d);
    return d;
}

template <int NC>
void snap(const fs::path& p, const Field<NC>& f, double t)
{
    write_snapshot(p.string(), f.grid(), t, NC, f.data());
}

int simulate_be(const Common& o, std::ostream& out)
{
    const RunConfig c = load(o);
    const InitialData init = initial_data(c);
    const double dt = resolve_dt(c, init, Model::be, {c.material.eps});
    WellPrepared w = well_prepared_init(init.d, init.v, c.material);
    const fs::path dir = prepare_dir(c);
    snap(dir / "be_Q_0.nlq", w.be.Q, w.be.t);
    snap(dir / "be_v_0.nlq", w.be.v, w.be.t);
    const BERunResult r = run_be(std::move(w.be), c.material, run_options(c, dt));
    write_energy_csv((dir / "be_series.csv").string(), r.series);
    snap(dir / "be_Q_1.nlq", r.final_state.Q, r.final_state.t);
    snap(dir / "be_v_1.nlq", r.final_state.v, r.final_state.t);
    out << "simulate-be: " << r.steps << " steps, dt " << fmt(dt) << ", final total " << fmt(r.series.back().total)
        << " -> " << dir.string() << "\n";
    return 0;
}

int simulate_el(const Common& o, std::ostream& out)
{
    const RunConfig c = load(o);
    const InitialData init = initial_data(c);
    const double dt = resolve_dt(c, init, Model::el, {});
    WellPrepared w = well_prepared_init(init.d, init.v, c.material);
    const fs::path dir = prepare_dir(c);
    snap(dir / "el_d_0.nlq", w.el.d, w.el.t);
    snap(dir / "el_v_0.nlq", w.el.v, w.el.t);
    const ELRunResult r = run_el(std::move(w.el), derive_coefficients(c.material), run_options(c, dt));
    write_energy_csv((dir / "el_series.csv").string(), r.series);
    snap(dir / "el_d_1.nlq", r.final_state.d, r.final_state.t);
    snap(dir / "el_v_1.nlq", r.final_state.v, r.final_state.t);
    out << "simulate-el: " << r.steps << " steps, dt " << fmt(dt) << ", final total " << fmt(r.series.back().total)
        << " -> " << dir.string() << "\n";
    return 0;
}

int sweep(const Common& o, std::ostream& out)
{
    const RunConfig c = load(o);
    const InitialData init = initial_data(c);
    const double dt = resolve_dt(c, init, Model::both, c.epsilons);
    SweepOptions so;
    so.run = run_options(c, dt);
    so.radii = c.radii;
    so.delta0 = c.delta0;
    const SweepReport r = run_sweep(init.d, init.v, c.epsilons, c.material, so);
    const fs::path dir = prepare_dir(c);
    std::vector<std::string> files;
    for (std::size_t i = 0; i < r.records.size(); ++i) {
        files.push_back("series_eps_" + std::to_string(i) + ".csv");
        write_energy_csv((dir / files.back()).string(), r.records[i].series);
    }
    write_energy_csv((dir / "el_series.csv").string(), r.el_series);
    {
        std::ofstream os(dir / "sweep.csv");
        write_sweep_csv(os, r);
    }
    {
        std::ofstream os(dir / "sweep.json");
        os << sweep_json(r, files, "el_series.csv") << "\n";
    }
    for (const auto& x : r.records) {
        out << "eps " << fmt(x.eps) << (x.diverged ? " diverged: " + x.error : "") << " sup_bulk "
            << fmt(x.sup_bulk_over_eps) << " director_error " << fmt(x.director_error) << "\n";
    }
    out << "sweep: dt " << fmt(dt) << " -> " << dir.string() << "\n";
    return 0;
}

int verify(const Common& o, const std::string& suite, std::ostream& out)
{
    const RunConfig c = load(o);
    int failed = 0;
    for (const auto& r : verify_suite(suite, c)) {
        out << format_check(r) << "\n";
        if (!r.pass) ++failed;
    }
    if (failed) throw VerificationFailure(std::to_string(failed) + " check(s) failed in suite " + suite);
    return 0;
}

int export_plot(const Common& o, const std::string& dir_opt, const std::string& file_opt, std::ostream& out)
{
    const std::string dir = dir_opt.empty() ? load(o).output_dir : dir_opt;
    const std::string file = file_opt.empty() ? (fs::path(dir) / "plot_data.csv").string() : file_opt;
    std::ostringstream buf;
    export_plot_data(dir, buf);
    std::ofstream os(file);
    if (!os) throw DomainError("cannot write " + file);
    os << buf.str();
    out << "export-plot-data -> " << file << "\n";
    return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Beris-Edwards to Ericksen-Leslie limit laboratory", "nlq"};
    app.require_subcommand(1);
    Common common;
    std::string suite = "all", plot_dir, plot_file;
    auto add_common = [&](CLI::App* s) {
        s->add_option("-c,--config", common.config, "configuration file")->check(CLI::ExistingFile);
        s->add_option("-o,--out", common.out, "output directory (overrides output.dir)");
    };
    auto* be = app.add_subcommand("simulate-be", "run the Beris-Edwards model");
    auto* el = app.add_subcommand("simulate-el", "run the Ericksen-Leslie model");
    auto* sw = app.add_subcommand("sweep", "eps sweep against the Ericksen-Leslie run");
    auto* vf = app.add_subcommand("verify", "property and identity suites");
    auto* ex = app.add_subcommand("export-plot-data", "collate sweep output into one long CSV");
    for (auto* s : {be, el, sw, vf}) add_common(s);
    vf->add_option("--suite", suite, "algebra | coefficients | identities | all")
        ->check(CLI::IsMember({"algebra", "coefficients", "identities", "all"}));
    ex->add_option("-c,--config", common.config, "configuration file")->check(CLI::ExistingFile);
    ex->add_option("-d,--dir", plot_dir, "sweep output directory");
    ex->add_option("-f,--file", plot_file, "output CSV (default <dir>/plot_data.csv)");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << error_json("usage", e.what(), 2) << "\n";
        return 2;
    }

    try {
        if (be->parsed()) return simulate_be(common, out);
        if (el->parsed()) return simulate_el(common, out);
        if (sw->parsed()) return sweep(common, out);
        if (vf->parsed()) return verify(common, suite, out);
        return export_plot(common, plot_dir, plot_file, out);
    } catch (const Error& e) {
        err << error_json(e) << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        err << error_json("internal", e.what(), 1) << "\n";
        return 1;
    }
}

}  // namespace nlq

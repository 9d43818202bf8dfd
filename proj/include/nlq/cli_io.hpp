#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "nlq/errors.hpp"
#include "nlq/limit_lab.hpp"

namespace nlq {

// Text format: one `section.key = value` per line, `#` starts a comment.
//
//   grid.n = 64                      power of two >= 8
//   grid.L = 6.283185307179586
//   time.dt = auto                   or a positive number
//   time.t_end = 0.5
//   time.output_interval = 0.05      0: every step
//   time.scheme = imex_euler         imex_euler | imex_bdf2
//   time.dealias = true
//   material.{a,b,c,L1,Gamma,xi,eta,eps}    defaults 1,1,1,1,1,0.1,1,0.1
//   init.kind = uniaxial_director    uniaxial_director | file
//   init.amplitude = 1
//   init.seed = 0
//   init.file = path                 required for kind = file (3-component snapshot)
//   init.v0_modes = 1:1:0.5:0; 0:2:0.3:1.1   m1:m2:amplitude:phase, ';'-separated
//   sweep.epsilons = 0.1,0.05,0.025
//   thresholds.delta0 = -1           <= 0: 1% of the initial energy
//   thresholds.radii = 0.5,1
//   thresholds.identity_tol = 1e-6
//   thresholds.energy_tol = 1e-6
//   output.dir = out
struct RunConfig {
    Grid2D grid;
    bool dt_auto = true;
    double dt = 0.0;
    double t_end = 0.5;
    double output_interval = 0.05;
    StepperOptions::Scheme scheme = StepperOptions::Scheme::imex_euler;
    bool dealias = true;
    MaterialParams material = default_material();
    std::string init_kind = "uniaxial_director";
    double amplitude = 1.0;
    std::uint64_t seed = 0;
    std::string init_file;
    std::vector<VelocityMode> v0_modes;
    std::vector<double> epsilons{0.1, 0.05, 0.025};
    double delta0 = -1.0;
    std::vector<double> radii{0.5, 1.0};
    double identity_tol = 1e-6;
    double energy_tol = 1e-6;
    std::string output_dir = "out";

    static MaterialParams default_material()
    {
        MaterialParams p;
        p.xi = 0.1;
        return p;
    }
};

RunConfig parse_config(const std::string& path);
RunConfig parse_config_string(const std::string& text);
std::string serialize_config(const RunConfig& c);

// Director and velocity of the configured initial data.
struct InitialData {
    VectorField3 d;
    VectorField3 v;
};
InitialData initial_data(const RunConfig& c);

// Explicit dt, or for dt = auto the largest step below 0.8 of the BE eps cap
// (every listed eps) and 0.5 of the EL cap that divides the output interval.
enum class Model { be, el, both };
double resolve_dt(const RunConfig& c, const InitialData& init, Model m, const std::vector<double>& epsilons);

RunOptions run_options(const RunConfig& c, double dt);

// ---------------------------------------------------------------- CSV / JSON

extern const char* const energy_csv_header;
void write_energy_csv(std::ostream& os, const std::vector<EnergyRecord>& series);
void write_energy_csv(const std::string& path, const std::vector<EnergyRecord>& series);
// Throws ConfigError (with line number) on a header or row mismatch.
std::vector<EnergyRecord> read_energy_csv(std::istream& is);
std::vector<EnergyRecord> read_energy_csv(const std::string& path);

extern const char* const sweep_csv_header;
void write_sweep_csv(std::ostream& os, const SweepReport& r);
// series_files[i] names the series CSV of record i; el_file the EL series.
std::string sweep_json(const SweepReport& r, const std::vector<std::string>& series_files, const std::string& el_file);

// Long table epsilon,metric,value,t from a sweep directory (sweep.json plus the
// series files it lists). EL rows carry epsilon = 0.
extern const char* const plot_csv_header;
void export_plot_data(const std::string& sweep_dir, std::ostream& os);

// {"error": kind, "message": ..., "exit_code": n[, "line": l]}
std::string error_json(const Error& e);
std::string error_json(const std::string& kind, const std::string& message, int exit_code);

// Entry point of the nlq tool; returns the process exit code.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nlq

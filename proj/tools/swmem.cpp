// Command-line front end: simulate, sweep, reproduce, fit.

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "swmem/app.hpp"

namespace {

using namespace swmem;

// Writes to a file when a path is given, stdout otherwise.
class Output {
public:
    explicit Output(const std::string& path)
    {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path);
            if (!*file_)
                throw ConfigError("cannot open output file '" + path + "'", 0, "");
        }
    }

    std::ostream& stream() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

void report_config_error(const ConfigError& e)
{
    std::cerr << "config error";
    if (e.line() > 0)
        std::cerr << " (line " << e.line() << ")";
    if (!e.field().empty())
        std::cerr << " [" << e.field() << "]";
    std::cerr << ": " << e.what() << '\n';
}

struct CommonOptions {
    unsigned threads = 1;
    double gaussian_min_angle_deg = 0.6;
    std::optional<double> fixed_a;
    bool exclude_first = false;
    bool gravity = false;

    void add_to(CLI::App* cmd)
    {
        cmd->add_option("--threads", threads, "Worker threads (0 = all cores)");
        cmd->add_option("--gaussian-min-angle", gaussian_min_angle_deg,
                        "Smallest angle (deg) fitted with the Gaussian model");
        cmd->add_option("--fix-A", fixed_a, "Pin the loss rate A (s^-2) of combined fits");
        cmd->add_flag("--exclude-first", exclude_first, "Drop the first delay from the fit");
        cmd->add_flag("--gravity", gravity, "Include free fall in the mode-survival factor");
    }

    RunOptions run_options() const
    {
        RunOptions o;
        o.exec.threads = threads;
        o.gaussian_min_angle_deg = gaussian_min_angle_deg;
        o.fixed_a = fixed_a;
        o.exclude_first_point = exclude_first;
        o.gravity = gravity;
        return o;
    }
};

int cmd_simulate(const std::string& config_path, const CommonOptions& common, const std::string& csv_path,
                 const std::string& report_path, const std::string& plot_path)
{
    const ScenarioConfig cfg = load_scenario_config(config_path, seed_from_environment());
    const SimulationOutcome out = run_simulation(cfg, common.run_options());

    Output csv(csv_path);
    write_curve_csv(csv.stream(), out.curve);
    csv.stream().flush();

    if (!plot_path.empty()) {
        Output plot(plot_path);
        plot.stream() << gnuplot_script(csv_path.empty() ? "curve.csv" : csv_path, out.fit);
    }

    Output report(report_path);
    if (!out.fit) {
        report.stream() << "model=" << model_name(out.model) << "\nfit_error=" << out.fit_error << '\n';
        std::cerr << "fit failed: " << out.fit_error << '\n';
        return kExitNumerical;
    }
    write_fit_report(report.stream(), *out.fit);
    return kExitOk;
}

int cmd_sweep(const std::string& config_path, const std::vector<double>& angles, const CommonOptions& common,
              const std::string& csv_path, const std::string& report_path)
{
    const ScenarioConfig cfg = load_scenario_config(config_path, seed_from_environment());
    for (double a : angles) {
        if (!(a >= 0.0 && a < 90.0))
            throw ConfigError("sweep angles must lie in [0, 90) degrees", 0, "angles");
    }
    const SweepOutcome sweep = run_sweep(cfg, angles, common.run_options());

    Output csv(csv_path);
    write_sweep_csv(csv.stream(), sweep);
    csv.stream().flush();
    Output report(report_path);
    write_temperature_report(report.stream(), sweep);

    bool ok = sweep.temperature.has_value();
    for (const SweepEntry& e : sweep.entries) {
        if (!e.outcome.fit) {
            std::cerr << "fit failed at theta = " << e.theta_deg << " deg: " << e.outcome.fit_error << '\n';
            ok = false;
        }
    }
    return ok ? kExitOk : kExitNumerical;
}

int cmd_fit(const std::string& csv_path, const std::string& model, const CommonOptions& common,
            const std::string& report_path)
{
    const auto kind = parse_model_name(model);
    if (!kind)
        throw ConfigError("unknown model '" + model + "' (gaussian, lorentzian, combined)", 0, "model");
    std::ifstream in(csv_path);
    if (!in)
        throw ConfigError("cannot open '" + csv_path + "'", 0, "");
    const DecayCurve curve = read_curve_csv(in);

    FitOptions opts;
    opts.exclude_first_point = common.exclude_first;
    opts.fixed_a = common.fixed_a;
    Output report(report_path);
    try {
        write_fit_report(report.stream(), fit_decay(curve, *kind, opts));
    } catch (const FitFailure& e) {
        std::cerr << "fit failed: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Spin-wave quantum memory decoherence simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string csv_path;
    std::string report_path;
    std::string plot_path;
    std::string model = "gaussian";
    std::vector<double> angles;
    CommonOptions common;

    auto* simulate = app.add_subcommand("simulate", "Synthesize and fit one decay curve");
    simulate->add_option("config", config_path, "Scenario config (key = value or JSON)")->required();
    simulate->add_option("--csv", csv_path, "Curve CSV output (default: stdout)");
    simulate->add_option("--report", report_path, "Fit report output (default: stdout)");
    simulate->add_option("--plot", plot_path, "Write a gnuplot script");
    common.add_to(simulate);

    auto* sweep = app.add_subcommand("sweep", "Lifetime versus detection angle, with thermometry");
    sweep->add_option("config", config_path, "Base scenario config")->required();
    sweep->add_option("--angles", angles, "Detection angles in degrees")->required()->delimiter(',');
    sweep->add_option("--csv", csv_path, "Per-angle fit CSV output (default: stdout)");
    sweep->add_option("--report", report_path, "Temperature report output (default: stdout)");
    common.add_to(sweep);

    ReproduceInputs repro;
    auto* reproduce = app.add_subcommand("reproduce", "Compare computed reference quantities with expected values");
    reproduce->add_option("--temperature-uK", repro.temperature_uK);
    reproduce->add_option("--theta-deg", repro.theta_deg);
    reproduce->add_option("--wavelength-nm", repro.write_wavelength_nm);
    reproduce->add_option("--waist-um", repro.waist_um);
    reproduce->add_option("--density-per-cm3", repro.density_per_cm3);
    reproduce->add_option("--bias-G", repro.bias_field_G);

    auto* fit = app.add_subcommand("fit", "Fit a delay_us,g,sigma_g CSV");
    fit->add_option("csv", csv_path, "Input curve CSV")->required();
    fit->add_option("--model", model, "gaussian | lorentzian | combined");
    fit->add_option("--report", report_path, "Fit report output (default: stdout)");
    fit->add_option("--fix-A", common.fixed_a, "Pin the loss rate A (s^-2) of a combined fit");
    fit->add_flag("--exclude-first", common.exclude_first, "Drop the first delay from the fit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*simulate)
            return cmd_simulate(config_path, common, csv_path, report_path, plot_path);
        if (*sweep)
            return cmd_sweep(config_path, angles, common, csv_path, report_path);
        if (*reproduce) {
            write_reproduce_table(std::cout, reproduce_table(repro));
            return kExitOk;
        }
        if (*fit)
            return cmd_fit(csv_path, model, common, report_path);
    } catch (const ConfigError& e) {
        report_config_error(e);
        return kExitConfig;
    } catch (const CsvError& e) {
        std::cerr << "csv error (line " << e.line() << "): " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitOk;
}

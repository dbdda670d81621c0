#include "swmem/app.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <sstream>

namespace swmem {

namespace {

enum Stream : std::uint64_t { kSweepStream = 0x5eed };

} // namespace

ModelKind select_model(double theta_deg, double gaussian_min_angle_deg)
{
    if (theta_deg == 0.0)
        return ModelKind::LorentzianLoss;
    if (theta_deg < gaussian_min_angle_deg)
        return ModelKind::Combined;
    return ModelKind::GaussianMotional;
}

namespace {

SimulationOutcome simulate_and_fit(const ScenarioConfig& config, const RunOptions& options)
{
    Scenario scenario = config.to_scenario();
    scenario.gravity = options.gravity;
    const std::vector<double> delays = config.delays_seconds();

    SimulationOutcome out;
    out.model = select_model(config.theta_deg, options.gaussian_min_angle_deg);
    out.curve = synthesize_curve(scenario, delays, config.trials_per_point, config.seed, options.exec);

    FitOptions fit_opts;
    fit_opts.exclude_first_point = options.exclude_first_point;
    if (out.model == ModelKind::Combined)
        fit_opts.fixed_a = options.fixed_a;
    try {
        out.fit = fit_decay(out.curve, out.model, fit_opts);
    } catch (const std::exception& e) {
        out.fit_error = e.what();
    }
    return out;
}

} // namespace

SimulationOutcome run_simulation(const ScenarioConfig& config, const RunOptions& options)
{
    config.validate();
    if (select_model(config.theta_deg, options.gaussian_min_angle_deg) != ModelKind::Combined || options.fixed_a)
        return simulate_and_fit(config, options);

    // A free combined fit is degenerate; pin A from a collinear run.
    const SimulationOutcome ref = simulate_and_fit(config_for_angle(config, 0.0, 0), options);
    RunOptions pinned = options;
    if (ref.fit && ref.fit->a)
        pinned.fixed_a = ref.fit->a->value;
    SimulationOutcome out = simulate_and_fit(config, pinned);
    out.collinear_fit = ref.fit;
    if (!pinned.fixed_a && out.fit_error.empty())
        out.fit_error = "collinear reference fit failed: " + ref.fit_error;
    return out;
}

double predicted_lifetime(const Scenario& scenario)
{
    auto gamma = [&](double t) { return analytic_efficiency(scenario, t); };
    const double target = std::exp(-1.0);
    double t_hi = 1e-7;
    while (gamma(t_hi) > target) {
        t_hi *= 2.0;
        if (t_hi > 1e4)
            throw DomainError("efficiency does not decay to 1/e");
    }
    return one_over_e_time(gamma, t_hi);
}

ScenarioConfig config_for_angle(const ScenarioConfig& base, double theta_deg, std::uint64_t index)
{
    ScenarioConfig cfg = base;
    cfg.theta_deg = theta_deg;
    if (theta_deg == 0.0)
        cfg.geometry_mode = GeometryMode::Exact;
    const double scale = predicted_lifetime(cfg.to_scenario()) / predicted_lifetime(base.to_scenario());
    for (double& d : cfg.delays_us)
        d *= scale;
    cfg.seed = derived_engine(base.seed, kSweepStream, index)();
    cfg.validate();
    return cfg;
}

SweepOutcome run_sweep(const ScenarioConfig& base, std::span<const double> thetas_deg, const RunOptions& options)
{
    if (thetas_deg.empty())
        throw DomainError("no sweep angles");
    base.validate();

    SweepOutcome sweep;
    RunOptions opts = options;
    bool needs_a = false;
    for (double th : thetas_deg)
        needs_a = needs_a || select_model(th, options.gaussian_min_angle_deg) == ModelKind::Combined;

    if (needs_a && !opts.fixed_a) {
        SweepEntry ref;
        ref.theta_deg = 0.0;
        ref.config = config_for_angle(base, 0.0, thetas_deg.size());
        ref.outcome = simulate_and_fit(ref.config, options);
        if (ref.outcome.fit && ref.outcome.fit->a)
            opts.fixed_a = ref.outcome.fit->a->value;
        sweep.collinear_reference = std::move(ref);
    }

    std::vector<AngleLifetime> points;
    for (std::size_t i = 0; i < thetas_deg.size(); ++i) {
        SweepEntry e;
        e.theta_deg = thetas_deg[i];
        e.config = config_for_angle(base, thetas_deg[i], i);
        e.outcome = run_simulation(e.config, opts);
        if (e.theta_deg > 0.0 && e.outcome.fit && e.outcome.fit->tau_d)
            points.push_back({constants::deg_to_rad(e.theta_deg), e.outcome.fit->tau_d->value, e.outcome.fit->tau_d->sigma});
        sweep.entries.push_back(std::move(e));
    }

    try {
        BeamGeometry geo = base.to_scenario().geometry;
        sweep.temperature = infer_temperature(points, geo, SpeciesConstants{});
    } catch (const std::exception& e) {
        sweep.temperature_error = e.what();
    }
    return sweep;
}

void write_sweep_csv(std::ostream& os, const SweepOutcome& sweep)
{
    const std::string header = fit_csv_header();
    os << "theta_deg" << header.substr(header.find(',')) << '\n';
    for (const SweepEntry& e : sweep.entries) {
        if (e.outcome.fit) {
            os << fit_csv_row(format_sig6(e.theta_deg), *e.outcome.fit) << '\n';
        } else {
            os << format_sig6(e.theta_deg) << ',' << model_name(e.outcome.model) << ",,,,,,,,,\n";
        }
    }
}

void write_temperature_report(std::ostream& os, const SweepOutcome& sweep)
{
    if (sweep.collinear_reference && sweep.collinear_reference->outcome.fit &&
        sweep.collinear_reference->outcome.fit->a) {
        const FitResult& f = *sweep.collinear_reference->outcome.fit;
        os << "collinear_A_per_s2=" << format_sig6(f.a->value) << '\n';
        os << "collinear_lifetime_us=" << format_sig6(f.lifetime / constants::kMicro) << '\n';
    }
    if (!sweep.temperature) {
        os << "temperature_error=" << sweep.temperature_error << '\n';
        return;
    }
    const TemperatureEstimate& t = *sweep.temperature;
    os << "temperature_uK=" << format_sig6(t.temperature / constants::kMicro) << '\n';
    os << "temperature_sigma_uK=" << format_sig6(t.sigma / constants::kMicro) << '\n';
    os << "v_s_m_per_s=" << format_sig6(t.v_s) << '\n';
    os << "v_s_sigma_m_per_s=" << format_sig6(t.v_s_sigma) << '\n';
    os << "points=" << t.points_used << '\n';
}

std::string gnuplot_script(const std::string& csv_path, const std::optional<FitResult>& fit)
{
    std::ostringstream os;
    os << "set datafile separator ','\n"
       << "set xlabel 'storage time (us)'\n"
       << "set ylabel 'g_{S,AS}'\n";
    if (fit) {
        const double c = fit->c.value;
        os << "C = " << format_sig6(c) << '\n';
        const double tau = fit->tau_d ? fit->tau_d->value / constants::kMicro : 0.0;
        const double a = fit->a ? fit->a->value * constants::kMicro * constants::kMicro : 0.0;
        os << "tau = " << format_sig6(tau) << '\n' << "A = " << format_sig6(a) << '\n';
        switch (fit->model) {
        case ModelKind::GaussianMotional:
            os << "f(x) = 1 + C*exp(-(x/tau)**2)\n";
            break;
        case ModelKind::LorentzianLoss:
            os << "f(x) = 1 + C/(1 + A*x**2)\n";
            break;
        case ModelKind::Combined:
            os << "f(x) = 1 + C*exp(-(x/tau)**2)/(1 + A*x**2)\n";
            break;
        }
        os << "plot '" << csv_path << "' every ::1 using 1:2:3 with yerrorbars title 'simulated', f(x) title '"
           << model_name(fit->model) << " fit'\n";
    } else {
        os << "plot '" << csv_path << "' every ::1 using 1:2:3 with yerrorbars title 'simulated'\n";
    }
    return os.str();
}

// -- Reproduction table -----------------------------------------------------

double ReproduceRow::deviation() const
{
    if (reference == 0.0)
        return std::abs(computed);
    return std::abs(computed - reference) / std::abs(reference);
}

std::vector<ReproduceRow> reproduce_table(const ReproduceInputs& in)
{
    EnsembleParams ens;
    ens.temperature = in.temperature_uK * constants::kMicro;
    ens.cloud_radius_r0 = in.waist_um * constants::kMicro;
    ens.density = in.density_per_cm3 * constants::kPerCubicCm;

    BeamGeometry angled;
    angled.write_wavelength = in.write_wavelength_nm * 1e-9;
    angled.detection_angle_theta = constants::deg_to_rad(in.theta_deg);
    BeamGeometry collinear = angled;
    collinear.detection_angle_theta = 0.0;

    const SpinWaveVector sw_angled = spin_wave_vector(angled, ens.species);
    const SpinWaveVector sw_collinear = spin_wave_vector(collinear, ens.species);
    const double v_s = one_d_speed(ens);
    const double v_r = radial_speed(ens);

    std::vector<ReproduceRow> rows;
    auto add = [&](std::string q, std::string unit, double computed, double ref, double lo, double hi) {
        rows.push_back({std::move(q), std::move(unit), computed, ref, lo, hi, computed >= lo && computed <= hi});
    };
    add("spin-wave wavelength, angled", "um", sw_angled.wavelength_lambda / constants::kMicro, 15.0, 14.5, 15.5);
    add("spin-wave wavelength, collinear", "cm", sw_collinear.wavelength_lambda * 100.0, 4.4, 4.3, 4.5);
    add("1D thermal speed v_s", "m/s", v_s, 0.1, 0.09, 0.11);
    add("motional lifetime tau_D, angled", "us", motional_lifetime(sw_angled, v_s) / constants::kMicro, 25.0, 23.0,
        27.0);
    add("motional lifetime tau_D, collinear", "ms", motional_lifetime(sw_collinear, v_s) * 1e3, 72.0, 68.0, 76.0);
    add("loss lifetime tau_L", "us", loss_lifetime(ens.cloud_radius_r0, v_r) / constants::kMicro, 950.0, 900.0,
        1000.0);
    add("collision rate", "Hz", collision_rate(ens), 1.0, 0.7, 1.3);
    for (const StatePair& pair : kClockPairs) {
        ZeemanConfig z;
        z.pair = pair;
        z.bias_field = in.bias_field_G * constants::kGauss;
        add("first-order shift " + format_state_pair(pair), "Hz",
            first_order_zeeman_shift(z) / (2.0 * std::numbers::pi), 0.0, -1e-9, 1e-9);
    }
    return rows;
}

void write_reproduce_table(std::ostream& os, const std::vector<ReproduceRow>& rows)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-36s %-5s %12s %12s %10s  %s\n", "quantity", "unit", "computed", "reference",
                  "deviation", "status");
    os << buf;
    for (const ReproduceRow& r : rows) {
        std::snprintf(buf, sizeof buf, "%-36s %-5s %12.6g %12.6g %9.2f%%  %s\n", r.quantity.c_str(), r.unit.c_str(),
                      r.computed, r.reference, 100.0 * r.deviation(), r.pass ? "PASS" : "FAIL");
        os << buf;
    }
}

} // namespace swmem

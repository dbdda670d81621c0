// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "swmem/app.hpp"

using namespace swmem;

namespace {

const std::filesystem::path kConfigs = SWMEM_CONFIG_DIR;

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

int failures = 0;

void report(int id, const std::string& title, const std::function<void(Verdict&)>& body)
{
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
        body(v);
    } catch (const std::exception& e) {
        v.pass = false;
        v.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!v.pass)
        ++failures;
    std::printf("%s %d %s:%s (%.1f s)\n", v.pass ? "PASS" : "FAIL", id, title.c_str(), v.detail.str().c_str(), secs);
    std::fflush(stdout);
}

EnsembleParams cloud(double temperature, std::size_t n)
{
    EnsembleParams p;
    p.temperature = temperature;
    p.atom_count = n;
    return p;
}

BeamGeometry at(double theta_deg)
{
    BeamGeometry g;
    g.detection_angle_theta = constants::deg_to_rad(theta_deg);
    return g;
}

double tau_d(double temperature, double theta_deg)
{
    const SpeciesConstants sp;
    return motional_lifetime(spin_wave_vector(at(theta_deg), sp), one_d_speed(temperature, sp));
}

ScenarioConfig config(const std::string& name) { return load_scenario_config(kConfigs / name); }

bool within(double x, double lo, double hi) { return x >= lo && x <= hi; }

} // namespace

int main()
{
    const Execution all_cores{0};

    report(1, "spin-wave wavelength", [](Verdict& v) {
        const SpeciesConstants sp;
        const double angled = spin_wave_vector(at(3.0), sp).wavelength_lambda;
        const double collinear = spin_wave_vector(at(0.0), sp).wavelength_lambda;
        v.detail << " lambda(3 deg) = " << angled * 1e6 << " um, lambda(0) = " << collinear * 100 << " cm";
        v.require(within(angled, 14.5e-6, 15.5e-6), "lambda(3 deg) in [14.5, 15.5] um");
        v.require(within(collinear, 4.3e-2, 4.5e-2), "lambda(0) in [4.3, 4.5] cm");
    });

    report(2, "analytic lifetimes and collision rate", [](Verdict& v) {
        const EnsembleParams ens = cloud(100e-6, 1);
        const double angled = tau_d(100e-6, 3.0);
        const double collinear = tau_d(100e-6, 0.0);
        const double loss = loss_lifetime(ens.cloud_radius_r0, radial_speed(ens));
        const double gamma = collision_rate(ens);
        v.detail << " tau_D(3) = " << angled * 1e6 << " us, tau_D(0) = " << collinear * 1e3
                 << " ms, tau_L = " << loss * 1e6 << " us, Gamma = " << gamma << " Hz";
        v.require(within(angled, 23e-6, 27e-6), "tau_D(3 deg) in [23, 27] us");
        v.require(within(collinear, 68e-3, 76e-3), "tau_D(0) in [68, 76] ms");
        v.require(within(loss, 900e-6, 1000e-6), "tau_L in [900, 1000] us");
        v.require(within(gamma, 0.7, 1.3), "Gamma in [0.7, 1.3] Hz");
    });

    report(3, "Monte Carlo motional dephasing vs closed form", [&](Verdict& v) {
        const std::size_t n = 100000;
        const double tol = 5.0 / std::sqrt(double(n));
        double worst = 0.0;
        std::uint64_t seed = 1;
        for (double temp : {30e-6, 100e-6, 300e-6}) {
            const AtomSample s = sample_ensemble(cloud(temp, n), kDefaultPencilLength, seed++, all_cores);
            for (double deg : {0.2, 0.6, 1.5, 3.0}) {
                const SpinWaveVector sw = spin_wave_vector(at(deg), SpeciesConstants{});
                const double tau = tau_d(temp, deg);
                for (int i = 0; i < 20; ++i) {
                    const double t = 3.0 * tau * i / 19.0;
                    const double mc = motional_retrieval_efficiency(s, sw, t, all_cores);
                    worst = std::max(worst, std::abs(mc - std::exp(-(t / tau) * (t / tau))));
                }
            }
        }
        v.detail << " N = 1e5, 240 points, max |dev| = " << worst << " (tol " << tol << ")";
        v.require(worst <= tol, "max deviation <= 5/sqrt(N)");
    });

    report(4, "mode-overlap survival vs Lorentzian loss law", [&](Verdict& v) {
        const EnsembleParams p = cloud(100e-6, 1000000);
        const AtomSample s = sample_ensemble(p, kDefaultPencilLength, 4, all_cores);
        const double v_r = radial_speed(p);
        double worst = 0.0;
        for (int i = 0; i <= 60; ++i) {
            const double t = 50e-6 * i;
            const double model = gamma_loss(t, p.cloud_radius_r0, v_r);
            const double mc = mode_overlap_survival(s, p.cloud_radius_r0, t, {}, all_cores);
            worst = std::max(worst, std::abs(mc - model) / model);
        }
        v.detail << " N = 1e6, delays 0..3 ms, max relative dev = " << worst;
        v.require(worst <= 0.10, "relative deviation <= 10%");
    });

    report(5, "clock-state invariance and calibrated dephasing", [&](Verdict& v) {
        const AtomSample s = sample_ensemble(cloud(100e-6, 100000), kDefaultPencilLength, 5, all_cores);
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        double worst = 0.0;
        for (const StatePair& pair : kClockPairs) {
            for (int i = 0; i < 100; ++i) {
                ZeemanConfig z;
                z.pair = pair;
                z.bias_field = 1e-3 * u(rng);
                z.field_gradient = 0.1 * u(rng);
                z.gradient_axis = Eigen::Vector3d(u(rng), u(rng), u(rng));
                const double t = 1e-3 * (1.0 + u(rng));
                worst = std::max(worst, std::abs(magnetic_dephasing_factor(s, z, t, all_cores) - 1.0));
            }
        }
        ZeemanConfig sensitive;
        sensitive.pair = {{1, -1}, {2, -1}};
        const double t_e = one_over_e_time(
            [&](double t) { return magnetic_dephasing_factor(s, sensitive, t, all_cores); }, 15e-6);
        v.detail << " max |1 - f| over 300 clock cases = " << worst << ", non-clock 1/e time = " << t_e * 1e6
                 << " us";
        v.require(worst <= 1e-12, "clock pairs unaffected to 1e-12");
        v.require(within(t_e, 8.5e-6, 11.5e-6), "non-clock 1/e time in 10 us +- 15%");
    });

    report(6, "end-to-end round trip", [&](Verdict& v) {
        ScenarioConfig angled = config("angle_3deg.cfg");
        const double injected = tau_d(100e-6, 3.0);
        int covered = 0;
        double mean = 0.0;
        for (std::uint64_t rep = 1; rep <= 100; ++rep) {
            angled.seed = rep;
            const SimulationOutcome out = run_simulation(angled, RunOptions{});
            if (!out.fit)
                continue;
            mean += out.fit->lifetime / 100.0;
            if (std::abs(out.fit->lifetime - injected) <= 3.0 * out.fit->lifetime_sigma)
                ++covered;
        }
        v.detail << " 3 deg coverage " << covered << "/100 (mean " << mean * 1e6 << " us vs " << injected * 1e6
                 << ")";
        v.require(covered >= 95, ">= 95 of 100 within 3 sigma");

        std::vector<double> lifetimes;
        for (const char* name : {"angle_3deg.cfg", "angle_1p5deg.cfg", "angle_0p6deg.cfg", "angle_0p2deg.cfg"}) {
            const ScenarioConfig c = config(name);
            const SimulationOutcome out = run_simulation(c, RunOptions{});
            v.require(out.fit.has_value(), std::string(name) + " fit");
            if (!out.fit)
                return;
            lifetimes.push_back(out.fit->tau_d->value);
            v.detail << "; " << c.theta_deg << " deg " << model_name(out.model) << " tau_D = "
                     << out.fit->tau_d->value * 1e6 << " +- " << out.fit->tau_d->sigma * 1e6 << " us";
        }
        v.require(within(lifetimes[0], 22e-6, 28e-6), "3 deg tau_D in 25 +- 3 us");
        v.require(std::is_sorted(lifetimes.begin(), lifetimes.end()) &&
                      std::adjacent_find(lifetimes.begin(), lifetimes.end()) == lifetimes.end(),
                  "tau_D increases as theta decreases");

        const SimulationOutcome collinear = run_simulation(config("collinear.cfg"), RunOptions{});
        v.require(collinear.fit.has_value(), "collinear fit");
        if (collinear.fit) {
            v.detail << "; collinear tau_L = " << collinear.fit->lifetime * 1e3 << " ms";
            v.require(within(collinear.fit->lifetime, 0.85e-3, 1.15e-3), "collinear tau_L in [0.85, 1.15] ms");
        }
    });

    report(7, "count statistics match the rate equations", [](Verdict& v) {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        int within_5 = 0;
        double worst_z = 0.0;
        double worst_identity = 0.0;
        for (int i = 0; i < 50; ++i) {
            DetectionModel d;
            d.chi = 0.001 + 0.009 * u(rng);
            d.eta_s = 0.1 + 0.9 * u(rng);
            d.eta_as = 0.05 + 0.45 * u(rng);
            d.background_b = 0.05 + 0.45 * u(rng);
            const double gamma = u(rng);
            const CountRecord r = simulate_counts(gamma, d, 10'000'000, std::uint64_t(100 + i));
            const auto [g, sigma] = estimate_g(r);
            const double z = std::abs(g - cross_correlation(gamma, d)) / sigma;
            worst_z = std::max(worst_z, z);
            if (z <= 5.0)
                ++within_5;
            const DetectionRates rates = rates_from_model(gamma, d);
            const double identity = rates.p_s_as / (rates.p_s * rates.p_as);
            worst_identity = std::max(worst_identity, std::abs(identity / cross_correlation(gamma, d) - 1.0));
        }
        v.detail << " " << within_5 << "/50 within 5 sigma (max z = " << worst_z
                 << "), rate identity max rel err = " << worst_identity;
        v.require(within_5 == 50, "all scenarios within 5 sigma");
        v.require(worst_identity <= 1e-14, "g = p_SAS / (p_S p_AS) on expected rates");
    });

    report(8, "thermometry", [&](Verdict& v) {
        std::vector<AngleLifetime> oracle;
        for (double deg : {3.0, 1.5, 0.6}) {
            const double tau = tau_d(100e-6, deg);
            oracle.push_back({constants::deg_to_rad(deg), tau, 0.04 * tau});
        }
        const TemperatureEstimate t_oracle = infer_temperature(oracle, BeamGeometry{});

        const std::vector<double> angles{3.0, 1.5, 0.6};
        const SweepOutcome sweep = run_sweep(config("angle_3deg.cfg"), angles, RunOptions{});
        v.require(sweep.temperature.has_value(), "simulated sweep thermometry");

        const std::vector<AngleLifetime> reference{{constants::deg_to_rad(3.0), 25e-6, 1e-6},
                                                 {constants::deg_to_rad(1.5), 61e-6, 2e-6},
                                                 {constants::deg_to_rad(0.6), 144e-6, 9e-6},
                                                 {constants::deg_to_rad(0.2), 283e-6, 18e-6}};
        const TemperatureEstimate t_reference = infer_temperature(reference, BeamGeometry{});

        v.detail << " oracle T = " << t_oracle.temperature * 1e6 << " +- " << t_oracle.sigma * 1e6 << " uK";
        if (sweep.temperature)
            v.detail << ", simulated sweep T = " << sweep.temperature->temperature * 1e6 << " +- "
                     << sweep.temperature->sigma * 1e6 << " uK";
        v.detail << ", reference lifetimes T = " << t_reference.temperature * 1e6 << " uK";
        v.require(std::abs(t_oracle.temperature - 100e-6) <= 3.0 * t_oracle.sigma, "oracle within 3 sigma");
        if (sweep.temperature)
            v.require(std::abs(sweep.temperature->temperature - 100e-6) <= 3.0 * sweep.temperature->sigma,
                      "simulated sweep within 3 sigma");
        v.require(within(t_reference.temperature, 60e-6, 250e-6), "reference lifetimes in [60, 250] uK");
    });

    report(9, "determinism", [&](Verdict& v) {
        auto csv_of = [](const ScenarioConfig& c, unsigned threads) {
            RunOptions o;
            o.exec.threads = threads;
            std::ostringstream os;
            write_curve_csv(os, run_simulation(c, o).curve);
            return os.str();
        };
        bool identical = true;
        for (const char* name : {"angle_3deg.cfg", "collinear.cfg", "angle_3deg_mc.json"}) {
            const ScenarioConfig c = config(name);
            identical = identical && csv_of(c, 1) == csv_of(c, 1);
        }
        v.require(identical, "byte-identical CSV for identical config and seed");

        ScenarioConfig mc = config("angle_3deg_mc.json");
        Scenario s = mc.to_scenario();
        const std::vector<double> delays = mc.delays_seconds();
        const std::vector<double> base = retrieval_efficiencies(s, delays, mc.seed, Execution{1});
        double worst = 0.0;
        for (unsigned threads : {2u, 3u, 8u, 0u}) {
            const std::vector<double> other = retrieval_efficiencies(s, delays, mc.seed, Execution{threads});
            for (std::size_t i = 0; i < base.size(); ++i)
                worst = std::max(worst, std::abs(other[i] - base[i]) / std::abs(base[i]));
        }
        const bool csv_threads = csv_of(mc, 1) == csv_of(mc, 4);
        v.detail << " max relative change across thread counts = " << worst
                 << (csv_threads ? ", CSV identical across thread counts" : ", CSV differs across thread counts");
        v.require(worst <= 1e-12, "thread-count variation <= 1e-12 relative");
    });

    std::printf("%s: %d of 9 criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}

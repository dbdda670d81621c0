#include "swmem/photon_stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

namespace swmem {

namespace {

enum Stream : std::uint64_t { kCountStream = 0xc0c0 };

bool unit_interval(double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; }

std::int64_t draw_binomial(std::mt19937_64& engine, std::int64_t n, double p)
{
    if (n <= 0 || p <= 0.0)
        return 0;
    if (p >= 1.0)
        return n;
    std::binomial_distribution<std::int64_t> dist(n, p);
    return dist(engine);
}

double parse_field(const std::string& text, std::size_t line, const char* name)
{
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(text, &used);
    } catch (const std::exception&) {
        throw CsvError(std::string("cannot parse ") + name + " '" + text + "'", line);
    }
    while (used < text.size() && std::isspace(static_cast<unsigned char>(text[used])))
        ++used;
    if (used != text.size())
        throw CsvError(std::string("trailing characters in ") + name + " '" + text + "'", line);
    return value;
}

} // namespace

std::vector<CurvePoint> DecayCurve::valid_points() const
{
    std::vector<CurvePoint> out;
    std::ranges::copy_if(points, std::back_inserter(out), [](const CurvePoint& p) { return !p.missing; });
    return out;
}

CountRecord simulate_counts(double gamma, const DetectionModel& det, std::int64_t trials, std::mt19937_64& engine)
{
    if (trials < 1)
        throw DomainError("need at least one trial");
    det.validate();
    const double p_retrieve = gamma * det.eta_as;
    const double p_background = det.background_b * det.eta_as;
    // At most one anti-Stokes click per trial: retrieval and background are
    // exclusive, so their probabilities add.
    const double p_as_excited = p_retrieve + p_background;
    const double p_as_idle = p_background;
    if (!unit_interval(gamma) || !unit_interval(p_as_excited))
        throw ModelOutOfRangeError("per-trial probability outside [0, 1]");

    // Outcome classes: (S, AS), (S, no AS), (no S, AS), (no S, no AS).
    const double p_s_as = det.chi * det.eta_s * p_as_excited;
    const double p_s_only = det.chi * det.eta_s * (1.0 - p_as_excited);
    const double p_as_only = det.chi * (1.0 - det.eta_s) * p_as_excited + (1.0 - det.chi) * p_as_idle;

    CountRecord rec;
    rec.trials = trials;
    std::int64_t remaining = trials;
    double mass = 1.0;
    const std::int64_t n11 = draw_binomial(engine, remaining, p_s_as / mass);
    remaining -= n11;
    mass -= p_s_as;
    const std::int64_t n10 = mass > 0.0 ? draw_binomial(engine, remaining, p_s_only / mass) : 0;
    remaining -= n10;
    mass -= p_s_only;
    const std::int64_t n01 = mass > 0.0 ? draw_binomial(engine, remaining, std::min(1.0, p_as_only / mass)) : 0;

    rec.n_coinc = n11;
    rec.n_s = n11 + n10;
    rec.n_as = n11 + n01;
    return rec;
}

CountRecord simulate_counts(double gamma, const DetectionModel& det, std::int64_t trials, std::uint64_t seed)
{
    auto engine = derived_engine(seed, kCountStream, 0);
    return simulate_counts(gamma, det, trials, engine);
}

CorrelationEstimate estimate_g(const CountRecord& record)
{
    if (record.n_s < 1 || record.n_as < 1 || record.n_coinc < 1)
        throw InsufficientStatisticsError("empty channel: g is undefined", record);
    const double trials = static_cast<double>(record.trials);
    const double ns = static_cast<double>(record.n_s);
    const double nas = static_cast<double>(record.n_as);
    const double nc = static_cast<double>(record.n_coinc);
    const double g = (nc * trials) / (ns * nas);
    return {g, g * std::sqrt(1.0 / nc + 1.0 / ns + 1.0 / nas)};
}

double analytic_efficiency(const Scenario& scenario, double delay)
{
    if (!(delay >= 0.0))
        throw DomainError("delay must be non-negative");
    const EnsembleParams& ens = scenario.ensemble;
    const SpinWaveVector sw = spin_wave_vector(scenario.geometry, ens.species);
    const double v_s = one_d_speed(ens);
    const double v_r = radial_speed(ens);

    double gamma = gamma_motional(delay, motional_lifetime(sw, v_s)) * gamma_loss(delay, ens.cloud_radius_r0, v_r);
    const double kappa = differential_zeeman_coefficient(scenario.zeeman);
    if (kappa != 0.0) {
        // Only the gradient component along the pencil dephases a uniform pencil.
        const double g_axial = scenario.zeeman.field_gradient * scenario.zeeman.gradient_axis.normalized().z();
        gamma *= gamma_gradient(delay, kappa * g_axial, scenario.pencil_length, v_s);
    }
    return gamma;
}

std::vector<double> retrieval_efficiencies(const Scenario& scenario, std::span<const double> delays,
                                           std::uint64_t seed, const Execution& exec)
{
    std::vector<double> gammas;
    gammas.reserve(delays.size());
    if (scenario.engine == Engine::Analytic) {
        for (double t : delays)
            gammas.push_back(analytic_efficiency(scenario, t));
        return gammas;
    }

    const AtomSample sample = sample_ensemble(scenario.ensemble, scenario.pencil_length, seed, exec);
    const SpinWaveVector sw = spin_wave_vector(scenario.geometry, scenario.ensemble.species);
    CombinedOptions options;
    options.waist_r0 = scenario.ensemble.cloud_radius_r0;
    options.survival.gravity = scenario.gravity;
    for (double t : delays)
        gammas.push_back(combined_efficiency(sample, sw, scenario.zeeman, options, t, exec));
    return gammas;
}

DecayCurve synthesize_curve(const Scenario& scenario, std::span<const double> delays, std::int64_t trials_per_point,
                            std::uint64_t seed, const Execution& exec)
{
    if (delays.empty())
        throw DomainError("delay list is empty");
    for (std::size_t i = 0; i < delays.size(); ++i) {
        if (!(delays[i] >= 0.0) || (i > 0 && !(delays[i] > delays[i - 1])))
            throw DomainError("delays must be non-negative and strictly increasing");
    }
    if (trials_per_point < 1)
        throw DomainError("need at least one trial per point");

    const std::vector<double> gammas = retrieval_efficiencies(scenario, delays, seed, exec);

    DecayCurve curve;
    curve.points.resize(delays.size());
    for_each_chunk(delays.size(), exec, [&](std::size_t i) {
        auto engine = derived_engine(seed, kCountStream, i);
        CountRecord rec = simulate_counts(gammas[i], scenario.detection, trials_per_point, engine);
        rec.delay = delays[i];
        CurvePoint& pt = curve.points[i];
        pt.delay = delays[i];
        try {
            const auto [g, sigma] = estimate_g(rec);
            pt.g = g;
            pt.sigma_g = sigma;
        } catch (const InsufficientStatisticsError&) {
            pt.missing = true;
            pt.g = std::numeric_limits<double>::quiet_NaN();
            pt.sigma_g = std::numeric_limits<double>::quiet_NaN();
        }
    });
    return curve;
}

std::string format_sig6(double value)
{
    if (!std::isfinite(value))
        return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", value);
    return buf;
}

void write_curve_csv(std::ostream& os, const DecayCurve& curve)
{
    os << "delay_us,g,sigma_g\n";
    for (const CurvePoint& p : curve.points) {
        os << format_sig6(p.delay / constants::kMicro) << ',' << (p.missing ? "nan" : format_sig6(p.g)) << ','
           << (p.missing ? "nan" : format_sig6(p.sigma_g)) << '\n';
    }
}

DecayCurve read_curve_csv(std::istream& is)
{
    DecayCurve curve;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos || line.front() == '#')
            continue;
        if (!header_seen) {
            header_seen = true;
            if (line.find("delay_us") != std::string::npos)
                continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ','))
            fields.push_back(field);
        if (fields.size() != 3)
            throw CsvError("expected 3 columns (delay_us,g,sigma_g), got " + std::to_string(fields.size()), line_no);

        CurvePoint p;
        p.delay = parse_field(fields[0], line_no, "delay_us") * constants::kMicro;
        p.g = parse_field(fields[1], line_no, "g");
        p.sigma_g = parse_field(fields[2], line_no, "sigma_g");
        if (!std::isfinite(p.delay) || p.delay < 0.0)
            throw CsvError("delay must be finite and non-negative", line_no);
        if (!curve.points.empty() && !(p.delay > curve.points.back().delay))
            throw CsvError("delays must be strictly increasing", line_no);
        p.missing = !std::isfinite(p.g) || !std::isfinite(p.sigma_g);
        if (!p.missing && !(p.sigma_g > 0.0))
            throw CsvError("sigma_g must be positive", line_no);
        curve.points.push_back(p);
    }
    if (curve.points.empty())
        throw CsvError("no data rows", line_no);
    return curve;
}

} // namespace swmem

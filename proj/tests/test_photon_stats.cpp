#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "swmem/photon_stats.hpp"

using namespace swmem;

namespace {

DetectionModel ideal(double chi)
{
    DetectionModel d;
    d.chi = chi;
    d.eta_s = 1.0;
    d.eta_as = 1.0;
    d.background_b = 0.0;
    return d;
}

double binomial_sigma(double p, double n) { return std::sqrt(p * (1.0 - p) / n); }

Scenario angled()
{
    Scenario s;
    s.geometry.detection_angle_theta = constants::deg_to_rad(3.0);
    return s;
}

} // namespace

TEST_CASE("count records respect their invariants")
{
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        DetectionModel d;
        d.chi = 0.05 * u(rng);
        d.eta_s = u(rng);
        d.eta_as = u(rng);
        d.background_b = u(rng);
        const double gamma = u(rng);
        const auto trials = static_cast<std::int64_t>(1 + 100000 * u(rng));
        if ((gamma + d.background_b) * d.eta_as > 1.0) {
            CHECK_THROWS_AS(simulate_counts(gamma, d, trials, rng), ModelOutOfRangeError);
            continue;
        }
        const CountRecord r = simulate_counts(gamma, d, trials, rng);
        CHECK(r.trials == trials);
        CHECK(r.n_coinc >= 0);
        CHECK(r.n_coinc <= std::min(r.n_s, r.n_as));
        CHECK(std::max(r.n_s, r.n_as) <= r.trials);
    }
}

TEST_CASE("no excitation, no Stokes clicks")
{
    DetectionModel d;
    d.chi = 0.0;
    const CountRecord r = simulate_counts(1.0, d, 100000, std::uint64_t{5});
    CHECK(r.n_s == 0);
    CHECK(r.n_coinc == 0);
    CHECK(r.n_as > 0);
    CHECK_THROWS_AS(estimate_g(r), InsufficientStatisticsError);
}

TEST_CASE("ideal detection at full retrieval")
{
    const double trials = 1e6;
    const CountRecord r = simulate_counts(1.0, ideal(0.01), 1'000'000, std::uint64_t{7});
    const double frac = r.n_coinc / trials;
    CHECK(std::abs(frac - 0.01) < 5.0 * binomial_sigma(0.01, trials));
    const auto [g, sigma] = estimate_g(r);
    CHECK(std::abs(g - (1.0 + 1.0 / 0.01)) < 5.0 * sigma);
}

TEST_CASE("empirical Stokes probability")
{
    DetectionModel d;
    const double trials = 1e6;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const CountRecord r = simulate_counts(0.4, d, 1'000'000, seed);
        const double p = d.chi * d.eta_s;
        CHECK(std::abs(r.n_s / trials - p) < 5.0 * binomial_sigma(p, trials));
    }
}

TEST_CASE("simulated g follows the rate model")
{
    DetectionModel d;
    for (double gamma : {0.0, 0.05, 0.3, 1.0}) {
        const CountRecord r = simulate_counts(gamma, d, 20'000'000, std::uint64_t{11});
        const auto [g, sigma] = estimate_g(r);
        const double expected = (gamma + d.background_b) / (d.chi * gamma + d.background_b);
        CHECK(std::abs(g - expected) < 5.0 * sigma);
        CHECK(std::abs(g - cross_correlation(gamma, d)) < 5.0 * sigma);
    }
}

TEST_CASE("simulate_counts preconditions")
{
    DetectionModel d;
    CHECK_THROWS_AS(simulate_counts(0.5, d, 0, std::uint64_t{1}), DomainError);
    CHECK_THROWS_AS(simulate_counts(1.5, d, 10, std::uint64_t{1}), ModelOutOfRangeError);
    CHECK_THROWS_AS(simulate_counts(-0.1, d, 10, std::uint64_t{1}), ModelOutOfRangeError);
    d.eta_as = 1.0;
    d.background_b = 0.6;
    CHECK_THROWS_AS(simulate_counts(0.5, d, 10, std::uint64_t{1}), ModelOutOfRangeError);
    CHECK_NOTHROW(simulate_counts(0.4, d, 10, std::uint64_t{1}));
    CHECK(simulate_counts(0.5, DetectionModel{}, 1000, std::uint64_t{9}) ==
          simulate_counts(0.5, DetectionModel{}, 1000, std::uint64_t{9}));
}

TEST_CASE("estimate_g formula")
{
    CountRecord r{1'000'000, 10'000, 10'000, 100, 0.0};
    const auto [g, sigma] = estimate_g(r);
    CHECK(g == doctest::Approx(1.0));
    CHECK(sigma == doctest::Approx(std::sqrt(0.01 + 2e-4)).epsilon(1e-12));

    r.trials = 10'000'000;
    const CorrelationEstimate ten = estimate_g(r);
    CHECK(ten.g == doctest::Approx(10.0));
    CHECK(ten.sigma_g == doctest::Approx(1.00995).epsilon(1e-5));

    // Independence: n_coinc = n_s n_as / trials.
    const CountRecord indep{1'000'000, 2000, 5000, 10, 0.0};
    CHECK(estimate_g(indep).g == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("estimate_g is invariant under common scaling of the counts")
{
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::int64_t> count(1, 1000);
    for (int i = 0; i < 100; ++i) {
        const std::int64_t c = count(rng);
        const CountRecord r{1'000'000, c + count(rng), c + count(rng), c, 0.0};
        const std::int64_t k = 1 + i % 7;
        const CountRecord scaled{k * r.trials, k * r.n_s, k * r.n_as, k * r.n_coinc, 0.0};
        CHECK(estimate_g(scaled).g == doctest::Approx(estimate_g(r).g).epsilon(1e-12));
        CHECK(estimate_g(scaled).sigma_g == doctest::Approx(estimate_g(r).sigma_g / std::sqrt(double(k))).epsilon(1e-12));
    }
}

TEST_CASE("empty channels carry the record")
{
    const CountRecord r{1000, 10, 0, 0, 3e-6};
    try {
        (void)estimate_g(r);
        FAIL("expected InsufficientStatisticsError");
    } catch (const InsufficientStatisticsError& e) {
        CHECK(e.record() == r);
    }
}

TEST_CASE("analytic efficiency at 3 degrees")
{
    Scenario s = angled();
    CHECK(analytic_efficiency(s, 0.0) == 1.0);
    CHECK(analytic_efficiency(s, 24.70915e-6) == doctest::Approx(std::exp(-1.0) * gamma_loss(24.70915e-6, 100e-6, 0.1383246)).epsilon(1e-5));
    for (double t = 0.0; t < 200e-6; t += 5e-6) {
        CHECK(analytic_efficiency(s, t) >= analytic_efficiency(s, t + 5e-6));
    }
    CHECK_THROWS_AS(analytic_efficiency(s, -1.0), DomainError);

    s.zeeman.pair = {{1, -1}, {2, -1}};
    s.geometry.detection_angle_theta = 0.0;
    const double t_e = one_over_e_time([&](double t) { return analytic_efficiency(s, t); }, 20e-6);
    CHECK(t_e == doctest::Approx(10e-6).epsilon(0.01));
}

TEST_CASE("Monte Carlo and analytic engines agree")
{
    Scenario s = angled();
    s.ensemble.atom_count = 200000;
    const std::vector<double> delays{0.0, 10e-6, 20e-6, 30e-6, 40e-6};
    s.engine = Engine::MonteCarlo;
    const auto mc = retrieval_efficiencies(s, delays, 2);
    s.engine = Engine::Analytic;
    const auto an = retrieval_efficiencies(s, delays, 2);
    REQUIRE(mc.size() == an.size());
    for (std::size_t i = 0; i < mc.size(); ++i)
        CHECK(std::abs(mc[i] - an[i]) < 5.0 / std::sqrt(2e5));
}

TEST_CASE("synthesized curves")
{
    Scenario s = angled();
    const std::vector<double> delays{0.0, 10e-6, 20e-6, 40e-6, 60e-6};
    const DecayCurve a = synthesize_curve(s, delays, 1'000'000, 4);
    const DecayCurve b = synthesize_curve(s, delays, 1'000'000, 4, Execution{3});
    REQUIRE(a.points.size() == delays.size());
    for (std::size_t i = 0; i < delays.size(); ++i) {
        CHECK(a.points[i].delay == delays[i]);
        CHECK(a.points[i].g == b.points[i].g);
        CHECK(a.points[i].sigma_g == b.points[i].sigma_g);
        CHECK_FALSE(a.points[i].missing);
        CHECK(std::abs(a.points[i].g - cross_correlation(analytic_efficiency(s, delays[i]), s.detection)) <
              5.0 * a.points[i].sigma_g);
    }
    CHECK(a.points.front().g > a.points.back().g);

    const std::vector<double> unsorted{0.0, 20e-6, 10e-6};
    CHECK_THROWS_AS(synthesize_curve(s, unsorted, 1000, 1), DomainError);
    CHECK_THROWS_AS(synthesize_curve(s, std::vector<double>{}, 1000, 1), DomainError);
    CHECK_THROWS_AS(synthesize_curve(s, delays, 0, 1), DomainError);
}

TEST_CASE("tiny trial counts give missing points")
{
    Scenario s;
    const std::vector<double> delays{0.0, 1e-3};
    const DecayCurve c = synthesize_curve(s, delays, 10, 1);
    for (const CurvePoint& p : c.points) {
        CHECK(p.missing);
        CHECK(std::isnan(p.g));
    }
    CHECK(c.valid_points().empty());
}

TEST_CASE("curve CSV round trip")
{
    DecayCurve c;
    c.points = {{0.0, 80.123456789, 2.5, false}, {1.5e-6, 40.0, 1.25, false}, {3e-6, NAN, NAN, true}};
    std::stringstream ss;
    write_curve_csv(ss, c);
    CHECK(ss.str() == "delay_us,g,sigma_g\n0,80.1235,2.5\n1.5,40,1.25\n3,nan,nan\n");

    const DecayCurve back = read_curve_csv(ss);
    REQUIRE(back.points.size() == 3);
    CHECK(back.points[1].delay == doctest::Approx(1.5e-6));
    CHECK(back.points[0].g == doctest::Approx(80.1235));
    CHECK(back.points[2].missing);
    CHECK(back.valid_points().size() == 2);
}

TEST_CASE("curve CSV errors name the line")
{
    auto line_of = [](const std::string& text) -> std::size_t {
        std::istringstream in(text);
        try {
            (void)read_curve_csv(in);
        } catch (const CsvError& e) {
            return e.line();
        }
        return 0;
    };
    CHECK(line_of("delay_us,g,sigma_g\n0,2,0.1\n1,2\n") == 3);
    CHECK(line_of("delay_us,g,sigma_g\n0,2,0.1\n0,2,0.1\n") == 3);
    CHECK(line_of("delay_us,g,sigma_g\n0,abc,0.1\n") == 2);
    CHECK(line_of("delay_us,g,sigma_g\n-1,2,0.1\n") == 2);
    CHECK(line_of("delay_us,g,sigma_g\n0,2,0\n") == 2);
    CHECK(line_of("delay_us,g,sigma_g\n") != 0);
    CHECK(line_of("# comment\n0,2,0.1\n\n5,1.5,0.1\r\n") == 0);
}

TEST_CASE("format_sig6")
{
    CHECK(format_sig6(1.0) == "1");
    CHECK(format_sig6(24.709153) == "24.7092");
    CHECK(format_sig6(1.23456789e-7) == "1.23457e-07");
    CHECK(format_sig6(INFINITY) == "nan");
}

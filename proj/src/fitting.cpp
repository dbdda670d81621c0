#include "swmem/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <tuple>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace swmem {

namespace {

constexpr double kInvE = 0.36787944117144233; // exp(-1)
const double kEMinusOne = std::numbers::e - 1.0;

// The optimizer works in dimensionless time u = t / time_scale, so tau and A
// are O(1) whatever the delay units.
struct Problem {
    ModelKind kind;
    Eigen::VectorXd u;
    Eigen::VectorXd g;
    Eigen::VectorXd sigma;
    std::optional<double> fixed_a_scaled;

    // Free parameters: [C, tau] / [C, A] / [C, tau, (A)].
    Eigen::Index n_free() const
    {
        switch (kind) {
        case ModelKind::GaussianMotional:
        case ModelKind::LorentzianLoss:
            return 2;
        case ModelKind::Combined:
            return fixed_a_scaled ? 2 : 3;
        }
        return 0;
    }

    // (C, tau, A) from the free vector; unused entries are 0 / +inf.
    std::tuple<double, double, double> unpack(const Eigen::VectorXd& p) const
    {
        switch (kind) {
        case ModelKind::GaussianMotional:
            return {p(0), p(1), 0.0};
        case ModelKind::LorentzianLoss:
            return {p(0), std::numeric_limits<double>::infinity(), p(1)};
        case ModelKind::Combined:
            return {p(0), p(1), fixed_a_scaled ? *fixed_a_scaled : p(2)};
        }
        return {};
    }

    /// Weighted residuals (g - f) / sigma and Jacobian of f / sigma.
    bool evaluate(const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* jac) const
    {
        const auto [c, tau, a] = unpack(p);
        const Eigen::Index n = u.size();
        r.resize(n);
        if (jac)
            jac->resize(n, n_free());
        for (Eigen::Index i = 0; i < n; ++i) {
            const double u2 = u(i) * u(i);
            const double gauss = std::isinf(tau) ? 1.0 : std::exp(-u2 / (tau * tau));
            const double lorentz = 1.0 / (1.0 + a * u2);
            const double shape = gauss * lorentz;
            const double f = 1.0 + c * shape;
            if (!std::isfinite(f) || !std::isfinite(shape) || 1.0 + a * u2 <= 0.0)
                return false;
            r(i) = (g(i) - f) / sigma(i);
            if (!jac)
                continue;
            const double w = 1.0 / sigma(i);
            (*jac)(i, 0) = shape * w;
            if (kind != ModelKind::LorentzianLoss)
                (*jac)(i, 1) = c * shape * 2.0 * u2 / (tau * tau * tau) * w;
            if (kind == ModelKind::LorentzianLoss)
                (*jac)(i, 1) = -c * u2 * gauss * lorentz * lorentz * w;
            if (kind == ModelKind::Combined && !fixed_a_scaled)
                (*jac)(i, 2) = -c * u2 * gauss * lorentz * lorentz * w;
        }
        return true;
    }
};

// Crossing of g - 1 through (g_max - 1) / e, interpolated between samples.
double initial_crossing(const Eigen::VectorXd& u, const Eigen::VectorXd& g, double c0)
{
    const double level = 1.0 + c0 * kInvE;
    for (Eigen::Index i = 1; i < u.size(); ++i) {
        if (g(i) < level) {
            const double dg = g(i - 1) - g(i);
            const double frac = dg > 0.0 ? std::clamp((g(i - 1) - level) / dg, 0.0, 1.0) : 0.5;
            return std::max(u(i - 1) + frac * (u(i) - u(i - 1)), 1e-3);
        }
    }
    return 2.0 * u(u.size() - 1);
}

// tau such that exp(-t_e^2/tau^2) / (1 + A t_e^2) = 1/e.
double tau_for_crossing(double t_e, double a)
{
    const double rhs = 1.0 - std::log1p(a * t_e * t_e);
    return rhs > 0.05 ? t_e / std::sqrt(rhs) : 10.0 * t_e;
}

Eigen::VectorXd initial_guess(const Problem& pb)
{
    double c0 = pb.g.maxCoeff() - 1.0;
    if (!(c0 > 0.0))
        c0 = 1e-3;
    const double t_e = initial_crossing(pb.u, pb.g, c0);
    Eigen::VectorXd p(pb.n_free());
    p(0) = c0;
    switch (pb.kind) {
    case ModelKind::GaussianMotional:
        p(1) = t_e;
        break;
    case ModelKind::LorentzianLoss:
        p(1) = kEMinusOne / (t_e * t_e);
        break;
    case ModelKind::Combined:
        if (pb.fixed_a_scaled) {
            p(1) = tau_for_crossing(t_e, *pb.fixed_a_scaled);
        } else {
            const double a0 = kEMinusOne / (4.0 * t_e * t_e);
            p(1) = tau_for_crossing(t_e, a0);
            p(2) = a0;
        }
        break;
    }
    return p;
}

struct LmOutcome {
    Eigen::VectorXd p;
    double cost = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Levenberg-Marquardt with Marquardt's diagonal scaling.
LmOutcome levenberg_marquardt(const Problem& pb, Eigen::VectorXd p, int max_iterations, double step_tol)
{
    Eigen::VectorXd r;
    Eigen::MatrixXd jac;
    if (!pb.evaluate(p, r, &jac))
        throw DegenerateFitError("model is not finite at the initial guess");
    double cost = r.squaredNorm();
    double lambda = 1e-3;

    LmOutcome out;
    for (int it = 1; it <= max_iterations; ++it) {
        out.iterations = it;
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd jtr = jac.transpose() * r;
        Eigen::VectorXd diag = jtj.diagonal();
        for (Eigen::Index k = 0; k < diag.size(); ++k)
            diag(k) = std::max(diag(k), 1e-300);

        bool accepted = false;
        bool small_step = false;
        while (lambda < 1e20) {
            Eigen::MatrixXd lhs = jtj;
            lhs.diagonal() += lambda * diag;
            const Eigen::VectorXd step = lhs.ldlt().solve(jtr);
            const Eigen::VectorXd trial = p + step;
            small_step = (step.array().abs() <= step_tol * (trial.array().abs() + 1e-12)).all();

            Eigen::VectorXd r_trial;
            if (step.allFinite() && pb.evaluate(trial, r_trial, nullptr)) {
                const double trial_cost = r_trial.squaredNorm();
                if (trial_cost <= cost) {
                    p = trial;
                    cost = trial_cost;
                    lambda = std::max(lambda * 0.3, 1e-12);
                    accepted = true;
                    break;
                }
            }
            if (small_step)
                break;
            lambda *= 10.0;
        }

        if (accepted)
            pb.evaluate(p, r, &jac);
        if (small_step) {
            out.converged = true;
            break;
        }
        if (!accepted)
            break;
    }
    out.p = p;
    out.cost = cost;
    return out;
}

} // namespace

DecayModel FitResult::decay_model() const
{
    switch (model) {
    case ModelKind::GaussianMotional:
        return GaussianMotional{tau_d->value};
    case ModelKind::LorentzianLoss:
        return LorentzianLoss{a->value};
    case ModelKind::Combined:
        return Combined{tau_d->value, a->value};
    }
    throw DomainError("unknown model");
}

FitResult fit_decay(const DecayCurve& curve, ModelKind kind, const FitOptions& options)
{
    std::vector<CurvePoint> pts = curve.valid_points();
    if (options.exclude_first_point && !pts.empty())
        pts.erase(pts.begin());
    if (options.fixed_a && kind != ModelKind::Combined)
        throw DomainError("A can only be fixed in the combined model");
    if (options.fixed_a && !(*options.fixed_a >= 0.0))
        throw DomainError("fixed A must be non-negative");

    const auto n = static_cast<Eigen::Index>(pts.size());
    double t_max = 0.0;
    for (const CurvePoint& p : pts) {
        if (!(p.sigma_g > 0.0))
            throw DomainError("fit weights need sigma_g > 0");
        t_max = std::max(t_max, p.delay);
    }
    if (!(t_max > 0.0))
        throw DegenerateFitError("all delays are zero");

    Problem pb;
    pb.kind = kind;
    pb.u.resize(n);
    pb.g.resize(n);
    pb.sigma.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        pb.u(i) = pts[static_cast<std::size_t>(i)].delay / t_max;
        pb.g(i) = pts[static_cast<std::size_t>(i)].g;
        pb.sigma(i) = pts[static_cast<std::size_t>(i)].sigma_g;
    }
    if (options.fixed_a)
        pb.fixed_a_scaled = *options.fixed_a * t_max * t_max;
    const Eigen::Index k = pb.n_free();
    if (n < k + 1)
        throw DomainError("need at least " + std::to_string(k + 1) + " points for this model");

    const LmOutcome lm = levenberg_marquardt(pb, initial_guess(pb), options.max_iterations, options.step_tolerance);

    Eigen::VectorXd r;
    Eigen::MatrixXd jac;
    pb.evaluate(lm.p, r, &jac);
    const Eigen::MatrixXd curvature = jac.transpose() * jac;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(curvature);
    const double ev_max = eig.eigenvalues().maxCoeff();
    const double ev_min = eig.eigenvalues().minCoeff();
    const bool singular = !(ev_max > 0.0) || !(ev_min > 1e-13 * ev_max);
    const Eigen::MatrixXd cov = singular ? Eigen::MatrixXd(Eigen::MatrixXd::Constant(k, k, std::nan("")))
                                         : Eigen::MatrixXd(curvature.inverse());

    FitResult res;
    res.model = kind;
    res.points_used = pts.size();
    res.iterations = lm.iterations;
    res.converged = lm.converged;
    res.chi2_reduced = lm.cost / static_cast<double>(n - k);

    const double t2 = t_max * t_max;
    res.c = {lm.p(0), std::sqrt(cov(0, 0)), false};
    switch (kind) {
    case ModelKind::GaussianMotional:
        res.tau_d = ParamEstimate{std::abs(lm.p(1)) * t_max, std::sqrt(cov(1, 1)) * t_max, false};
        res.tau_a_covariance(0, 0) = cov(1, 1) * t2;
        break;
    case ModelKind::LorentzianLoss:
        res.a = ParamEstimate{lm.p(1) / t2, std::sqrt(cov(1, 1)) / t2, false};
        res.tau_a_covariance(1, 1) = cov(1, 1) / (t2 * t2);
        break;
    case ModelKind::Combined:
        res.tau_d = ParamEstimate{std::abs(lm.p(1)) * t_max, std::sqrt(cov(1, 1)) * t_max, false};
        res.tau_a_covariance(0, 0) = cov(1, 1) * t2;
        if (options.fixed_a) {
            res.a = ParamEstimate{*options.fixed_a, 0.0, true};
        } else {
            res.a = ParamEstimate{lm.p(2) / t2, std::sqrt(cov(2, 2)) / t2, false};
            res.tau_a_covariance(1, 1) = cov(2, 2) / (t2 * t2);
            // tau flips sign freely (the model sees tau^2); so does its covariance.
            const double sign = lm.p(1) < 0.0 ? -1.0 : 1.0;
            res.tau_a_covariance(0, 1) = res.tau_a_covariance(1, 0) = sign * cov(1, 2) * t_max / t2;
        }
        break;
    }

    if (!lm.converged) {
        try {
            std::tie(res.lifetime, res.lifetime_sigma) = lifetime_from_fit(res);
        } catch (const std::exception&) {
            res.lifetime = res.lifetime_sigma = std::nan("");
        }
        throw FitFailure("fit did not converge in " + std::to_string(options.max_iterations) + " iterations", res);
    }
    if (singular)
        throw DegenerateFitError("singular curvature at the optimum: parameters are not identifiable");
    if (res.a && res.a->value < 0.0)
        throw FitFailure("fitted loss rate A is negative", res);

    std::tie(res.lifetime, res.lifetime_sigma) = lifetime_from_fit(res);
    return res;
}

std::pair<double, double> lifetime_from_fit(const FitResult& result)
{
    switch (result.model) {
    case ModelKind::GaussianMotional:
        if (!result.tau_d || !(result.tau_d->value > 0.0))
            throw DomainError("Gaussian fit without a positive tau_D");
        return {result.tau_d->value, result.tau_d->sigma};
    case ModelKind::LorentzianLoss: {
        if (!result.a || !(result.a->value > 0.0))
            throw DomainError("loss lifetime needs A > 0");
        const double a = result.a->value;
        const double life = std::sqrt(kEMinusOne / a);
        return {life, 0.5 * life * result.a->sigma / a};
    }
    case ModelKind::Combined: {
        if (!result.tau_d || !result.a || !(result.tau_d->value > 0.0) || !(result.a->value >= 0.0))
            throw DomainError("combined lifetime needs tau_D > 0 and A >= 0");
        const double tau = result.tau_d->value;
        const double a = result.a->value;
        if (a == 0.0)
            return {tau, result.tau_d->sigma};
        if (std::isinf(tau)) {
            const double life = std::sqrt(kEMinusOne / a);
            return {life, 0.5 * life * result.a->sigma / a};
        }
        // 1 - t^2/tau^2 - ln(1 + A t^2) = 0 has one root below min(tau, tau_L).
        auto excess = [&](double t) { return 1.0 - (t * t) / (tau * tau) - std::log1p(a * t * t); };
        double lo = 0.0;
        double hi = std::min(tau, std::sqrt(kEMinusOne / a));
        if (!(excess(hi) <= 0.0))
            throw DomainError("combined lifetime root not bracketed");
        for (int i = 0; i < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi; ++i) {
            const double mid = 0.5 * (lo + hi);
            (excess(mid) > 0.0 ? lo : hi) = mid;
        }
        const double t = 0.5 * (lo + hi);

        // Implicit-function propagation of (tau, A) errors.
        const double f_t = -2.0 * t / (tau * tau) - 2.0 * a * t / (1.0 + a * t * t);
        Eigen::Vector2d grad;
        grad(0) = -(2.0 * t * t / (tau * tau * tau)) / f_t;
        grad(1) = -(-t * t / (1.0 + a * t * t)) / f_t;
        const double var = grad.dot(result.tau_a_covariance * grad);
        return {t, std::sqrt(std::max(var, 0.0))};
    }
    }
    throw DomainError("unknown model");
}

TemperatureEstimate infer_temperature(std::span<const AngleLifetime> points, const BeamGeometry& geometry,
                                      const SpeciesConstants& species)
{
    // Sorted copy: the sums, and so the result, ignore input order.
    std::vector<AngleLifetime> pts;
    for (const AngleLifetime& p : points) {
        if (!(p.theta >= 0.0) || !(p.tau_d > 0.0) || !(p.sigma > 0.0))
            throw DomainError("lifetime points need theta >= 0, tau_D > 0, sigma > 0");
        if (p.theta > 0.0)
            pts.push_back(p);
    }
    if (pts.empty())
        throw DomainError("temperature inference needs at least one point with theta > 0");
    std::ranges::sort(pts, {}, [](const AngleLifetime& p) { return std::tie(p.theta, p.tau_d, p.sigma); });

    // tau_i = x_i / v_s with x_i = 1 / dk_i: linear in 1 / v_s through the origin.
    double sxx = 0.0;
    double sxy = 0.0;
    for (const AngleLifetime& p : pts) {
        BeamGeometry geo = geometry;
        geo.detection_angle_theta = p.theta;
        const double x = 1.0 / spin_wave_vector(geo, species).magnitude_delta_k;
        const double w = 1.0 / (p.sigma * p.sigma);
        sxx += w * x * x;
        sxy += w * x * p.tau_d;
    }
    const double inv_v = sxy / sxx;
    const double inv_v_sigma = 1.0 / std::sqrt(sxx);

    TemperatureEstimate est;
    est.points_used = pts.size();
    est.v_s = 1.0 / inv_v;
    est.v_s_sigma = est.v_s * inv_v_sigma / inv_v;
    est.temperature = temperature_from_speed(est.v_s, species);
    est.sigma = 2.0 * est.temperature * inv_v_sigma / inv_v;
    return est;
}

std::string model_name(ModelKind kind)
{
    switch (kind) {
    case ModelKind::GaussianMotional:
        return "gaussian";
    case ModelKind::LorentzianLoss:
        return "lorentzian";
    case ModelKind::Combined:
        return "combined";
    }
    return "unknown";
}

std::optional<ModelKind> parse_model_name(const std::string& name)
{
    for (ModelKind k : {ModelKind::GaussianMotional, ModelKind::LorentzianLoss, ModelKind::Combined}) {
        if (model_name(k) == name)
            return k;
    }
    return std::nullopt;
}

namespace {

std::string opt_field(const std::optional<ParamEstimate>& p, double scale, bool sigma)
{
    if (!p)
        return "";
    return format_sig6((sigma ? p->sigma : p->value) * scale);
}

} // namespace

void write_fit_report(std::ostream& os, const FitResult& r)
{
    const double us = 1.0 / constants::kMicro;
    os << "model=" << model_name(r.model) << '\n';
    os << "C=" << format_sig6(r.c.value) << '\n';
    os << "C_sigma=" << format_sig6(r.c.sigma) << '\n';
    if (r.tau_d) {
        os << "tau_D_us=" << opt_field(r.tau_d, us, false) << '\n';
        os << "tau_D_sigma_us=" << opt_field(r.tau_d, us, true) << '\n';
    }
    if (r.a) {
        os << "A_per_s2=" << opt_field(r.a, 1.0, false) << '\n';
        os << "A_sigma_per_s2=" << opt_field(r.a, 1.0, true) << '\n';
        os << "A_fixed=" << (r.a->fixed ? "true" : "false") << '\n';
    }
    os << "lifetime_us=" << format_sig6(r.lifetime * us) << '\n';
    os << "lifetime_sigma_us=" << format_sig6(r.lifetime_sigma * us) << '\n';
    os << "chi2_reduced=" << format_sig6(r.chi2_reduced) << '\n';
    os << "points=" << r.points_used << '\n';
    os << "iterations=" << r.iterations << '\n';
    os << "converged=" << (r.converged ? "true" : "false") << '\n';
}

std::string fit_csv_header()
{
    return "label,model,C,C_sigma,tau_D_us,tau_D_sigma_us,A_per_s2,A_sigma_per_s2,lifetime_us,lifetime_sigma_us,"
           "chi2_reduced";
}

std::string fit_csv_row(const std::string& label, const FitResult& r)
{
    const double us = 1.0 / constants::kMicro;
    std::ostringstream os;
    os << label << ',' << model_name(r.model) << ',' << format_sig6(r.c.value) << ',' << format_sig6(r.c.sigma) << ','
       << opt_field(r.tau_d, us, false) << ',' << opt_field(r.tau_d, us, true) << ',' << opt_field(r.a, 1.0, false)
       << ',' << opt_field(r.a, 1.0, true) << ',' << format_sig6(r.lifetime * us) << ','
       << format_sig6(r.lifetime_sigma * us) << ',' << format_sig6(r.chi2_reduced);
    return os.str();
}

} // namespace swmem

#include <doctest.h>

#include <random>

#include <json.hpp>

#include "nnsr/bounds.hpp"
#include "oracles.hpp"

using namespace nnsr;

namespace {

BoundInputs inputs(int k, double delta, double sigma, double eta) {
    BoundInputs in;
    in.k = k;
    in.delta_sep = delta;
    in.sigma = sigma;
    in.epsilon = delta / 4.0;
    in.eta = eta;
    in.lambda = 0.1;
    return in;
}

}  // namespace

TEST_CASE("F_min and F_max reference values") {
    const double e9 = std::exp(-9.0);
    CHECK(f_min(0.3, 0.1) == doctest::Approx(1.0 - 201.0 * 2.0 * e9 / (1.0 - e9)).epsilon(1e-14));
    CHECK(f_min(0.3, 0.1) == doctest::Approx(0.950383).epsilon(1e-6));
    CHECK(f_min(50.0, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(f_max(50.0, 1.0) == doctest::Approx(std::sqrt(18.0) * std::sqrt(152.0)).epsilon(1e-12));
    CHECK(std::sqrt(18.0) * std::sqrt(152.0) == doctest::Approx(52.307).epsilon(1e-4));

    // at the threshold Delta = sigma sqrt(log 7) with sigma = 1, F_min is exactly 0
    const double edge = std::sqrt(std::log(7.0));
    CHECK(std::abs(f_min(edge, 1.0)) <= 1e-14);
    CHECK_FALSE(compute_bounds(inputs(1, edge, 1.0, 0.01)).f_min_valid);

    for (double d : {0.05, 0.1, 0.3, 1.0, 3.0}) CHECK(f_max(d, 0.2) > 16.0);
}

TEST_CASE("C bar and P") {
    CHECK(c_bar(1.0, 1.0) == 8.0);
    CHECK(c_bar(2.0, 1.0) == 13.0);
    CHECK(c_bar(1.0, 2.0) == c_bar(2.0, 1.0));
    CHECK(p_poly(1.0) == doctest::Approx(1021.0).epsilon(1e-14));

    BoundInputs in = inputs(1, 1.0, std::sqrt(2.0), 0.01);
    CHECK(oracle::rel_diff(p_poly(std::sqrt(2.0)), oracle::bounds(in).p) <= 1e-12);

    double prev = p_poly(0.01);
    for (double s = 0.02; s <= 2.0; s += 0.01) {
        CHECK(p_poly(s) < prev);
        prev = p_poly(s);
    }
}

TEST_CASE("eta_max branches") {
    const EtaMax e = eta_max_branches(1, 3.0, 1.0, 1.0, 1.0);
    CHECK(e.branch_cbar == doctest::Approx(std::pow(8.0, 1.0 / 6.0) / std::cbrt(12.0)).epsilon(1e-14));
    CHECK(e.branch_cbar == doctest::Approx(0.6177).epsilon(1e-4));

    const EtaMax f = eta_max_branches(1, 0.3, 0.1, 1.0, 1.0);
    const auto o = oracle::bounds(inputs(1, 0.3, 0.1, 0.01));
    CHECK(oracle::rel_diff(f.branch_fmin, o.eta_fmin) <= 1e-12);
    CHECK(oracle::rel_diff(f.branch_cbar, o.eta_cbar) <= 1e-12);
    CHECK(f.value == std::min(f.branch_fmin, f.branch_cbar));
    CHECK(eta_max(1, 0.3, 0.1, 1.0, 1.0) == f.value);

    for (int k = 1; k < 10; ++k) CHECK(eta_max(k + 1, 0.3, 0.1, 1.0, 1.0) < eta_max(k, 0.3, 0.1, 1.0, 1.0));
}

TEST_CASE("closed forms agree with the 50-digit oracle") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int checked = 0;
    for (int i = 0; i < 400; ++i) {
        BoundInputs in;
        in.k = 1 + static_cast<int>(u(rng) * 8);
        in.sigma = 0.03 + 1.3 * u(rng);
        const double floor = in.sigma * std::sqrt(std::log(3.0 + 4.0 / (in.sigma * in.sigma)));
        in.delta_sep = floor * (1.05 + 2.0 * u(rng));
        in.eta = 1e-4 + 0.1 * u(rng);
        in.lambda = 0.4 * u(rng);
        in.f0 = 0.5 + 20.0 * u(rng);
        in.f1 = 0.5 + 5.0 * u(rng);
        in.f_bar = 0.05 + 0.9 * u(rng);
        const auto o = oracle::bounds(in);
        if (o.f_min < 0.05) continue;
        ++checked;
        const double tol = 1e-12;
        CHECK(oracle::rel_diff(f_min(in.delta_sep, in.sigma), o.f_min) <= tol);
        CHECK(oracle::rel_diff(f_max(in.delta_sep, in.sigma), o.f_max) <= tol);
        CHECK(oracle::rel_diff(c_bar(in.f0, in.f1), o.c_bar) <= tol);
        CHECK(oracle::rel_diff(p_poly(in.sigma), o.p) <= tol);
        CHECK(oracle::rel_diff(eta_max(in.k, in.delta_sep, in.sigma, in.f0, in.f1), o.eta_max) <= tol);
        const BNormBounds b = b_norm_bounds(in);
        CHECK(oracle::rel_diff(b.b, o.b) <= tol);
        CHECK(oracle::rel_diff(b.b_pi, o.b_pi) <= tol);
        CHECK(oracle::rel_diff(F1(in), o.F1) <= tol);
        CHECK(oracle::rel_diff(F2(in), o.F2) <= tol);
        CHECK(oracle::rel_diff(C1(in), o.C1) <= tol);
        CHECK(oracle::rel_diff(C2(in), o.C2) <= tol);
        CHECK(log10_F1(in) == doctest::Approx(static_cast<double>(log10(o.F1))).epsilon(1e-12));
        CHECK(log10_F2(in) == doctest::Approx(static_cast<double>(log10(o.F2))).epsilon(1e-12));
        CHECK(b.log10_b == doctest::Approx(static_cast<double>(log10(o.b))).epsilon(1e-12));
        if (o.F3 > 0 && o.F3 < 100) CHECK(oracle::rel_diff(F3(in), o.F3) <= 1e-11);
    }
    CHECK(checked > 200);
}

TEST_CASE("norm bound scaling") {
    CHECK(1.0 / (1.0 - std::sqrt(std::exp(1.0)) / 2.0) == doctest::Approx(5.6935).epsilon(1e-4));

    BoundInputs in = inputs(1, 0.3, 0.1, 1e-3);
    const double ratio = growth_ratio(0.3, 0.1);
    CHECK(ratio == doctest::Approx(f_max(0.3, 0.1) / (f_min(0.3, 0.1) * f_min(0.3, 0.1))));
    // b_k / b_{k-1} = ratio * (polynomial prefactor change), isolated by dividing it out
    std::vector<double> log_b;
    for (int k = 1; k <= 3; ++k) {
        in.k = k;
        const double pre = std::sqrt((2.0 * k + 2.0) * (4.0 * k + 5.0 + 4.0 * k / std::pow(0.1, 4)));
        log_b.push_back(std::log(b_norm_bounds(in).b / pre));
    }
    CHECK(log_b[1] - log_b[0] == doctest::Approx(std::log(ratio)).epsilon(1e-12));
    CHECK(log_b[2] - log_b[1] == doctest::Approx(std::log(ratio)).epsilon(1e-12));

    in.k = 2;
    const double bp = b_norm_bounds(in).b_pi;
    in.eta /= 2.0;
    CHECK(b_norm_bounds(in).b_pi == doctest::Approx(2.0 * bp).epsilon(1e-14));

    in.eta = 2.0 * eta_max(2, 0.3, 0.1, 1.0, 1.0);
    CHECK_FALSE(b_norm_bounds(in).valid);
    in.eta = 0.5 * eta_max(2, 0.3, 0.1, 1.0, 1.0);
    CHECK(b_norm_bounds(in).valid);
}

TEST_CASE("F1, F2, F3 audits") {
    BoundInputs in = inputs(2, 0.3, 0.1, 1e-3);
    const double f1 = F1(in), f2f = F2(in) * in.f_bar;
    in.f_bar /= 2.0;
    CHECK(F1(in) > f1);
    CHECK(F2(in) * in.f_bar == doctest::Approx(f2f).epsilon(1e-14));

    in = inputs(1, 0.4, 0.01, 1e-3);
    in.lambda = 1e-6;
    CHECK(F3(in) == doctest::Approx(1.0).epsilon(1e-9));

    // nonpositive denominator is flagged
    in = inputs(1, 0.05, 0.1, 1e-3);
    in.lambda = 0.45;
    CHECK_FALSE(compute_bounds(in).f3_valid);
}

// The regime also carries lambda Delta < eta / 2 <= sigma^2 / 2 from the sample-pair
// construction; without it F3 ~ exp(lambda^2 Delta^2 / sigma^2) is unbounded.
TEST_CASE("F3 stays below 10 in the average-stability regime") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        BoundInputs in;
        in.sigma = 0.01 + (1.0 / std::sqrt(3.0) - 0.01) * u(rng);
        const double floor = in.sigma * std::sqrt(std::log(5.0 / (in.sigma * in.sigma)));
        in.delta_sep = floor * (1.0 + 1e-9 + 2.0 * u(rng));
        in.lambda = std::min(0.4, in.sigma * in.sigma / (2.0 * in.delta_sep)) * u(rng);
        const double v = F3(in);
        CHECK(std::isfinite(v));
        CHECK(v >= 1.0);
        CHECK(v <= 3.0 * std::exp(in.sigma * in.sigma / 4.0));
        CHECK(v <= 10.0);
    }

    BoundInputs wide;
    wide.sigma = 0.04;
    wide.delta_sep = 0.34;
    wide.lambda = 0.38;
    CHECK(F3(wide) > 1e3);
}

TEST_CASE("F_max decreases with the separation") {
    for (double sigma : {0.05, 0.1, 0.5, 1.0}) {
        double prev = f_max(0.01, sigma);
        for (double d = 0.02; d < 2.0; d += 0.01) {
            const double v = f_max(d, sigma);
            CHECK(v <= prev);
            prev = v;
        }
    }
}

TEST_CASE("lambda0") {
    const double l = solve_lambda0(GaussianWindow(0.05), 0.2);
    CHECK(l > 0.0);
    CHECK(l < 0.5);
    CHECK(std::abs(lambda_residual(0.05, 0.2, l)) <= 1e-12);
    CHECK(std::abs(oracle::lambda_residual(0.05, 0.2, l)) <= 1e-12);

    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double sigma = 0.02 + 0.2 * u(rng), delta = 0.05 + 0.45 * u(rng), lam = 0.5 * u(rng);
        CHECK(lambda_residual(sigma, delta, lam) ==
              doctest::Approx(oracle::lambda_residual(sigma, delta, lam)).epsilon(1e-12).scale(1.0));
    }

    double prev = 0.0;
    for (double sigma : {0.1, 0.08, 0.06, 0.04, 0.02}) {
        const double v = solve_lambda0(GaussianWindow(sigma), 0.3);
        CHECK(v > prev);
        prev = v;
    }

    // fewer sources drop integral terms, so the right-hand side shrinks and the root moves out
    const double full = solve_lambda0(GaussianWindow(0.25), 0.3);
    const double four = solve_lambda0(GaussianWindow(0.25), 0.3, LambdaVariant::four_sources);
    const double three = solve_lambda0(GaussianWindow(0.25), 0.3, LambdaVariant::three_sources);
    CHECK(full < four);
    CHECK(four < three);
    CHECK(std::abs(lambda_residual(0.25, 0.3, three, LambdaVariant::three_sources)) <= 1e-12);

    CHECK_THROWS_AS(solve_lambda0(GaussianWindow(1.0), 0.05), std::runtime_error);
    CHECK_THROWS_AS(solve_lambda0(GaussianWindow(0.1), 0.6), std::invalid_argument);
}

TEST_CASE("dominance matrix and Varah bound") {
    Eigen::Matrix2d A;
    A << 3, -1, -1, 3;
    CHECK(inverse_inf_norm(A) == doctest::Approx(0.5).epsilon(1e-14));

    const SamplingScheme s({0.0, 0.48, 1.0}, GaussianWindow(0.1));
    const DominanceMatrix one = build_dominance_matrix({0.5}, s);
    CHECK(one.A.rows() == 1);
    CHECK(one.A(0, 0) == doctest::Approx(std::exp(-0.04)));
    CHECK(one.dominant);
    CHECK(one.proximity == doctest::Approx(0.04));

    // Varah bound dominates the exact inverse norm, k <= 6
    std::mt19937_64 rng(44);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int dominant = 0;
    for (int i = 0; i < 300; ++i) {
        const int k = 1 + static_cast<int>(u(rng) * 6);
        const double sigma = 0.01 + 0.04 * u(rng);
        std::vector<double> t;
        for (int j = 0; j < k; ++j) t.push_back((j + 0.2 + 0.6 * u(rng)) / k);
        const SamplingScheme sc = place_samples(min_separation(t), 0.05 + 0.4 * u(rng), GaussianWindow(sigma));
        const DominanceMatrix dm = build_dominance_matrix(t, sc);
        for (std::size_t j = 0; j < t.size(); ++j) {
            const double sj = sc.samples()[dm.nearest[j]];
            for (double v : sc.samples()) CHECK(std::abs(t[j] - sj) <= std::abs(t[j] - v));
        }
        if (!dm.dominant) continue;
        ++dominant;
        CHECK(dm.varah_bound >= inverse_inf_norm(dm.A) * (1.0 - 1e-12));
    }
    CHECK(dominant > 50);
}

TEST_CASE("Gershgorin floor on B") {
    const GershgorinReport one = gershgorin_floor({0.5}, 0.1);
    CHECK(one.B(0, 0) == 1.0);
    CHECK(one.B(1, 1) == doctest::Approx(2.0 / 0.01));
    CHECK(one.B(0, 1) == 0.0);
    CHECK(one.B(1, 0) == 0.0);
    CHECK(one.lambda_min == doctest::Approx(1.0));
    CHECK(one.factorization_ok);

    // source gaps of 0.3 with sigma 0.1; the boundary gap 0.2 makes the report's own floor smaller
    const Eigen::MatrixXd B3 = block_matrix_b({0.2, 0.5, 0.8}, 0.1);
    const Eigen::LLT<Eigen::MatrixXd> llt(B3 - f_min(0.3, 0.1) * Eigen::MatrixXd::Identity(6, 6));
    CHECK(llt.info() == Eigen::Success);
    CHECK(B3 == B3.transpose());
    const GershgorinReport three = gershgorin_floor({0.2, 0.5, 0.8}, 0.1);
    CHECK(three.floor == doctest::Approx(f_min(0.2, 0.1)));
    CHECK(three.factorization_ok);
    CHECK(three.lambda_min >= three.floor);

    const GershgorinReport spaced = gershgorin_floor({0.25, 0.5, 0.75}, 0.05);
    CHECK(spaced.hypotheses);
    CHECK(spaced.factorization_ok);

    std::mt19937_64 rng(45);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        const double sigma = 0.02 + 0.06 * u(rng);
        const double sep = sigma * std::sqrt(std::log(3.0 + 4.0 / (sigma * sigma))) * (1.01 + 0.3 * u(rng));
        std::vector<double> t{sep * (1.0 + 0.5 * u(rng))};
        while (t.back() + 2.0 * sep * 1.5 < 1.0) t.push_back(t.back() + sep * (1.0 + 0.5 * u(rng)));
        const GershgorinReport r = gershgorin_floor(t, sigma);
        CHECK(r.hypotheses);
        CHECK(r.factorization_ok);
        CHECK(r.B == r.B.transpose());
    }
}

TEST_CASE("determinant perturbation envelope") {
    const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
    const DetEnvelope e = det_perturbation_envelope(I, I, 0.01);
    const double exact_width = 17.0 * std::sqrt(std::exp(1.0)) / 8.0 * 2.0 * 0.01;
    CHECK(exact_width == doctest::Approx(0.07007).epsilon(1e-4));
    CHECK(e.rho_hat == doctest::Approx(std::sqrt(2.0)));
    CHECK(e.hi - 1.0 == doctest::Approx(exact_width * std::sqrt(2.0)));
    CHECK(e.lo <= 1.0 - exact_width);
    CHECK(e.hi >= 1.0 + exact_width);
    CHECK(e.lo <= 1.0201);
    CHECK(1.0201 <= e.hi);
    CHECK(e.admissible);

    const DetEnvelope z = det_perturbation_envelope(I, I, 0.0);
    CHECK(z.lo == 1.0);
    CHECK(z.hi == 1.0);

    const Eigen::Matrix2d flip = Eigen::Vector2d(-1.0, 1.0).asDiagonal();
    CHECK_THROWS_AS(det_perturbation_envelope(flip, I, 0.01), std::invalid_argument);

    std::mt19937_64 rng(46);
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const int m = 2 + static_cast<int>(u(rng) * 5);
        Eigen::MatrixXd A = Eigen::MatrixXd::Identity(m, m) * (1.0 + m * u(rng));
        Eigen::MatrixXd B(m, m);
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < m; ++c) {
                A(r, c) += 0.3 * n(rng);
                B(r, c) = n(rng);
            }
        if (A.determinant() <= 0.0) A.row(0) *= -1.0;
        const double cap = det_perturbation_envelope(A, B, 0.0).eps_cap;
        const double eps = cap * u(rng);
        const DetEnvelope env = det_perturbation_envelope(A, B, eps);
        REQUIRE(env.admissible);
        const double d = (A + eps * B).determinant();
        CHECK(d >= env.lo - 1e-12 * std::abs(env.det_a));
        CHECK(d <= env.hi + 1e-12 * std::abs(env.det_a));
    }
}

TEST_CASE("bound report serialization") {
    BoundInputs in = inputs(3, 0.25, 0.05, 1e-3);
    const std::vector<double> t{0.25, 0.5, 0.75};
    const SamplingScheme s = place_samples(0.25, 0.1, GaussianWindow(0.05));
    const BoundReport r = compute_bounds(in, &t, &s);
    CHECK(r.f_min_valid);
    CHECK(r.gershgorin_valid);
    CHECK(r.lambda0_valid);
    CHECK(r.lambda_valid);
    CHECK(r.varah_valid);

    const auto j = nlohmann::json::parse(bound_report_json(r));
    CHECK(j.at("valid").at("gershgorin") == true);
    const std::string header = bound_report_csv_header();
    const std::string row = bound_report_csv_row(r);
    CHECK(std::count(header.begin(), header.end(), ',') == std::count(row.begin(), row.end(), ','));

    const BoundReport bare = compute_bounds(in);
    CHECK_FALSE(bare.varah_valid);
    CHECK_FALSE(bare.gershgorin_valid);
}

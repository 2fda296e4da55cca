#include "qmetro/radar.hpp"

#include "qmetro/builtins.hpp"
#include "test_helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

using namespace qmetro;
using Catch::Approx;

namespace {
RadarScene scene_with(double kappa) {
    RadarScene s;
    s.kappa = kappa;
    return s;
}

double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }
}  // namespace

TEST_CASE("analytic information matrices") {
    SECTION("separable photons") {
        const auto info = analytic_info(scene_with(0.0));
        CHECK(info.f_q(0, 0) == Approx(4.0));
        CHECK(info.f_q(1, 1) == Approx(1.0));
        CHECK(info.f_im(0, 1) == Approx(-2.0));
        const RealVector lam =
            skew_spectrum(RealMatrix(spd_inv_sqrt(info.f_q) * info.f_im * spd_inv_sqrt(info.f_q)));
        CHECK(lam[0] == Approx(1.0).margin(1e-12));
        CHECK(lam[1] == Approx(1.0).margin(1e-12));
    }
    SECTION("partially entangled photons") {
        const auto info = analytic_info(scene_with(0.6));
        CHECK(info.f_q(1, 1) == Approx(1.0 / 0.64));
        const RealVector lam =
            skew_spectrum(RealMatrix(spd_inv_sqrt(info.f_q) * info.f_im * spd_inv_sqrt(info.f_q)));
        CHECK(lam[0] == Approx(0.8).margin(1e-12));
    }
    SECTION("kappa at or above one is rejected") {
        CHECK_THROWS_AS(analytic_info(scene_with(1.0)), std::invalid_argument);
        CHECK_THROWS_AS(analytic_info(scene_with(1.5)), std::invalid_argument);
    }
}

TEST_CASE("product bounds and their consistency identity") {
    CHECK(refined_ak_bound(0.0) == Approx(1.0));
    CHECK(qcrb_product_bound(0.0) == Approx(0.5));
    CHECK(refined_ak_bound(0.6) == Approx(0.5).margin(1e-15));
    CHECK(qcrb_product_bound(0.6) == Approx(0.4).margin(1e-15));
    for (double kappa = 0.0; kappa < 0.999; kappa += 0.0831) {
        CHECK(std::abs(refined_ak_bound(kappa) * (1.0 + kappa) -
                       std::sqrt(1.0 - kappa * kappa)) < 1e-12);
        CHECK(refined_ak_bound(kappa) >= qcrb_product_bound(kappa));
    }
    CHECK_THROWS_AS(refined_ak_bound(1.0), std::invalid_argument);
    CHECK_THROWS_AS(qcrb_product_bound(-0.1), std::invalid_argument);
}

TEST_CASE("range and velocity recovery") {
    RadarScene s;
    SECTION("unshifted echo means a target at rest at zero range") {
        const auto rv = params_to_range_velocity(s.t0, s.omega0, s);
        CHECK(rv.range == Approx(0.0).margin(1e-15));
        CHECK(rv.velocity == Approx(0.0).margin(1e-15));
    }
    SECTION("round trip over random targets") {
        Rng rng(6);
        for (int t = 0; t < 50; ++t) {
            RadarScene sc;
            sc.range = rng.uniform(-3.0, 3.0);
            sc.velocity = rng.uniform(-0.5, 0.5);  // below c = 1
            const auto [tb, wb] = range_velocity_to_params(sc.range, sc.velocity, sc);
            const auto rv = params_to_range_velocity(tb, wb, sc);
            CHECK(std::abs(rv.range - sc.range) < 1e-12);
            CHECK(std::abs(rv.velocity - sc.velocity) < 1e-12);
        }
    }
    SECTION("an approaching target shifts the frequency down in this convention") {
        const auto [tb, wb] = range_velocity_to_params(1.0, 0.2, s);
        CHECK(wb < s.omega0);
        (void)tb;
    }
    SECTION("superluminal implied velocity is a domain error") {
        CHECK_THROWS_AS(params_to_range_velocity(0.0, -1.0, s), std::domain_error);
        CHECK_THROWS_AS(range_velocity_to_params(0.0, 1.5, s), std::domain_error);
    }
}

TEST_CASE("discretized model reproduces the closed-form information") {
    for (double kappa : {0.0, 0.3, 0.5, 0.7}) {
        const auto scene = scene_with(kappa);
        const auto model = biphoton_model(scene);
        const auto bundle = information_at(model, model.reference_point);
        const auto exact = analytic_info(scene);
        CHECK(rel_err(bundle.f_q(0, 0), exact.f_q(0, 0)) < 1e-3);
        CHECK(rel_err(bundle.f_q(1, 1), exact.f_q(1, 1)) < 1e-3);
        CHECK(std::abs(bundle.f_q(0, 1)) < 1e-3);
        CHECK(rel_err(bundle.f_im(0, 1), exact.f_im(0, 1)) < 1e-3);
        CHECK(discrete_norm_error(scene) < 1e-8);
    }
}

TEST_CASE("separable-photon model factorizes") {
    const auto model = biphoton_model(scene_with(0.0));
    const auto bundle = information_at(model, model.reference_point);
    CHECK(rel_err(bundle.f_q(0, 0), 4.0) < 1e-6);
    CHECK(rel_err(bundle.f_q(1, 1), 1.0) < 1e-6);
}

TEST_CASE("refining the grid tightens the discretization") {
    TimeGrid fine;
    fine.n_t = 128;
    for (double kappa : {0.0, 0.5, 0.7}) {
        const auto scene = scene_with(kappa);
        const auto bundle =
            information_at(biphoton_model(scene, fine),
                           biphoton_model(scene, fine).reference_point);
        const auto exact = analytic_info(scene);
        CHECK(rel_err(bundle.f_q(0, 0), exact.f_q(0, 0)) < 1e-4);
        CHECK(rel_err(bundle.f_q(1, 1), exact.f_q(1, 1)) < 1e-4);
        CHECK(rel_err(bundle.f_im(0, 1), exact.f_im(0, 1)) < 1e-4);
    }
}

TEST_CASE("doubling the window at fixed spacing changes nothing measurable") {
    const auto scene = scene_with(0.5);
    TimeGrid base;  // w = 5, n_t = 64
    TimeGrid wide;
    wide.w = 10.0;
    wide.n_t = 128;
    const auto b1 = information_at(biphoton_model(scene, base),
                                   biphoton_model(scene, base).reference_point);
    const auto b2 = information_at(biphoton_model(scene, wide),
                                   biphoton_model(scene, wide).reference_point);
    CHECK(rel_err(b2.f_q(0, 0), b1.f_q(0, 0)) < 1e-6);
    CHECK(rel_err(b2.f_q(1, 1), b1.f_q(1, 1)) < 1e-6);
}

TEST_CASE("an under-resolved grid is rejected with a suggestion") {
    TimeGrid coarse;
    coarse.n_t = 16;
    try {
        biphoton_model(scene_with(0.2), coarse);
        FAIL("expected a resolution error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("n_t") != std::string::npos);
    }
    TimeGrid bad;
    bad.n_t = 8;
    CHECK_THROWS_AS(biphoton_model(scene_with(0.2), bad), ValidationError);
}

TEST_CASE("separable photons cost exactly one unit of trade-off") {
    const auto model = biphoton_model(scene_with(0.0));
    const auto bundle = information_at(model, model.reference_point);
    const auto rot = optimal_rotation(bundle);
    CHECK(rot.residual == Approx(1.0).margin(1e-9));
    MeasurementConfig config;
    config.seed = 2;
    const auto plan = design_measurement(bundle, config);
    CHECK(plan.eps_sq_tilde.sum() == Approx(1.0).margin(1e-9));
    CHECK(plan.gamma_achieved == Approx(1.0).margin(1e-3));
    // at kappa = 0 the two targets collapse onto one direction
    CHECK(plan.rank_dropped == 1);
    CHECK(plan.constrained_cols == 1);
}

TEST_CASE("radar finite differences agree with the analytic derivatives") {
    const auto model = biphoton_model(scene_with(0.4));
    const auto analytic = evaluate_with_derivatives(model, model.reference_point);
    PureStateModel fd = model;
    fd.derivatives = nullptr;
    const auto numeric = evaluate_with_derivatives(fd, model.reference_point);
    for (int j = 0; j < 2; ++j) {
        ComplexVector a = analytic.dpsi[j];
        detail::project_real_overlap(analytic.psi, a);
        CHECK((a - numeric.dpsi[j]).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("constructed measurements achieve 1+kappa on the grid model") {
    for (double kappa : {0.3, 0.9}) {
        const auto model = biphoton_model(scene_with(kappa));
        const auto bundle = information_at(model, model.reference_point);
        MeasurementConfig config;
        config.seed = 5;
        const auto plan = design_measurement(bundle, config);
        CHECK(std::abs(plan.gamma_achieved - (1.0 + kappa)) < 1e-3);
    }
}

TEST_CASE("the span-compressed model is an exact surrogate for the search") {
    const double kappa = 0.3;
    const auto model = biphoton_model(scene_with(kappa));
    const auto bundle = information_at(model, model.reference_point);

    std::vector<ComplexVector> span{bundle.psi};
    for (const auto& l : bundle.sld) span.push_back(l);
    const auto gs = gram_schmidt(span);
    const int s = static_cast<int>(gs.basis.size());
    ComplexMatrix basis(model.d, s);
    for (int k = 0; k < s; ++k) basis.col(k) = gs.basis[k];
    const auto ev = evaluate_with_derivatives(model, model.reference_point);
    std::vector<ComplexVector> dpsi_c;
    for (const auto& dp : ev.dpsi) dpsi_c.push_back(ComplexVector(basis.adjoint() * dp));
    const auto surrogate = explicit_model(ComplexVector(basis.adjoint() * ev.psi), dpsi_c);

    const auto sb = information_at(surrogate, RealVector::Zero(2));
    CHECK((sb.f_q - bundle.f_q).cwiseAbs().maxCoeff() < 1e-9);

    BruteForceConfig config;
    config.seed = 9;
    config.restarts = 6;
    const auto r = brute_force_gamma(surrogate, RealVector::Zero(2), config);
    CHECK(std::abs(r.best_gamma - (1.0 + kappa)) < 1e-2);
}

TEST_CASE("kappa sweep table and csv format") {
    TimeGrid grid;  // default 64 x 64
    MeasurementConfig config;
    config.seed = 3;
    const auto rows = kappa_sweep({0.0, 0.45, 0.9}, grid, config);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].refined_ak_bound == Approx(1.0));
    CHECK(rows[0].qcrb_product_bound == Approx(0.5));
    // achieved trade-off grows with entanglement
    CHECK(rows[0].gamma_achieved < rows[1].gamma_achieved);
    CHECK(rows[1].gamma_achieved < rows[2].gamma_achieved);

    std::ostringstream os;
    write_sweep_csv(rows, os);
    std::istringstream in(os.str());
    std::string header;
    std::getline(in, header);
    CHECK(header ==
          "kappa,qcrb_product_bound,refined_ak_bound,gamma_bound,gamma_achieved,grid_N,grid_W");
    std::string line;
    int count = 0;
    while (std::getline(in, line)) {
        double k, qc, rf, gb, ga, gw;
        int gn;
        REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%d,%lf", &k, &qc, &rf, &gb, &ga,
                            &gn, &gw) == 7);
        CHECK(std::abs(rf - refined_ak_bound(k)) < 1e-12);
        CHECK(std::abs(qc - qcrb_product_bound(k)) < 1e-12);
        CHECK(gn == 64);
        ++count;
    }
    CHECK(count == 3);
}

TEST_CASE("kappa spec parsing") {
    const auto ks = parse_kappa_spec("0:0.9:10");
    REQUIRE(ks.size() == 10);
    CHECK(ks.front() == Approx(0.0));
    CHECK(ks.back() == Approx(0.9));
    CHECK(parse_kappa_spec("0.5").size() == 1);
    CHECK_THROWS_AS(parse_kappa_spec("abc"), ParseError);
    CHECK_THROWS_AS(parse_kappa_spec("0:1:0"), ParseError);
}

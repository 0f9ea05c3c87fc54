#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fno/interface.hpp"
#include "fno/rng.hpp"

using namespace fno;

namespace {

ScalarField2D circle_sdf(int n, double cx, double cy, double radius, double dx = 1.0) {
    ScalarField2D zeta(Grid2D{n, n, dx, dx});
    for (int i = 0; i < n; ++i) {
        const double y = (i + 0.5) * dx;
        for (int j = 0; j < n; ++j) {
            const double x = (j + 0.5) * dx;
            zeta.at(i, j) = std::hypot(x - cx, y - cy) - radius;
        }
    }
    return zeta;
}

}  // namespace

TEST_CASE("alpha_to_rdf pointwise values") {
    const RdfParams params{1.0, 1e-6};
    ScalarField2D alpha(Grid2D{4, 4, 1.0, 1.0}, 0.5);
    const ScalarField2D mid = alpha_to_rdf(alpha, params);
    for (double v : mid.values) CHECK(v == 0.0);

    // Closed-form inverse: alpha = (1 - tanh(2))/2 maps back to zeta = 2.
    const double a2 = 0.5 * (1.0 - std::tanh(2.0));
    ScalarField2D alpha2(Grid2D{4, 4, 1.0, 1.0}, a2);
    const ScalarField2D two = alpha_to_rdf(alpha2, params);
    for (double v : two.values) CHECK(v == doctest::Approx(2.0).epsilon(1e-9));

    // Saturated liquid: finite thanks to the clamp.
    ScalarField2D ones(Grid2D{4, 4, 1.0, 1.0}, 1.0);
    const ScalarField2D sat = alpha_to_rdf(ones, params);
    const double expected = std::atanh(-1.0 + 2e-6);
    for (double v : sat.values) {
        CHECK(std::isfinite(v));
        CHECK(v == doctest::Approx(expected).epsilon(1e-12));
        CHECK(v == doctest::Approx(-7.2543).epsilon(1e-3));
    }
}

TEST_CASE("rdf_to_alpha basics and saturation limit") {
    const RdfParams params{1.0, 1e-6};
    ScalarField2D zeta(Grid2D{4, 4, 1.0, 1.0}, 0.0);
    for (double v : rdf_to_alpha(zeta, params).values) CHECK(v == doctest::Approx(0.5));

    ScalarField2D gas(Grid2D{4, 4, 1.0, 1.0}, 50.0);
    for (double v : rdf_to_alpha(gas, params).values) {
        CHECK(v >= 0.0);
        CHECK(v <= 1e-9);
    }
}

TEST_CASE("round trip: rdf_to_alpha then alpha_to_rdf recovers zeta") {
    const RdfParams params{1.5, 1e-6};
    ScalarField2D zeta(Grid2D{8, 8, 1.0, 1.0});
    Rng rng(7);
    for (double& v : zeta.values) v = rng.uniform(-6.0, 6.0);  // within the non-clamped range
    const ScalarField2D back = alpha_to_rdf(rdf_to_alpha(zeta, params), params);
    for (std::size_t i = 0; i < zeta.values.size(); ++i)
        CHECK(back.values[i] == doctest::Approx(zeta.values[i]).epsilon(1e-9));
}

TEST_CASE("round trip clamps alpha: alpha -> rdf -> alpha") {
    const RdfParams params{1.0, 1e-6};
    ScalarField2D alpha(Grid2D{8, 8, 1.0, 1.0});
    Rng rng(8);
    for (double& v : alpha.values) v = rng.uniform(0.0, 1.0);
    const ScalarField2D back = rdf_to_alpha(alpha_to_rdf(alpha, params), params);
    for (std::size_t i = 0; i < alpha.values.size(); ++i) {
        const double clamped = std::clamp(alpha.values[i], params.delta, 1.0 - params.delta);
        CHECK(back.values[i] == doctest::Approx(clamped).epsilon(1e-9));
    }
}

TEST_CASE("alpha_to_rdf is strictly decreasing in alpha") {
    const RdfParams params{1.0, 1e-3};
    const Grid2D g{4, 4, 1.0, 1.0};
    double prev = std::numeric_limits<double>::infinity();
    for (double a = params.delta; a <= 1.0 - params.delta + 1e-12; a += 0.0831) {
        ScalarField2D alpha(g, a);
        const double z = alpha_to_rdf(alpha, params).values[0];
        CHECK(z < prev);
        prev = z;
    }
}

TEST_CASE("alpha outside [0,1] rejected") {
    ScalarField2D alpha(Grid2D{4, 4, 1.0, 1.0}, 1.3);
    CHECK_THROWS_AS(alpha_to_rdf(alpha, RdfParams{}), ValueError);
    alpha.values.assign(alpha.values.size(), -0.2);
    CHECK_THROWS_AS(alpha_to_rdf(alpha, RdfParams{}), ValueError);
}

TEST_CASE("binarize") {
    ScalarField2D liquid(Grid2D{4, 4, 1.0, 1.0}, -3.0);
    for (double v : binarize(liquid).values) CHECK(v == 1.0);
    ScalarField2D gas(Grid2D{4, 4, 1.0, 1.0}, 3.0);
    for (double v : binarize(gas).values) CHECK(v == 0.0);

    // Disk area from a circle SDF within 2% of pi R^2.
    const double r = 14.0;
    const ScalarField2D sdf = circle_sdf(64, 32.0, 32.0, r);
    double area = 0.0;
    for (double v : binarize(sdf).values) area += v;
    CHECK(area == doctest::Approx(3.14159265358979 * r * r).epsilon(0.02));
}

TEST_CASE("binarize is consistent with the alpha threshold") {
    const RdfParams params{1.0, 1e-6};
    ScalarField2D alpha(Grid2D{8, 8, 1.0, 1.0});
    Rng rng(17);
    for (double& v : alpha.values) v = rng.uniform(0.0, 1.0);
    const ScalarField2D bin = binarize(alpha_to_rdf(alpha, params));
    for (std::size_t i = 0; i < alpha.values.size(); ++i)
        CHECK(bin.values[i] == (alpha.values[i] > 0.5 ? 1.0 : 0.0));
}

TEST_CASE("planar interface has zero curvature in the interior") {
    const int n = 32;
    ScalarField2D zeta(Grid2D{n, n, 1.0, 1.0});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) zeta.at(i, j) = (i + 0.5) - 16.0;
    const ScalarField2D q = curvature(zeta);
    for (int i = 1; i < n - 1; ++i)
        for (int j = 1; j < n - 1; ++j) CHECK(std::abs(q.at(i, j)) <= 1e-8);
}

TEST_CASE("circle curvature is 1/R on the interface band, positive for liquid inside") {
    const int n = 164;
    const double r = 20.0;
    const ScalarField2D zeta = circle_sdf(n, 82.0, 82.0, r);
    const ScalarField2D q = curvature(zeta);
    for (int i = 1; i < n - 1; ++i) {
        for (int j = 1; j < n - 1; ++j) {
            if (std::abs(zeta.at(i, j)) <= 1.0) {
                const double local_r = r + zeta.at(i, j);
                CHECK(q.at(i, j) > 0.0);
                CHECK(q.at(i, j) == doctest::Approx(1.0 / local_r).epsilon(0.05));
            }
        }
    }
}

TEST_CASE("curvature error shrinks at least first order under refinement") {
    // Same physical circle on two resolutions; dx halves.
    const double radius = 20.0;
    const auto band_error = [&](int n, double dx) {
        const ScalarField2D zeta = circle_sdf(n, 0.5 * n * dx, 0.5 * n * dx, radius, dx);
        const ScalarField2D q = curvature(zeta);
        double err = 0.0;
        int count = 0;
        for (int i = 1; i < n - 1; ++i) {
            for (int j = 1; j < n - 1; ++j) {
                if (std::abs(zeta.at(i, j)) <= dx) {
                    const double local_r = radius + zeta.at(i, j);
                    err += std::abs(q.at(i, j) - 1.0 / local_r);
                    ++count;
                }
            }
        }
        return err / count;
    };
    const double coarse = band_error(82, 1.0);
    const double fine = band_error(164, 0.5);
    CHECK(coarse / fine >= 2.0);  // observed order >= 1
}

TEST_CASE("surface tension force") {
    const int n = 128;
    const double r = 20.0;
    const ScalarField2D zeta = circle_sdf(n, 64.0, 64.0, r);

    const FieldBatch zero = surface_tension_force(zeta, 0.0);
    for (double v : zero.values) CHECK(v == 0.0);

    const FieldBatch f = surface_tension_force(zeta, 1.0);
    const double* fx = f.channel(0, 0);
    const double* fy = f.channel(0, 1);
    for (int i = 2; i < n - 2; ++i) {
        for (int j = 2; j < n - 2; ++j) {
            if (std::abs(zeta.at(i, j)) <= 0.5) {
                const std::size_t p = static_cast<std::size_t>(i) * n + j;
                const double mag = std::hypot(fx[p], fy[p]);
                const double local_r = r + zeta.at(i, j);
                CHECK(mag == doctest::Approx(1.0 / local_r).epsilon(0.05));
                // Radial alignment within 5 degrees.
                const double rx = (j + 0.5) - 64.0;
                const double ry = (i + 0.5) - 64.0;
                const double rn = std::hypot(rx, ry);
                const double cosang = (fx[p] * rx + fy[p] * ry) / (mag * rn);
                CHECK(std::abs(cosang) >= std::cos(5.0 * 3.14159265358979 / 180.0));
            }
        }
    }

    ScalarField2D plane(Grid2D{16, 16, 1.0, 1.0});
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j) plane.at(i, j) = (i + 0.5) - 8.0;
    const FieldBatch pf = surface_tension_force(plane, 1.0);
    for (int i = 1; i < 15; ++i)
        for (int j = 1; j < 15; ++j) {
            CHECK(std::abs(pf.channel(0, 0)[static_cast<std::size_t>(i) * 16 + j]) <= 1e-8);
            CHECK(std::abs(pf.channel(0, 1)[static_cast<std::size_t>(i) * 16 + j]) <= 1e-8);
        }
}

TEST_CASE("mixture property") {
    const PhaseProps props{1000.0, 1.0};
    ScalarField2D liquid(Grid2D{4, 4, 1.0, 1.0}, 1.0);
    for (double v : mixture_property(liquid, props).values) CHECK(v == 1000.0);
    ScalarField2D gas(Grid2D{4, 4, 1.0, 1.0}, 0.0);
    for (double v : mixture_property(gas, props).values) CHECK(v == 1.0);
    ScalarField2D quarter(Grid2D{4, 4, 1.0, 1.0}, 0.25);
    for (double v : mixture_property(quarter, props).values)
        CHECK(v == doctest::Approx(250.75).epsilon(1e-14));

    // Affine in alpha and bounded by the two phase values.
    Rng rng(3);
    ScalarField2D alpha(Grid2D{4, 4, 1.0, 1.0});
    for (double& v : alpha.values) v = rng.uniform(0.0, 1.0);
    const ScalarField2D mixed = mixture_property(alpha, props);
    for (std::size_t i = 0; i < mixed.values.size(); ++i) {
        CHECK(mixed.values[i] >= 1.0);
        CHECK(mixed.values[i] <= 1000.0);
        CHECK(mixed.values[i] ==
              doctest::Approx(alpha.values[i] * 1000.0 + (1.0 - alpha.values[i])).epsilon(1e-12));
    }
}

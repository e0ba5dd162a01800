#include <gtest/gtest.h>

#include <numbers>
#include <random>
#include <sstream>

#include "support.hpp"

using namespace domkit;
using fixtures::poly;

namespace {

FrequencyGrid grid_for(const TransferFunction& g, double lambda) { return FrequencyGrid::for_system(g, lambda); }

NyquistLocus circle_locus(int points, Complex centre = 0.0) {
    NyquistLocus l;
    for (int i = 0; i < points; ++i) {
        const double t = 2 * std::numbers::pi * i / points;
        l.path.emplace_back(0.0, t);
        l.points.push_back(centre + std::polar(1.0, t));
    }
    l.closure_point = centre + 1.0;
    return l;
}

}  // namespace

TEST(FrequencyGrid, DefaultGridIsIncreasingAndDensified) {
    const auto g = grid_for(fixtures::third_order(), 2.5);
    EXPECT_NO_THROW(g.validate());
    EXPECT_EQ(g.omegas.front(), 0.0);
    EXPECT_GT(g.omegas.size(), 2000u);
    const auto near_pole = std::count_if(g.omegas.begin(), g.omegas.end(), [](double w) { return w > 0.1 && w < 10; });
    EXPECT_GT(near_pole, 2 * 2000 / 7);
}

TEST(FrequencyGrid, ValidateRejectsDisorder) {
    FrequencyGrid g;
    g.omegas = {0.0, 2.0, 1.0};
    EXPECT_THROW(g.validate(), Error);
    g.omegas = {-1.0, 1.0};
    EXPECT_THROW(g.validate(), Error);
    g.symmetric = false;
    EXPECT_NO_THROW(g.validate());
}

TEST(NyquistLocus, SinglePoint) {
    FrequencyGrid g;
    g.omegas = {0.0};
    const auto l = nyquist_locus(TransferFunction(Polynomial{1.0}, poly({1, 2})), 0.0, g);
    ASSERT_EQ(l.size(), 1u);
    EXPECT_NEAR(l.points[0].real(), 0.5, 1e-15);
    EXPECT_EQ(l.closure_point, Complex(0.0));
}

TEST(NyquistLocus, ThirdOrderStartsAtDerivedValue) {
    const auto l = nyquist_locus(fixtures::third_order(), 2.5, grid_for(fixtures::third_order(), 2.5));
    bool seen = false;
    for (std::size_t i = 0; i < l.size(); ++i)
        if (l.omega_of(i) == 0.0) {
            EXPECT_NEAR(l.points[i].real(), 10.0 / 1.625, 1e-12);
            EXPECT_NEAR(l.points[i].real(), 6.1538, 1e-4);
            EXPECT_EQ(l.points[i].imag(), 0.0);
            seen = true;
        }
    EXPECT_TRUE(seen);
}

TEST(NyquistLocus, ConjugateSymmetry) {
    const auto g = fixtures::plant() * fixtures::lag();
    const auto l = nyquist_locus(g, 2.1, grid_for(g, 2.1));
    const std::size_t n = l.size();
    for (std::size_t i = 0; i < n / 2; ++i) {
        ASSERT_EQ(l.omega_of(i), -l.omega_of(n - 1 - i));
        EXPECT_LE(std::abs(l.points[i] - std::conj(l.points[n - 1 - i])), 1e-12 * (1 + std::abs(l.points[i])));
    }
}

TEST(NyquistLocus, BoundaryPoleNeedsIndentation) {
    const TransferFunction integ(Polynomial{1.0}, poly({1, 0}));
    try {
        nyquist_locus(integ, 0.0, FrequencyGrid::logspace(1e-3, 1e3, 200));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::boundary_pole);
        EXPECT_TRUE(e.inconclusive());
    }
    LocusOptions o;
    o.indent_radius = 1e-4;
    const auto l = nyquist_locus(integ, 0.0, FrequencyGrid::logspace(1e-3, 1e3, 200), o);
    for (const auto& s : l.path) EXPECT_GE(s.real(), 0.0);
}

TEST(WindingNumber, UnitCircle) {
    EXPECT_EQ(winding_number(circle_locus(64), 0.0), 1);
    EXPECT_EQ(winding_number(circle_locus(64), 2.0), 0);
}

TEST(WindingNumber, TooCloseIsInconclusive) {
    try {
        winding_number(circle_locus(64), Complex(1.0, 0.0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::too_close);
    }
}

TEST(WindingNumber, CoarseGridIsReported) {
    try {
        winding_number(circle_locus(3), 0.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::grid_too_coarse);
    }
}

TEST(WindingNumber, ThirdOrderNoEncirclements) {
    const auto g = fixtures::third_order();
    const auto l = nyquist_locus(g, 2.5, grid_for(g, 2.5));
    for (double k : {0.1, 1.0, 10.0, 100.0}) EXPECT_EQ(winding_number(l, -1.0 / k), 0) << "k = " << k;
}

// Property: mirroring the upper half grid gives the same count as an explicitly sampled full grid.
TEST(WindingNumber, MirroredGridMatchesExplicitFullGrid) {
    const auto g = tf_from_statespace(fixtures::chua());
    const auto half = grid_for(g, 4.0);
    FrequencyGrid full;
    full.symmetric = false;
    for (auto it = half.omegas.rbegin(); it != half.omegas.rend(); ++it)
        if (*it > 0) full.omegas.push_back(-*it);
    for (double w : half.omegas) full.omegas.push_back(w);
    const double point = -1.0 / 0.7;
    EXPECT_EQ(winding_number(nyquist_locus(g, 4.0, half), point), winding_number(nyquist_locus(g, 4.0, full), point));
    EXPECT_EQ(winding_number(nyquist_locus(g, 4.0, half), point), -1);
}

TEST(NyquistDominance, ThirdOrderAnyPositiveGain) {
    const auto g = fixtures::third_order();
    for (double k : {1.0, 10.0}) {
        const auto d = nyquist_dominance(g, 2.5, k, grid_for(g, 2.5));
        EXPECT_EQ(d.p1, 2);
        EXPECT_EQ(d.encirclements, 0);
        EXPECT_EQ(d.p2, 2);
    }
}

TEST(NyquistDominance, ClassicalStability) {
    const TransferFunction g(Polynomial{1.0}, poly({1, 1}));
    EXPECT_EQ(nyquist_dominance(g, 0.0, 0.5, grid_for(g, 0.0)).p2, 0);
}

TEST(NyquistDominance, IndentedIntegratorLoop) {
    // 1/(s(s+1)) with unit feedback closes to s^2 + s + 1.
    const TransferFunction g(Polynomial{1.0}, poly({1, 1, 0}));
    LocusOptions o;
    o.indent_radius = 1e-4;
    const auto d = nyquist_dominance(g, 0.0, 1.0, FrequencyGrid::logspace(1e-3, 1e4, 4000), o);
    EXPECT_EQ(d.p1, 0);
    EXPECT_EQ(d.p2, 0);
}

TEST(NyquistDominance, UnstableLoopCountsClosedLoopPoles) {
    // 10/((s+1)^3) with unit feedback: 1 + 10/(s+1)^3 has two roots in C+.
    const TransferFunction g(Polynomial{10.0}, poly({1, 3, 3, 1}));
    const auto d = nyquist_dominance(g, 0.0, 1.0, grid_for(g, 0.0));
    EXPECT_EQ(d.p1, 0);
    EXPECT_EQ(d.encirclements, 2);
    EXPECT_EQ(d.p2, oracle::routh_rhp_count(poly({1, 3, 3, 11})));
}

// Property: as k -> 0+ the test point leaves to -infinity and p2 -> p1.
TEST(NyquistDominance, VanishingGainReturnsOpenLoopCount) {
    const auto g = fixtures::third_order();
    const auto d = nyquist_dominance(g, 2.5, 1e-9, grid_for(g, 2.5));
    EXPECT_EQ(d.p2, d.p1);
}

TEST(LoopTransform, Examples) {
    const auto g = fixtures::plant();
    EXPECT_EQ(loop_transform(g, 0.0).den().descending(), g.den().descending());
    const auto t = loop_transform(TransferFunction(Polynomial{1.0}, poly({1, 0})), 1.0);
    EXPECT_EQ(t.den().descending(), (std::vector<double>{1.0, 1.0}));
    const auto gt = loop_transform(g, 1.0);
    const auto expected = poly_roots(g.den() + g.num());
    ASSERT_EQ(gt.poles().size(), expected.size());
    for (const auto& z : expected) {
        double best = 1e9;
        for (const auto& w : gt.poles()) best = std::min(best, std::abs(w - z));
        EXPECT_LT(best, 1e-9);
    }
}

TEST(PositiveReal, ZeroLowerBoundReducesToHalfPlane) {
    std::mt19937 rng(29);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int i = 0; i < 200; ++i) {
        const Complex g(u(rng), u(rng));
        const double k = std::abs(u(rng)) + 0.1;
        EXPECT_NEAR(loop_transformed_z(g, 0.0, k).real(), 1.0 + k * g.real(), 1e-12);
    }
}

TEST(PositiveReal, ThreePoleOscillatorFixture) {
    const auto g = fixtures::three_pole(1, 1, 2, 3);
    const auto r = positive_real_test(g, 2.6, 0.0, 100.0, grid_for(g, 2.6));
    EXPECT_TRUE(r.holds);
    EXPECT_GT(r.min_margin, 0.0);
}

// Property: the sign of Re{(1 + K2 G)/(1 + K1 G)} agrees with K1 K2 Y^2 + (K1 X + 1)(K2 X + 1).
TEST(PositiveRealProperty, RealPartSignMatchesQuadraticForm) {
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> u(-2, 2), lam(0, 2), kk(0.01, 5), w(0, 20);
    int agreed = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto n = 1 + i % 4;
        std::vector<double> num, den{1.0};
        for (int k = 0; k < n; ++k) den.push_back(u(rng));
        for (int k = 0; k < n; ++k) num.push_back(u(rng));
        const auto G = TransferFunction::from_descending(num, den);
        double k1 = kk(rng), k2 = kk(rng);
        if (k1 > k2) std::swap(k1, k2);
        const Complex g = evaluate(G, Complex(-lam(rng), w(rng)));
        const double X = g.real(), Y = g.imag();
        const double form = k1 * k2 * Y * Y + (k1 * X + 1) * (k2 * X + 1);
        const double re = loop_transformed_z(g, k1, k2).real();
        if (std::abs(form) < 1e-12) continue;
        EXPECT_EQ(re > 0, form > 0);
        ++agreed;
    }
    EXPECT_GE(agreed, 990);
}

TEST(Disk, Geometry) {
    const auto a = disk(0.0125, 1.0125);
    EXPECT_EQ(a.mode, DiskMode::outside);
    EXPECT_NEAR(a.center, -40.494, 1e-3);
    EXPECT_NEAR(a.radius, 39.506, 1e-3);
    const auto b = disk(0.7, 2.0);
    EXPECT_NEAR(b.center, -0.9643, 1e-4);
    EXPECT_NEAR(b.radius, 0.4643, 1e-4);
    const auto c = disk(-1.0, 1.0);
    EXPECT_EQ(c.mode, DiskMode::inside);
    EXPECT_NEAR(c.center, 0.0, 1e-15);
    EXPECT_NEAR(c.radius, 1.0, 1e-15);
    const auto d = disk(0.0, 4.0);
    EXPECT_EQ(d.mode, DiskMode::half_plane_right);
    EXPECT_DOUBLE_EQ(d.threshold, -0.25);
    EXPECT_EQ(disk(-2.0, -1.0).mode, DiskMode::outside);
    EXPECT_THROW(disk(1.0, 1.0), Error);
}

TEST(Disk, ClearanceSigns) {
    const auto d = disk(0.7, 2.0);
    EXPECT_GT(d.clearance(Complex(1.0, 0.0)), 0.0);
    EXPECT_LT(d.clearance(Complex(d.center, 0.0)), 0.0);
    const auto h = disk(0.0, 4.0);
    EXPECT_GT(h.clearance(Complex(0.0, 5.0)), 0.0);
    EXPECT_LT(h.clearance(Complex(-1.0, 0.0)), 0.0);
}

TEST(CircleCriterion, KalmanCounterexample) {
    const auto g = tf_from_statespace(fixtures::kalman());
    const auto r = circle_criterion(g, 0.275, 0.0125, 1.0125, grid_for(g, 0.275));
    EXPECT_EQ(r.status, Verdict::certified);
    ASSERT_TRUE(r.p);
    EXPECT_EQ(*r.p, 2);
    EXPECT_EQ(r.q, 2);
    EXPECT_EQ(r.encirclements, 0);
    EXPECT_GT(r.min_clearance, 0.0);
}

TEST(CircleCriterion, ChuaThreeDominant) {
    const auto g = tf_from_statespace(fixtures::chua());
    const auto r = circle_criterion(g, 4.0, 0.7, 2.0, grid_for(g, 4.0));
    EXPECT_EQ(r.status, Verdict::certified);
    ASSERT_TRUE(r.p);
    EXPECT_EQ(*r.p, 3);
    EXPECT_EQ(r.q, 2);
    EXPECT_EQ(r.encirclements, 1);
    EXPECT_EQ(r.consistent_p, std::vector<int>{3});
}

TEST(CircleCriterion, ThreePoleHalfPlaneSector) {
    const auto g = fixtures::three_pole(-10, 2, 3, 5);
    const auto r = circle_criterion(g, 2.6, 0.0, 100.0, grid_for(g, 2.6));
    EXPECT_EQ(r.status, Verdict::certified);
    ASSERT_TRUE(r.p);
    EXPECT_EQ(*r.p, 1);
    EXPECT_EQ(r.region.mode, DiskMode::half_plane_right);
}

TEST(CircleCriterion, RejectsWhenLocusEntersRegion) {
    const TransferFunction g(Polynomial{1.0}, poly({1, 3, 3, 1}));
    const auto r = circle_criterion(g, 0.0, 0.0, 10.0, grid_for(g, 0.0));
    EXPECT_EQ(r.status, Verdict::rejected);
    EXPECT_FALSE(r.disk_clause.pass);
    EXPECT_FALSE(r.p);
}

TEST(CircleCriterion, BoundaryPoleIsInconclusive) {
    const TransferFunction g(Polynomial{1.0}, poly({1, 1}));
    const auto r = circle_criterion(g, 1.0, 0.0, 1.0, grid_for(g, 1.0));
    EXPECT_EQ(r.status, Verdict::inconclusive);
    EXPECT_EQ(r.reason, "boundary pole");
    EXPECT_FALSE(r.boundary.pass);
}

TEST(CircleCriterion, RequiresOrderedSector) {
    const auto g = fixtures::third_order();
    EXPECT_THROW(circle_criterion(g, 2.5, 2.0, 1.0, grid_for(g, 2.5)), Error);
}

// Property: G -> cG with K -> K/c leaves the verdict unchanged.
TEST(CircleCriterionProperty, ScalingInvariance) {
    const auto g = tf_from_statespace(fixtures::chua());
    for (double c : {0.1, 0.5, 3.0, 40.0}) {
        const auto gc = c * g;
        const auto r = circle_criterion(gc, 4.0, 0.7 / c, 2.0 / c, grid_for(gc, 4.0));
        ASSERT_TRUE(r.p) << "c = " << c;
        EXPECT_EQ(*r.p, 3);
        EXPECT_EQ(r.encirclements, 1);
    }
}

TEST(LocusCsv, HeaderAndClosureRow) {
    FrequencyGrid g;
    g.omegas = {0.0, 1.0};
    const auto l = nyquist_locus(TransferFunction(Polynomial{1.0}, poly({1, 2})), 0.0, g);
    std::ostringstream os;
    write_locus_csv(os, l);
    const std::string s = os.str();
    EXPECT_EQ(s.rfind("omega,re,im,closure\n", 0), 0u);
    EXPECT_NE(s.find("\n0,0.5,0,0\n"), std::string::npos);
    EXPECT_NE(s.find("\ninf,0,0,1\n"), std::string::npos);
    EXPECT_EQ(s.find('\r'), std::string::npos);
}

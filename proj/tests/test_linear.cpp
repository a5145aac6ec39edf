#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "bankbench/linear.hpp"
#include "bankbench/rng.hpp"

using namespace bankbench;

namespace {

struct Problem {
    std::vector<SparseVector> xs;
    std::vector<int> ys;
};

Problem random_problem(std::size_t n, std::size_t dim, std::uint64_t seed) {
    Rng rng(seed);
    Problem p;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::pair<std::uint32_t, double>> e;
        for (std::uint32_t f = 0; f < dim; ++f) {
            if (rng.bernoulli(0.4)) e.emplace_back(f, rng.uniform(0.0, 2.0));
        }
        p.xs.push_back(SparseVector::from_pairs(e, dim));
        p.ys.push_back(i % 3 == 0 ? 1 : 0);
    }
    return p;
}

// direct evaluation of the objective, independent of the library
double objective(const std::vector<std::array<double, 2>>& x, const std::vector<int>& y, double w0, double w1,
                 double b, double C) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double z = w0 * x[i][0] + w1 * x[i][1] + b;
        s += y[i] ? std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    }
    const double n = static_cast<double>(x.size());
    return s / n + (w0 * w0 + w1 * w1) / (2.0 * C * n);
}

}  // namespace

TEST(Logreg, ZeroModelGivesHalf) {
    LogisticModel m{{0.0, 0.0, 0.0}, 0.0, 1.0};
    EXPECT_EQ(predict_proba(m, SparseVector::from_pairs({{1, 3.0}}, 3)), 0.5);
    EXPECT_THROW(predict_proba(m, SparseVector::from_pairs({{1, 3.0}}, 4)), std::invalid_argument);
}

TEST(Logreg, Saturation) {
    LogisticModel m{{1.0}, 0.0, 1.0};
    const double p = predict_proba(m, SparseVector::from_pairs({{0, 50.0}}, 1));
    EXPECT_TRUE(std::isfinite(p));
    EXPECT_GE(p, 1.0 - 1e-20);
    EXPECT_LE(p, 1.0);
    // the tail itself is representable: 1 - sigma(50) = sigma(-50)
    EXPECT_LT(sigmoid(-50.0), 1e-20);
    EXPECT_GT(sigmoid(-50.0), 0.0);
    EXPECT_EQ(sigmoid(-1000.0), 0.0);
    EXPECT_EQ(sigmoid(1000.0), 1.0);
    EXPECT_TRUE(std::isfinite(softplus(1000.0)));
    EXPECT_NEAR(softplus(1000.0), 1000.0, 1e-9);
}

TEST(Logreg, PredictMatchesDirectFormula) {
    Rng rng(3);
    for (int t = 0; t < 100; ++t) {
        LogisticModel m;
        m.bias = rng.uniform(-2, 2);
        std::vector<std::pair<std::uint32_t, double>> e;
        double z = m.bias;
        for (std::uint32_t f = 0; f < 8; ++f) {
            m.weights.push_back(rng.uniform(-1, 1));
            if (rng.bernoulli(0.5)) {
                e.emplace_back(f, rng.uniform(-3, 3));
                z += m.weights[f] * e.back().second;
            }
        }
        EXPECT_NEAR(predict_proba(m, SparseVector::from_pairs(e, 8)), 1.0 / (1.0 + std::exp(-z)), 1e-12);
    }
}

TEST(Logreg, GradientMatchesFiniteDifferences) {
    const auto p = random_problem(40, 6, 17);
    Rng rng(8);
    for (double C : {0.1, 1.0, 100.0}) {
        LogisticModel m;
        m.C = C;
        m.bias = rng.uniform(-1, 1);
        for (int f = 0; f < 6; ++f) m.weights.push_back(rng.uniform(-1, 1));
        const auto g = gradient(m, p.xs, p.ys);
        EXPECT_DOUBLE_EQ(g.loss, logreg_loss(m, p.xs, p.ys));
        const double h = 1e-6;
        auto check = [&](double& param, double analytic) {
            const double orig = param;
            param = orig + h;
            const double up = logreg_loss(m, p.xs, p.ys);
            param = orig - h;
            const double down = logreg_loss(m, p.xs, p.ys);
            param = orig;
            const double fd = (up - down) / (2 * h);
            EXPECT_LE(std::abs(fd - analytic) / std::max(1e-3, std::abs(fd)), 1e-6) << C;
        };
        for (int f = 0; f < 6; ++f) check(m.weights[f], g.weights[f]);
        check(m.bias, g.bias);
    }
}

TEST(Logreg, InfiniteCIsPlainBce) {
    const auto p = random_problem(20, 4, 2);
    LogisticModel m{{0.3, -0.2, 0.5, 1.0}, 0.1, std::numeric_limits<double>::infinity()};
    const auto g = gradient(m, p.xs, p.ys);
    std::vector<double> expected(4, 0.0);
    double eb = 0.0;
    for (std::size_t i = 0; i < p.xs.size(); ++i) {
        const double r = predict_proba(m, p.xs[i]) - p.ys[i];
        for (std::size_t k = 0; k < p.xs[i].nnz(); ++k) expected[p.xs[i].indices[k]] += r * p.xs[i].values[k];
        eb += r;
    }
    for (int f = 0; f < 4; ++f) EXPECT_NEAR(g.weights[f], expected[f] / 20.0, 1e-14);
    EXPECT_NEAR(g.bias, eb / 20.0, 1e-14);
}

TEST(Logreg, SeparablePair) {
    const std::vector<SparseVector> xs{SparseVector::from_pairs({{0, 1.0}}, 2), SparseVector::from_pairs({{1, 1.0}}, 2)};
    const std::vector<int> ys{1, 0};
    LogregOptions o;
    o.C = 1e6;
    o.max_iter = 5000;
    const auto m = train_logreg(xs, ys, o);
    EXPECT_GT(predict_proba(m, xs[0]), 0.5);
    EXPECT_LT(predict_proba(m, xs[1]), 0.5);
    EXPECT_LT(logreg_loss(m, xs, ys), 0.01);
}

TEST(Logreg, MatchesGridOracle) {
    const std::vector<std::array<double, 2>> x{{1.0, 0.5}, {2.0, 0.0}, {0.0, 1.5}, {0.5, 2.0}, {1.5, 1.5}, {0.2, 0.1}};
    const std::vector<int> y{1, 1, 0, 0, 1, 0};
    const double C = 2.0;
    std::vector<SparseVector> xs;
    for (auto& r : x) xs.push_back(SparseVector::from_pairs({{0, r[0]}, {1, r[1]}}, 2));
    LogregOptions o;
    o.C = C;
    o.tol = 1e-10;
    o.max_iter = 10000;
    const auto m = train_logreg(xs, y, o);

    // exhaustive grid over (w0, w1, b), zooming in around the best cell
    double c0 = 0.0, c1 = 0.0, cb = 0.0, span = 8.0;
    const int steps = 40;
    for (int round = 0; round < 14; ++round) {
        double best = std::numeric_limits<double>::infinity();
        double b0 = c0, b1 = c1, bb = cb;
        for (int i = -steps; i <= steps; ++i) {
            for (int j = -steps; j <= steps; ++j) {
                for (int k = -steps; k <= steps; ++k) {
                    const double w0 = c0 + span * i / steps, w1 = c1 + span * j / steps, b = cb + span * k / steps;
                    const double v = objective(x, y, w0, w1, b, C);
                    if (v < best) {
                        best = v;
                        b0 = w0;
                        b1 = w1;
                        bb = b;
                    }
                }
            }
        }
        c0 = b0;
        c1 = b1;
        cb = bb;
        span /= 4.0;
    }
    EXPECT_NEAR(m.weights[0], c0, 1e-4);
    EXPECT_NEAR(m.weights[1], c1, 1e-4);
    EXPECT_NEAR(m.bias, cb, 1e-4);
}

TEST(Logreg, MonotoneDeterministicAndConverged) {
    const auto p = random_problem(200, 15, 5);
    LogregOptions o;
    LogregTrace t1, t2;
    const auto a = train_logreg(p.xs, p.ys, o, &t1);
    const auto b = train_logreg(p.xs, p.ys, o, &t2);
    EXPECT_EQ(a.weights, b.weights);
    EXPECT_EQ(a.bias, b.bias);
    EXPECT_TRUE(t1.converged);
    for (std::size_t i = 1; i < t1.losses.size(); ++i) EXPECT_LE(t1.losses[i], t1.losses[i - 1]);
    const auto g = gradient(a, p.xs, p.ys);
    double inf_norm = std::abs(g.bias);
    for (double v : g.weights) inf_norm = std::max(inf_norm, std::abs(v));
    EXPECT_LT(inf_norm, o.tol);
}

TEST(Logreg, LinearInInput) {
    LogisticModel m{{0.7, -1.3}, 0.4, 1.0};
    const auto x = SparseVector::from_pairs({{0, 1.5}, {1, 0.25}}, 2);
    const auto x2 = SparseVector::from_pairs({{0, 3.0}, {1, 0.5}}, 2);
    EXPECT_NEAR(x2.dot(m.weights), 2.0 * x.dot(m.weights), 1e-15);
}

TEST(Logreg, RejectsBadInput) {
    const std::vector<SparseVector> xs{SparseVector::from_pairs({{0, 1.0}}, 1), SparseVector::from_pairs({}, 1)};
    const std::vector<int> same{1, 1};
    EXPECT_THROW(train_logreg(xs, same, {}), std::invalid_argument);
    LogregOptions o;
    o.C = 0.0;
    const std::vector<int> ys{1, 0};
    EXPECT_THROW(train_logreg(xs, ys, o), std::invalid_argument);
}

TEST(Logreg, JsonRoundTrip) {
    LogisticModel m{{0.1, -2.5}, 0.3, std::numeric_limits<double>::infinity()};
    nlohmann::json j = m;
    const auto r = j.get<LogisticModel>();
    EXPECT_EQ(r.weights, m.weights);
    EXPECT_EQ(r.bias, m.bias);
    EXPECT_TRUE(std::isinf(r.C));
}

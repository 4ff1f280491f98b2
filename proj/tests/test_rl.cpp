#include <doctest.h>

#include <array>
#include <cmath>
#include <random>

#include "gaq/qnet.hpp"
#include "gaq/replay.hpp"
#include "support.hpp"

using namespace gaq;

namespace {

// Plain-loop MLP forward: relu(relu(x W1ᵀ + b1) W2ᵀ + b2) W3ᵀ + b3.
std::vector<double> oracle_forward(Mlp& mlp, std::span<const double> x) {
    auto named = mlp.parameters("");
    auto layer = [](const Tensor2& w, const Tensor2& b, const std::vector<double>& in, bool relu) {
        std::vector<double> out(w.rows());
        for (std::size_t r = 0; r < w.rows(); ++r) {
            double s = b[r];
            for (std::size_t c = 0; c < w.cols(); ++c) {
                s += w(r, c) * in[c];
            }
            out[r] = relu ? std::max(0.0, s) : s;
        }
        return out;
    };
    std::vector<double> h(x.begin(), x.end());
    h = layer(named[0].second->value, named[1].second->value, h, true);
    h = layer(named[2].second->value, named[3].second->value, h, true);
    return layer(named[4].second->value, named[5].second->value, h, false);
}

Transition dummy(double reward) {
    Transition t;
    t.reward = reward;
    return t;
}

}  // namespace

TEST_CASE("q-network forward") {
    Rng init(1);
    Mlp mlp(8, 32, kActionCount, init);
    std::mt19937_64 gen(1);
    const Tensor2 x = test::random_tensor(5, 8, gen);
    const Tensor2 q = mlp.evaluate(x);
    CHECK(q.rows() == 5);
    CHECK(q.cols() == 16);
    CHECK(q == mlp.evaluate(x));
    for (std::size_t i = 0; i < 5; ++i) {
        const auto expected = oracle_forward(mlp, x.row(i));
        for (std::size_t a = 0; a < 16; ++a) {
            CHECK(std::abs(q(i, a) - expected[a]) < 1e-13);
        }
    }
    CHECK_THROWS_AS(mlp.evaluate(Tensor2(1, 7)), ContractError);

    for (auto& [_, p] : mlp.parameters("")) {
        p->value.fill(0.0);
    }
    const Tensor2 zero = mlp.evaluate(x);
    for (double v : zero.values()) {
        CHECK(v == 0.0);
    }
}

TEST_CASE("q-network gradients match central differences") {
    std::mt19937_64 gen(2);
    for (int seed = 0; seed < 100; ++seed) {
        Rng init(static_cast<std::uint64_t>(seed));
        const std::size_t in = 1 + static_cast<std::size_t>(seed % 16);
        const std::size_t hidden = 1 + static_cast<std::size_t>((seed * 7) % 16);
        Mlp mlp(in, hidden, 16, init);
        for (auto& [_, p] : mlp.parameters("")) {
            if (p->value.rows() == 1) {
                p->value = test::random_tensor(1, p->value.cols(), gen, 0.5);
            }
        }
        const Tensor2 x = test::random_tensor(6, in, gen);
        std::vector<std::uint32_t> actions(6);
        for (auto& a : actions) {
            a = static_cast<std::uint32_t>(gen() % 16);
        }
        const Tensor2 y = test::random_tensor(6, 1, gen, 3.0);
        const Tensor2 w = test::random_tensor(6, 1, gen);
        Tensor2 weights(6, 1);
        for (std::size_t k = 0; k < 6; ++k) {
            weights[k] = 0.2 + std::abs(w[k]);
        }
        const auto check = test::check_gradients(mlp.parameters("q."), [&](Tape& t) {
            return t.squared_error(t.pick(mlp.forward(t, t.constant(x)), actions), y, weights);
        });
        INFO("seed " << seed << " worst " << check.worst);
        CHECK(check.max_rel < 1e-4);
    }
}

TEST_CASE("epsilon schedule") {
    const EpsilonSchedule eps{1.0, 1e-2, 5000};
    CHECK(eps(0) == 1.0);
    CHECK(eps(2500) == doctest::Approx(0.01).epsilon(1e-14));
    CHECK(eps(5000) == doctest::Approx(0.01).epsilon(1e-14));
    CHECK(eps(1250) == doctest::Approx(0.505));
    double prev = 2.0;
    for (std::int64_t t = 0; t <= 6000; ++t) {
        const double e = eps(t);
        CHECK(e <= prev);
        CHECK(e >= 0.01 - 1e-15);
        CHECK(e <= 1.0);
        prev = e;
    }
}

TEST_CASE("select_action: greedy, ties and shift invariance") {
    Rng rng(3);
    const std::vector<double> q{0.1, 2.0, -1.0, 2.0};
    CHECK(select_action(q, 0.0, rng) == 1);
    CHECK(argmax(q) == 1);
    std::mt19937_64 gen(3);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> v(16);
        for (double& x : v) {
            x = std::uniform_real_distribution<double>(-5, 5)(gen);
        }
        const std::size_t a = select_action(v, 0.0, rng);
        for (double& x : v) {
            x += 3.0;
        }
        CHECK(select_action(v, 0.0, rng) == a);
    }
}

TEST_CASE("select_action: epsilon 1 is uniform (chi-square, 1e5 draws)") {
    Rng rng(4);
    const std::vector<double> q(16, 0.0);
    std::array<int, 16> counts{};
    const int draws = 100000;
    for (int k = 0; k < draws; ++k) {
        ++counts[select_action(q, 1.0, rng)];
    }
    double chi2 = 0.0;
    const double expected = draws / 16.0;
    for (int c : counts) {
        chi2 += (c - expected) * (c - expected) / expected;
    }
    // 15 degrees of freedom, 0.999 quantile.
    CHECK(chi2 < 37.70);
}

TEST_CASE("td targets") {
    const std::vector<double> r{1.0, -2.0};
    const Tensor2 online = Tensor2::from_rows({{1, 5, 2}, {0, 0, 1}});
    const Tensor2 target = Tensor2::from_rows({{4, 0.5, 7}, {3, 3, 3}});
    CHECK(td_targets(r, online, target, 0.0, true) == r);
    CHECK(td_targets(r, online, Tensor2(2, 3), 0.9, true) == r);
    const auto dbl = td_targets(r, online, target, 0.9, true);
    CHECK(dbl[0] == doctest::Approx(1.0 + 0.9 * 0.5));
    CHECK(dbl[1] == doctest::Approx(-2.0 + 0.9 * 3.0));
    const auto plain = td_targets(r, online, target, 0.9, false);
    CHECK(plain[0] == doctest::Approx(1.0 + 0.9 * 7.0));
}

TEST_CASE("dqn loss hand cases") {
    Param w(Tensor2::from_rows({{1.0, 0.0}, {0.0, 1.0}}));
    Tape t;
    Var q = t.linear(t.constant(Tensor2::from_rows({{3.0, 4.0}})), t.param(w));
    Var picked = t.pick(q, {1});
    CHECK(t.value(t.squared_error(picked, Tensor2(1, 1, 4.0), Tensor2(1, 1, 1.0)))[0] == 0.0);
    Var loss = t.squared_error(picked, Tensor2(1, 1, 6.0), Tensor2(1, 1, 1.0));
    CHECK(t.value(loss)[0] == 4.0);

    Tape t2;
    Var q2 = t2.linear(t2.constant(Tensor2::from_rows({{3.0, 4.0}})), t2.param(w));
    t2.backward(t2.squared_error(t2.pick(q2, {1}), Tensor2(1, 1, 4.0), Tensor2(1, 1, 1.0)));
    for (double g : w.grad.values()) {
        CHECK(g == 0.0);
    }
}

TEST_CASE("adam matches a scalar reference") {
    Param p(Tensor2::from_rows({{0.5, -1.0}}));
    Adam adam(1e-3);
    double m[2] = {}, v[2] = {}, ref[2] = {0.5, -1.0};
    const double g[3][2] = {{0.3, -2.0}, {-0.1, 1.5}, {0.7, 0.0}};
    for (int step = 0; step < 3; ++step) {
        p.grad = Tensor2::from_rows({{g[step][0], g[step][1]}});
        Param* ps[] = {&p};
        adam.step(ps);
        for (int k = 0; k < 2; ++k) {
            m[k] = 0.9 * m[k] + 0.1 * g[step][k];
            v[k] = 0.999 * v[k] + 0.001 * g[step][k] * g[step][k];
            const double mh = m[k] / (1.0 - std::pow(0.9, step + 1));
            const double vh = v[k] / (1.0 - std::pow(0.999, step + 1));
            ref[k] -= 1e-3 * mh / (std::sqrt(vh) + 1e-8);
            CHECK(p.value[static_cast<std::size_t>(k)] == doctest::Approx(ref[k]).epsilon(1e-14));
        }
    }

    Param q(Tensor2::from_rows({{2.0}}));
    q.grad = Tensor2::from_rows({{5.0}});
    Adam frozen(0.0);
    Param* qs[] = {&q};
    frozen.step(qs);
    CHECK(q.value[0] == 2.0);
}

TEST_CASE("replay: empty, ring and max-priority insertion") {
    ReplayBuffer buf(3, 0.6, 0.4, 1e-3);
    Rng rng(5);
    CHECK_THROWS_AS(buf.sample(4, rng), std::logic_error);
    buf.push(dummy(0));
    CHECK(buf.priority(0) == 1.0);
    buf.push(dummy(1));
    const std::vector<std::size_t> slots{0};
    const std::vector<double> errs{-4.0};
    buf.update_priorities(slots, errs);
    CHECK(buf.priority(0) == doctest::Approx(4.001));
    buf.push(dummy(2));
    CHECK(buf.priority(2) == doctest::Approx(4.001));
    buf.push(dummy(3));
    CHECK(buf.size() == 3);
    CHECK(buf.at(0).reward == 3.0);
    CHECK(buf.priority(0) == doctest::Approx(4.001));
    double total = 0.0;
    for (std::size_t k = 0; k < buf.size(); ++k) {
        total += buf.probability(k);
    }
    CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("replay: proportional sampling frequencies") {
    const int draws = 100000;
    auto frequencies = [&](ReplayBuffer& buf, std::uint64_t seed) {
        Rng rng(seed);
        std::vector<double> counts(buf.size(), 0.0);
        for (int k = 0; k < draws / 100; ++k) {
            for (std::size_t s : buf.sample(100, rng).slots) {
                counts[s] += 1.0;
            }
        }
        for (double& c : counts) {
            c /= draws;
        }
        return counts;
    };
    auto chi_square = [&](const std::vector<double>& f, double p) {
        double chi2 = 0.0;
        for (double x : f) {
            chi2 += draws * (x - p) * (x - p) / p;
        }
        return chi2;
    };
    auto within = [&](double f, double p) {
        return std::abs(f - p) <= 3.0 * std::sqrt(p * (1.0 - p) / draws);
    };

    ReplayBuffer two(10, 1.0, 0.4, 1e-12);
    two.push(dummy(0));
    two.push(dummy(1));
    const std::vector<std::size_t> slots{0, 1};
    const std::vector<double> errs{1.0, 3.0};
    two.update_priorities(slots, errs);
    CHECK(two.probability(0) == doctest::Approx(0.25));
    const auto f = frequencies(two, 6);
    CHECK(within(f[0], 0.25));
    CHECK(within(f[1], 0.75));

    ReplayBuffer flat(10, 0.0, 0.4, 1e-3);
    for (int k = 0; k < 5; ++k) {
        flat.push(dummy(k));
    }
    const std::vector<std::size_t> s5{0, 1, 2, 3, 4};
    const std::vector<double> e5{0.1, 9.0, 3.0, 0.0, 50.0};
    flat.update_priorities(s5, e5);
    // Joint goodness of fit; 0.999 quantile of chi-square with 4 dof.
    CHECK(chi_square(frequencies(flat, 7), 0.2) < 18.47);

    ReplayBuffer equal(10, 0.6, 0.4, 1e-3);
    for (int k = 0; k < 4; ++k) {
        equal.push(dummy(k));
    }
    CHECK(chi_square(frequencies(equal, 8), 0.25) < 16.27);
}

TEST_CASE("replay: importance weights") {
    ReplayBuffer buf(10, 1.0, 0.5, 1e-12);
    buf.push(dummy(0));
    buf.push(dummy(1));
    const std::vector<std::size_t> slots{0, 1};
    const std::vector<double> errs{1.0, 3.0};
    buf.update_priorities(slots, errs);
    Rng rng(9);
    bool saw[2] = {false, false};
    for (int k = 0; k < 50; ++k) {
        const auto s = buf.sample(8, rng);
        double wmax = 0.0;
        for (std::size_t j = 0; j < s.slots.size(); ++j) {
            wmax = std::max(wmax, std::pow(2.0 * buf.probability(s.slots[j]), -0.5));
        }
        for (std::size_t j = 0; j < s.slots.size(); ++j) {
            saw[s.slots[j]] = true;
            const double expected = std::pow(2.0 * buf.probability(s.slots[j]), -0.5) / wmax;
            CHECK(s.weights[j] == doctest::Approx(expected));
            CHECK(s.weights[j] <= 1.0);
        }
    }
    CHECK((saw[0] && saw[1]));
}

TEST_CASE("sum tree") {
    SumTree tree(5);
    const double w[5] = {1.0, 0.0, 2.0, 3.0, 4.0};
    for (std::size_t k = 0; k < 5; ++k) {
        tree.set(k, w[k]);
    }
    CHECK(tree.total() == 10.0);
    CHECK(tree.find(0.5) == 0);
    CHECK(tree.find(1.5) == 2);
    CHECK(tree.find(3.5) == 3);
    CHECK(tree.find(9.99) == 4);
}

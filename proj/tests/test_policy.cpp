#include <doctest.h>

#include <cmath>

#include "seqtune/oracle.hpp"
#include "seqtune/policy.hpp"
#include "test_support.hpp"

using namespace seqtune;
using namespace seqtune::testing;

namespace {

TabularPolicy random_policy(const SequenceSpace& space, double sigma,
                            std::uint64_t seed) {
    return gaussian_logits_prior(space, sigma, seed);
}

}  // namespace

TEST_CASE("log_prob on degenerate and tiny spaces") {
    const SequenceSpace point = make_space({"a"}, 0);
    CHECK(TabularPolicy(point).log_prob(Sequence{}) == 0.0);

    // Equal logits over {a, EOS}: each step is a coin flip.
    const SequenceSpace unary = make_space({"a"}, 1);
    const TabularPolicy uniform(unary);
    CHECK(uniform.log_prob(Sequence{}) == doctest::Approx(std::log(0.5)).epsilon(1e-12));
    CHECK(uniform.log_prob(unary.parse("a")) ==
          doctest::Approx(std::log(0.5)).epsilon(1e-12));
}

TEST_CASE("induced distribution is normalized for arbitrary logits") {
    Rng rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        const int a = 1 + static_cast<int>(rng.next_u64() % 3);
        const Index len = static_cast<Index>(rng.next_u64() % 5);
        std::vector<std::string> alphabet;
        for (int i = 0; i < a; ++i) {
            alphabet.push_back(std::string(1, static_cast<char>('a' + i)));
        }
        const SequenceSpace space = make_space(alphabet, len);
        const TabularPolicy policy =
            random_policy(space, 2.0, rng.next_u64());
        double total = 0.0;
        space.for_each_sequence([&](Index, const Sequence& x) {
            total += std::exp(policy.log_prob(x));
        });
        CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(policy.distribution().sum() == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("each conditional row is a distribution") {
    Rng rng(51);
    const SequenceSpace space = default_space();
    for (int trial = 0; trial < 20; ++trial) {
        const TabularPolicy policy = random_policy(space, 3.0, rng.next_u64());
        const Mat cond = policy.conditional_probs();
        for (Index r = 0; r < cond.rows(); ++r) {
            CHECK(std::abs(cond.row(r).sum() - 1.0) < 1e-12);
            CHECK(cond.row(r).minCoeff() >= 0.0);
        }
    }
}

TEST_CASE("distribution agrees with per-sequence log_prob") {
    const SequenceSpace space = default_space();
    const TabularPolicy policy = random_policy(space, 1.5, 3);
    const Vec dist = policy.distribution();
    space.for_each_sequence([&](Index i, const Sequence& x) {
        CHECK(dist(i) == doctest::Approx(std::exp(policy.log_prob(x))).epsilon(1e-12));
    });
}

TEST_CASE("uniform conditionals on the unary space give a fair coin") {
    const TabularPolicy policy(make_space({"a"}, 1));
    const Vec dist = policy.distribution();
    CHECK(dist(0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(dist(1) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("one-point space has a one-point distribution") {
    const TabularPolicy policy(make_space({"a"}, 0));
    const Vec dist = policy.distribution();
    REQUIRE(dist.size() == 1);
    CHECK(dist(0) == 1.0);
}

TEST_CASE("sampling: near-deterministic conditionals always give the argmax") {
    const SequenceSpace space = default_space();
    Mat logits = Mat::Zero(space.num_prefixes(), space.vocab().size());
    logits.col(0).setConstant(50.0);  // push everything toward "aaa"
    const TabularPolicy policy(space, logits);
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
        CHECK(space.render(policy.sample(rng)) == "aaa");
    }
}

TEST_CASE("sampling frequencies converge to the distribution") {
    const SequenceSpace space = make_space({"a"}, 1);
    const TabularPolicy policy(space);  // (0.5, 0.5)
    const int n = 100000;
    Rng rng(11);
    int empty_count = 0;
    for (int i = 0; i < n; ++i) {
        if (policy.sample(rng).empty()) ++empty_count;
    }
    const double freq = static_cast<double>(empty_count) / n;
    const double bound = 4.0 * std::sqrt(0.25 / n);
    CHECK(std::abs(freq - 0.5) < bound);
}

TEST_CASE("same seed gives an identical sample stream") {
    const SequenceSpace space = default_space();
    const TabularPolicy policy = random_policy(space, 1.0, 9);
    Rng a(123), b(123);
    for (int i = 0; i < 200; ++i) {
        CHECK(policy.sample(a) == policy.sample(b));
    }
}

TEST_CASE("grad_log_prob on an equal-logit row") {
    const SequenceSpace space = make_space({"a"}, 1);
    const TabularPolicy policy(space);
    const Mat grad = policy.grad_log_prob(space.parse("a"));
    // softmax is (0.5, 0.5); choosing "a" gives (1 - 0.5, -0.5).
    CHECK(grad(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(grad(0, 1) == doctest::Approx(-0.5).epsilon(1e-14));
}

TEST_CASE("score identity: expected grad_log_prob vanishes") {
    const SequenceSpace space = default_space();
    const TabularPolicy policy = random_policy(space, 1.5, 21);
    const Vec dist = policy.distribution();
    Mat expectation = Mat::Zero(policy.num_rows(), policy.num_tokens());
    space.for_each_sequence([&](Index i, const Sequence& x) {
        expectation += dist(i) * policy.grad_log_prob(x);
    });
    CHECK(expectation.cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("grad_log_prob matches central finite differences") {
    Rng rng(31);
    const SequenceSpace space = default_space();
    for (int trial = 0; trial < 100; ++trial) {
        const TabularPolicy policy = random_policy(space, 1.0, rng.next_u64());
        const Index i = static_cast<Index>(rng.next_u64() % space.size());
        const Sequence x = space.sequence_at(i);
        const Mat analytic = policy.grad_log_prob(x);
        const Mat numeric = finite_difference(
            [&](const TabularPolicy& p) { return p.log_prob(x); }, policy);
        CHECK(relative_error(analytic, numeric) < 1e-4);
    }
}

TEST_CASE("from_distribution: delta target") {
    const SequenceSpace space = default_space();
    Vec p = Vec::Zero(space.size());
    p(4) = 1.0;
    const TabularPolicy policy = TabularPolicy::from_distribution(space, p);
    CHECK(policy.distribution()(4) >= 1.0 - 1e-10);
}

TEST_CASE("from_distribution: strictly positive targets are recovered") {
    const SequenceSpace space = default_space();
    Rng rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        Vec p(space.size());
        for (Index i = 0; i < p.size(); ++i) {
            p(i) = -std::log(rng.uniform_pos());
        }
        p /= p.sum();
        const Vec q = TabularPolicy::from_distribution(space, p).distribution();
        CHECK((p - q).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("from_distribution round-trips the tilted posterior") {
    const SequenceSpace space = default_space();
    const TabularPolicy prior = random_policy(space, 1.0, 7);
    const Vec reward_values =
        Reward::contains_substring("ab", 1.0).values(space);
    const TargetDistribution target =
        gibbs_posterior(space, prior.log_distribution(), reward_values, 1.0);
    const Vec q =
        TabularPolicy::from_distribution(space, target.probs).distribution();
    CHECK(kl_divergence(target.probs, q) < 1e-12);
}

TEST_CASE("from_distribution: uniform target matches counting ratios") {
    const SequenceSpace space = default_space();
    const Vec p = Vec::Constant(space.size(), 1.0 / static_cast<double>(space.size()));
    const TabularPolicy policy = TabularPolicy::from_distribution(space, p);
    const Mat cond = policy.conditional_probs();
    // Root: 15 descendants; EOS takes 1/15, each child subtree 7/15.
    CHECK(cond(0, space.vocab().eos_index) == doctest::Approx(1.0 / 15).epsilon(1e-12));
    CHECK(cond(0, 0) == doctest::Approx(7.0 / 15).epsilon(1e-12));
    // A length-2 prefix: 3 descendants.
    const Index row = space.index_of(space.parse("ab"));
    CHECK(cond(row, space.vocab().eos_index) ==
          doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("from_distribution rejects bad vectors") {
    const SequenceSpace space = default_space();
    Vec negative = Vec::Constant(space.size(), 1.0 / static_cast<double>(space.size()));
    negative(0) = -negative(0);
    CHECK_THROWS(TabularPolicy::from_distribution(space, negative));
    const Vec unnormalized = Vec::Constant(space.size(), 1.0);
    CHECK_THROWS(TabularPolicy::from_distribution(space, unnormalized));
}

TEST_CASE("priors: uniform logits give the counting measure of equal conditionals") {
    const SequenceSpace space = make_space({"a", "b"}, 2);
    const Vec dist = uniform_logits_prior(space).distribution();
    CHECK(dist(0) == doctest::Approx(1.0 / 3).epsilon(1e-12));       // ""
    CHECK(dist(1) == doctest::Approx(1.0 / 9).epsilon(1e-12));       // "a"
    CHECK(dist(3) == doctest::Approx(1.0 / 9).epsilon(1e-12));       // "aa"
}

TEST_CASE("priors: gaussian scheme is seed-deterministic, sigma 0 is uniform") {
    const SequenceSpace space = default_space();
    const TabularPolicy a = gaussian_logits_prior(space, 1.0, 42);
    const TabularPolicy b = gaussian_logits_prior(space, 1.0, 42);
    CHECK(a.logits() == b.logits());
    const TabularPolicy zero = gaussian_logits_prior(space, 0.0, 42);
    CHECK(zero.logits() == uniform_logits_prior(space).logits());
}

TEST_CASE("policies reject non-finite or misshapen logits") {
    const SequenceSpace space = default_space();
    Mat bad = Mat::Zero(space.num_prefixes(), space.vocab().size());
    bad(0, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS(TabularPolicy(space, bad));
    CHECK_THROWS(TabularPolicy(space, Mat::Zero(2, 2)));
}

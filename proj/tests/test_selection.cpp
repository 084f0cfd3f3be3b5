#include <doctest.h>

#include "cctlab/selection.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

using namespace cctlab;

namespace {

Eigen::VectorXd uniform(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (auto& x : v) x = u(rng);
    return v;
}

Eigen::VectorXd shuffled(const Eigen::VectorXd& v, std::uint64_t seed) {
    std::vector<double> tmp(v.begin(), v.end());
    std::mt19937_64 rng(seed);
    std::shuffle(tmp.begin(), tmp.end(), rng);
    return Eigen::Map<Eigen::VectorXd>(tmp.data(), v.size());
}

// Target driven by a, b and c; d is a near copy of a, e is noise.
FeatureTable synthetic_table(std::size_t n) {
    const auto a = uniform(n, 1);
    const auto b = uniform(n, 2);
    const auto c = uniform(n, 3);
    const auto noise = uniform(n, 4);
    FeatureTable t;
    t.names = {"a", "b", "c", "d", "e"};
    t.x.resize(static_cast<Eigen::Index>(n), 5);
    t.x.col(0) = a;
    t.x.col(1) = b;
    t.x.col(2) = c;
    t.x.col(3) = a + 0.05 * noise;
    t.x.col(4) = uniform(n, 5);
    t.y = (2.0 * a.array()).exp().matrix() + 1.5 * b + 3.0 * c;
    return t;
}

}  // namespace

TEST_CASE("MIC of a strictly monotone relation is one") {
    const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(200, 0.0, 5.0);
    const Eigen::VectorXd y = x.array().exp() + x.array();
    CHECK(mic(x, y) >= 0.99);
    CHECK(mic(x, -y) >= 0.99);
}

TEST_CASE("MIC of independent samples stays small") {
    const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(500, 0.0, 1.0);
    // Null distribution over several fixed permutations.
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) worst = std::max(worst, mic(x, shuffled(x, seed)));
    MESSAGE("largest null MIC " << worst);
    CHECK(worst <= 0.25);
}

TEST_CASE("MIC degenerate inputs") {
    const auto x = uniform(100, 9);
    CHECK(mic(x, Eigen::VectorXd::Constant(100, 3.0)) == 0.0);
    CHECK_THROWS_AS(mic(x, uniform(99, 1)), std::invalid_argument);
    CHECK_THROWS_AS(mic(uniform(10, 1), uniform(10, 2)), std::invalid_argument);
    MicConfig bad;
    bad.exponent = 1.5;
    CHECK_THROWS_AS(mic(x, x, bad), std::invalid_argument);
}

TEST_CASE("MIC and SCC depend only on order") {
    const auto x = uniform(300, 11);
    const Eigen::VectorXd y = x.array().square() + 0.3 * uniform(300, 12).array();
    const Eigen::VectorXd fx = x.array().exp();
    CHECK(mic(fx, y) == mic(x, y));
    CHECK(*scc(fx, y) == *scc(x, y));
    const Eigen::VectorXd gy = 3.0 * y.array() + 7.0;
    CHECK(mic(x, gy) == mic(x, y));
    CHECK(*scc(x, gy) == *scc(x, y));
}

TEST_CASE("MIC and SCC symmetry") {
    const auto x = uniform(250, 21);
    const Eigen::VectorXd y = x.array().sin() + 0.5 * uniform(250, 22).array();
    CHECK(mic(x, y) == mic(y, x));
    CHECK(*scc(x, y) == *scc(y, x));
    CHECK(*scc(x, -y) == doctest::Approx(-*scc(x, y)).epsilon(1e-12));
}

TEST_CASE("SCC values") {
    const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(5, 1.0, 5.0);
    SUBCASE("hand example with a tie") {
        Eigen::VectorXd y(5);
        y << 5, 6, 7, 8, 7;
        // Ranks of y: 1, 2, 3.5, 5, 3.5 -> sum d^2 = 0 + 0 + 0.25 + 1 + 2.25 = 3.5.
        CHECK(std::abs(*scc(x, y) - (1.0 - 6.0 * 3.5 / (5.0 * 24.0))) < 1e-12);
        CHECK(std::abs(*scc(x, y) - 0.825) < 1e-12);
    }
    SUBCASE("perfect orderings") {
        CHECK(*scc(x, x.array().cube().matrix()) == 1.0);
        CHECK(*scc(x, -x) == -1.0);
    }
    SUBCASE("no variance is reported distinctly") {
        CHECK_FALSE(scc(x, Eigen::VectorXd::Constant(5, 2.0)).has_value());
    }
    SUBCASE("average ranks") {
        Eigen::VectorXd v(6);
        v << 3, 1, 3, 2, 3, 0;
        Eigen::VectorXd expected(6);
        expected << 5, 2, 5, 3, 5, 1;
        CHECK(average_ranks(v) == expected);
    }
}

TEST_CASE("selection keeps uncorrelated informative features") {
    auto t = synthetic_table(400);
    t = t.select_columns({"a", "b", "c"});
    const auto report = select_features(t);
    CHECK(report.kept.size() == 3);
    CHECK(report.dropped.empty());
    for (std::size_t i = 1; i < report.mic_ranking.size(); ++i) {
        CHECK(report.mic_ranking[i - 1].value >= report.mic_ranking[i].value);
    }
}

TEST_CASE("selection drops noise and redundancy") {
    const auto t = synthetic_table(400);
    const auto report = select_features(t);
    auto reason = [&](const std::string& f) -> std::string {
        for (const auto& d : report.dropped) {
            if (d.feature == f) return d.reason;
        }
        return "kept";
    };
    CHECK(reason("e") == "low-mic");
    // Exactly one of the near-duplicate pair survives.
    const bool a_kept = reason("a") == "kept";
    const bool d_kept = reason("d") == "kept";
    CHECK(a_kept != d_kept);
    CHECK(reason(a_kept ? "d" : "a") == std::string("redundant-with ") + (a_kept ? "a" : "d"));
    CHECK(report.kept.size() + report.dropped.size() == t.names.size());

    // Kept set is pairwise below the threshold.
    for (const auto& f : report.kept) {
        for (const auto& g : report.kept) {
            if (f == g) continue;
            const auto i = *t.find(f);
            const auto j = *t.find(g);
            CHECK(std::abs(report.scc_matrix(i, j)) < 0.5);
        }
    }
}

TEST_CASE("exact duplicate column loses exactly one copy") {
    auto t = synthetic_table(300);
    t.names.push_back("b_copy");
    t.x.conservativeResize(Eigen::NoChange, t.cols() + 1);
    t.x.col(t.cols() - 1) = t.x.col(1);
    const auto report = select_features(t);
    const auto kept_b = std::count(report.kept.begin(), report.kept.end(), "b");
    const auto kept_copy = std::count(report.kept.begin(), report.kept.end(), "b_copy");
    CHECK(kept_b + kept_copy == 1);
    // Equal MIC: the tie goes to the earlier column.
    CHECK(kept_b == 1);
    bool found = false;
    for (const auto& d : report.dropped) found = found || (d.feature == "b_copy" && d.reason == "redundant-with b");
    CHECK(found);
}

TEST_CASE("row order does not change the report") {
    const auto t = synthetic_table(350);
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(t.rows()));
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(77);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto a = select_features(t);
    const auto b = select_features(t.select_rows(perm));
    CHECK(report_json(a).dump() == report_json(b).dump());
}

TEST_CASE("selection is idempotent on its own output") {
    const auto t = synthetic_table(400);
    const auto first = select_features(t);
    const auto reduced = apply_selection(t, first);
    const auto second = select_features(reduced);
    auto sorted = [](std::vector<std::string> v) {
        std::sort(v.begin(), v.end());
        return v;
    };
    CHECK(sorted(second.kept) == sorted(first.kept));
    CHECK(second.dropped.empty());
}

TEST_CASE("nothing informative is an error carrying the report") {
    FeatureTable t;
    t.names = {"n1", "n2"};
    t.x.resize(300, 2);
    t.x.col(0) = uniform(300, 31);
    t.x.col(1) = uniform(300, 32);
    t.y = uniform(300, 33);
    try {
        select_features(t);
        FAIL("expected SelectionError");
    } catch (const SelectionError& e) {
        CHECK(e.report().dropped.size() == 2);
        CHECK(e.report().kept.empty());
    }
}

TEST_CASE("report serialization") {
    auto t = synthetic_table(200);
    t.names.push_back("flat");
    t.x.conservativeResize(Eigen::NoChange, t.cols() + 1);
    t.x.col(t.cols() - 1).setConstant(1.0);
    const auto report = select_features(t);
    const auto j = report_json(report);
    CHECK(j["kept"].size() == report.kept.size());
    CHECK(j["scc_matrix"].size() == 6);
    CHECK(j["scc_matrix"][5][0].is_null());
    std::ostringstream os;
    write_scc_csv(os, report);
    std::istringstream is(os.str());
    std::string header;
    std::getline(is, header);
    CHECK(header == "feature,a,b,c,d,e,flat");
}

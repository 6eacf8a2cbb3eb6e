#include <gtest/gtest.h>

#include <sstream>

#include "peierls/config.hpp"
#include "peierls/experiments.hpp"

using namespace peierls;

namespace {

const ContourCatalog& catalog12() {
    static const ContourCatalog cat(12);
    return cat;
}

}  // namespace

TEST(Experiments, GibbsSmallRunIsDeterministic) {
    GibbsSpec s;
    s.width = 2;
    s.height = 2;
    s.replicas = 2000;
    s.tolerance = 0.1;
    const auto a = gibbs_experiment(catalog12(), s);
    const auto b = gibbs_experiment(catalog12(), s);
    EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
    EXPECT_TRUE(a.passed()) << a.to_json().dump(1);
    s.seed = 2;
    EXPECT_NE(gibbs_experiment(catalog12(), s).to_json().dump(), a.to_json().dump());
}

TEST(Experiments, DensityRecordShape) {
    DensitySpec s;
    s.betas = {1.5};
    s.max_class_length = 6;
    s.replicas = 500;
    const auto r = density_check(catalog12(), s);
    const auto* t = r.find_table("occupation");
    ASSERT_NE(t, nullptr);
    EXPECT_EQ(t->rows.size(), 3u);  // one class of length 4, two of length 6
    EXPECT_EQ(r.verdicts.size(), 3u);
}

TEST(Experiments, RegimeGuard) {
    DensitySpec s;
    s.betas = {0.9};
    s.replicas = 10;
    EXPECT_THROW(density_check(catalog12(), s), RegimeError);
    EXPECT_THROW(working_report(catalog12(), 0.9), RegimeError);
    EXPECT_TRUE(working_report(catalog12(), 1.5).certified);
    EXPECT_FALSE(working_report(catalog12(), 1.0).certified);
}

TEST(Experiments, PoissonScaleGuardAndSide) {
    EXPECT_EQ(scaled_side(1.0, 20.0), 19);
    EXPECT_EQ(scaled_side(1.0, 0.4), 0);
    PoissonSpec s;
    s.betas = {4.5};  // side 8102, far above the translate cap
    s.replicas = 10;
    EXPECT_THROW(poisson_experiment(catalog12(), s), ScaleTooLarge);
}

TEST(Experiments, PoissonPerBetaReplicas) {
    PoissonSpec a;
    a.betas = {1.5};
    a.replicas = 300;
    a.bootstrap = 5;
    PoissonSpec b = a;
    b.replicas = 7;
    b.replicas_per_beta = {300};
    EXPECT_EQ(poisson_experiment(catalog12(), a).tables.front().rows,
              poisson_experiment(catalog12(), b).tables.front().rows);
    b.replicas_per_beta = {300, 300};
    EXPECT_THROW(poisson_experiment(catalog12(), b), std::invalid_argument);
}

TEST(Experiments, CltGuard) {
    CltSpec s;
    s.cls = -1;
    EXPECT_THROW(clt_experiment(catalog12(), s), DegenerateVariance);
}

TEST(Experiments, ClanTailsSmallRun) {
    ClanTailSpec s;
    s.betas = {2.0};
    s.replicas = 500;
    const auto r = clan_tail_experiment(catalog12(), s);
    EXPECT_EQ(r.verdicts.size(), 4u);
    EXPECT_TRUE(r.passed());
}

TEST(Experiments, CsvRoundTripsDoubles) {
    Table t{"x", {"a", "b"}, {{0.1, 1.0 / 3.0}}};
    std::ostringstream os;
    write_csv(os, t);
    std::istringstream is(os.str());
    std::string header, a, b;
    std::getline(is, header);
    std::getline(is, a, ',');
    std::getline(is, b);
    EXPECT_EQ(header, "a,b");
    EXPECT_EQ(std::stod(a), 0.1);
    EXPECT_EQ(std::stod(b), 1.0 / 3.0);
}

TEST(Config, SpecsTakeTopLevelAndParams) {
    auto c = default_config();
    c["beta"] = 2.0;
    c["replicas"] = 77;
    c["params"] = {{"betas", {1.5, 2.5}}, {"j", 6}};
    const auto p = poisson_spec(c);
    EXPECT_EQ(p.replicas, 77);
    EXPECT_EQ(p.j, 6);
    EXPECT_EQ(p.betas, (std::vector<double>{1.5, 2.5}));
    EXPECT_EQ(gibbs_spec(c).beta, 2.0);
    c["params"] = {{"corner", {1}}};
    EXPECT_THROW(gibbs_spec(c), ConfigError);
}

TEST(Config, OutputRootFromEnvironment) {
    auto c = default_config();
    c["output"] = "abc";
    setenv(kOutputRootEnv, "/tmp/root", 1);
    EXPECT_EQ(output_directory(c), std::filesystem::path("/tmp/root/abc"));
    unsetenv(kOutputRootEnv);
    EXPECT_EQ(output_directory(c), std::filesystem::path("abc"));
    c["output"] = "/abs";
    EXPECT_EQ(output_directory(c), std::filesystem::path("/abs"));
}

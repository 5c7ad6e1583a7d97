#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "levytame/io.hpp"
#include "levytame/levytame.hpp"

using namespace levytame;

namespace {

StudyConfig small_study(Model m, std::vector<std::size_t> levels, std::size_t ref, std::size_t paths) {
    StudyConfig c;
    c.model = std::move(m);
    c.levels = std::move(levels);
    c.reference_n = ref;
    c.num_paths = paths;
    return c;
}

void expect_jensen(const ErrorReport& rep) {
    for (std::size_t i = 0; i < rep.rows.size(); ++i)
        for (std::size_t j = 0; j < rep.rows.size(); ++j) {
            const auto& a = rep.rows[i];
            const auto& b = rep.rows[j];
            if (a.n == b.n && a.p < b.p && a.usable && b.usable) EXPECT_LE(a.error, b.error * (1.0 + 1e-12)) << a.n << " " << a.p;
        }
}

}  // namespace

TEST(Study, OdeModeFirstOrder) {
    StudyConfig c = small_study(make_preset("ode-decay"), {16, 32, 64, 128, 256}, 4096, 4);
    c.variants = {SchemeVariant::classical};
    c.reference_variant = SchemeVariant::classical;
    const ErrorReport rep = strong_error_study(c).front();
    ASSERT_EQ(rep.rows.size(), 5u * 4u);
    for (const auto& s : rep.slopes) {
        ASSERT_TRUE(s.fit);
        EXPECT_GE(s.fit->slope, 0.9);
        EXPECT_LE(s.fit->slope, 1.1);
    }
    expect_jensen(rep);
}

TEST(Study, OdeModeAgainstExactSolution) {
    const Model m = make_preset("ode-decay");
    for (std::size_t n : {16u, 64u, 256u, 1024u}) {
        const Trajectory t = simulate_path(m, SchemeConfig{SchemeVariant::classical, n}, draw_path(1, 0, m, n, {n}));
        const double dt = 1.0 / static_cast<double>(n);
        EXPECT_LT(std::abs(t.terminal()[0] - std::exp(-1.0)), 2.0 * dt);
        EXPECT_DOUBLE_EQ(t.terminal()[0], std::pow(1.0 - dt, static_cast<double>(n)));
    }
}

TEST(Study, OdeModeTamingBiasIsHalfOrder) {
    // with zeta = 0 the denominator is the constant 1 + n^{-1/2}, so the tamed scheme solves
    // x' = -x / (1 + n^{-1/2}) and its error against e^{-1} decays like n^{-1/2}
    const Model m = make_preset("ode-decay");
    std::vector<std::pair<double, double>> pts;
    for (std::size_t n : {256u, 1024u, 4096u, 16384u}) {
        const Trajectory t = simulate_path(m, SchemeConfig{SchemeVariant::randomized_tamed, n}, draw_path(1, 0, m, n, {n}));
        pts.emplace_back(1.0 / static_cast<double>(n), std::abs(t.terminal()[0] - std::exp(-1.0)));
    }
    EXPECT_NEAR(fit_rate(pts).slope, 0.5, 0.05);
}

TEST(Study, LevelEqualToReferenceIsExact) {
    StudyConfig c = small_study(double_well_preset(DoubleWellParams{}), {64, 256}, 256, 20);
    const ErrorReport rep = strong_error_study(c).front();
    for (const auto& r : rep.rows) {
        if (r.n == 256) EXPECT_EQ(r.error, 0.0);
        else EXPECT_GT(r.error, 0.0);
    }
}

TEST(Study, CouplingIsDeterministicWithoutNoise) {
    Model m = make_preset("cubic", ParamMap(std::map<std::string, std::string>{{"x0", "2"}}));
    StudyConfig c = small_study(m, {8, 16, 32}, 512, 40);
    const ErrorReport rep = strong_error_study(c).front();
    for (const auto& r : rep.rows) {
        EXPECT_GT(r.error, 0.0);
        EXPECT_LE(r.std_error, 1e-12 * r.error);
    }
    // identical per-path errors make every p-norm equal
    for (std::size_t i = 0; i + 1 < rep.rows.size(); ++i)
        if (rep.rows[i].n == rep.rows[i + 1].n) EXPECT_NEAR(rep.rows[i].error, rep.rows[i + 1].error, 1e-13);
}

TEST(Study, DoubleWellLadderProperties) {
    StudyConfig c = small_study(double_well_preset(DoubleWellParams{}), {16, 32, 64, 128}, 1024, 200);
    c.variants = {SchemeVariant::randomized_tamed, SchemeVariant::tamed};
    const auto reports = strong_error_study(c);
    ASSERT_EQ(reports.size(), 2u);
    for (const auto& rep : reports) {
        expect_jensen(rep);
        EXPECT_EQ(rep.rows.size(), 16u);
        for (const auto& r : rep.rows) {
            EXPECT_EQ(r.diverged_fraction, 0.0);
            EXPECT_GT(r.error, 0.0);
            EXPECT_TRUE(r.usable);
        }
        // error at 2n stays below error at n plus three combined standard errors
        for (std::size_t i = 0; i < rep.rows.size(); ++i)
            for (std::size_t j = 0; j < rep.rows.size(); ++j)
                if (rep.rows[j].n == 2 * rep.rows[i].n && rep.rows[j].p == rep.rows[i].p)
                    EXPECT_LE(rep.rows[j].error, rep.rows[i].error + 3.0 * std::hypot(rep.rows[i].std_error, rep.rows[j].std_error));
    }
}

TEST(Study, MaxOverGridDominatesTerminal) {
    StudyConfig c = small_study(double_well_preset(DoubleWellParams{}), {16, 32, 64}, 256, 100);
    const ErrorReport terminal = strong_error_study(c).front();
    c.error_time = ErrorTime::max_over_grid;
    const ErrorReport sup = strong_error_study(c).front();
    for (std::size_t i = 0; i < sup.rows.size(); ++i) EXPECT_GE(sup.rows[i].error, terminal.rows[i].error);
    expect_jensen(sup);
}

TEST(Study, LayoutStableAcrossWorkers) {
    StudyConfig c = small_study(double_well_preset(DoubleWellParams{}), {16, 32, 64}, 256, 120);
    std::ostringstream a, b;
    io::write_error_csv(a, strong_error_study(c).front());
    c.workers = 4;
    io::write_error_csv(b, strong_error_study(c).front());
    EXPECT_EQ(a.str(), b.str());
}

TEST(Study, DivergenceFlagsRowsUnusable) {
    Model m = make_preset("cubic");
    StudyConfig c = small_study(m, {8, 16, 32, 64}, 1024, 20);
    c.variants = {SchemeVariant::classical};
    const ErrorReport rep = strong_error_study(c).front();
    EXPECT_TRUE(rep.any_unusable());
    for (const auto& r : rep.rows)
        if (r.n == 8) {
            EXPECT_EQ(r.diverged_fraction, 1.0);
            EXPECT_FALSE(r.usable);
        }
}

TEST(Study, InvalidConfigs) {
    StudyConfig c = small_study(make_preset("ode-decay"), {}, 64, 10);
    EXPECT_THROW(strong_error_study(c), ConfigError);
    c.levels = {48};
    EXPECT_THROW(strong_error_study(c), ConfigError);
    c.levels = {8};
    c.num_paths = 0;
    EXPECT_THROW(strong_error_study(c), ConfigError);
    c.num_paths = 2;
    c.p_list = {0.0};
    EXPECT_THROW(strong_error_study(c), ConfigError);
}

TEST(MomentProbe, ConstantPath) {
    const Model m = make_preset("zero", ParamMap(std::map<std::string, std::string>{{"x0", "1.5"}}));
    const MomentTable t = moment_probe(m, SchemeConfig{}, {4, 8, 16}, 4.0, 50);
    for (const auto& r : t.rows) EXPECT_DOUBLE_EQ(r.sup_moment, std::pow(1.5, 4));
    EXPECT_DOUBLE_EQ(t.spread(), 1.0);
}

TEST(MomentProbe, ClassicalCubicBlowsUp) {
    const Model m = make_preset("cubic");
    const MomentTable t = moment_probe(m, SchemeConfig{SchemeVariant::classical, 1}, {8}, 2.0, 10);
    ASSERT_EQ(t.rows.size(), 1u);
    EXPECT_TRUE(std::isinf(t.rows[0].sup_moment));
    ASSERT_TRUE(t.rows[0].first_divergence_step);
    EXPECT_LE(*t.rows[0].first_divergence_step, 10u);
    EXPECT_TRUE(std::isinf(t.spread()));
}

TEST(MomentProbe, TamedCubicBounded) {
    const Model m = make_preset("cubic");
    const MomentTable t = moment_probe(m, SchemeConfig{SchemeVariant::randomized_tamed, 1}, {8, 16, 32}, 2.0, 10);
    for (const auto& r : t.rows) {
        EXPECT_TRUE(std::isfinite(r.sup_moment));
        EXPECT_DOUBLE_EQ(r.sup_moment, 100.0);
    }
}

TEST(MomentProbe, TamedDoubleWellStable) {
    const Model m = double_well_preset(DoubleWellParams{});
    const MomentTable t = moment_probe(m, SchemeConfig{}, {64, 128, 256}, 4.0, 500);
    EXPECT_LE(t.spread(), 2.0);
    EXPECT_THROW(moment_probe(m, SchemeConfig{}, {64}, 1.0, 10), ConfigError);
}

TEST(TamingGap, ZeroWhenUntamed) {
    const Model m = double_well_preset(DoubleWellParams{});
    const GapTable t = taming_gap_probe(m, SchemeConfig{SchemeVariant::randomized_untamed, 1}, {16, 32}, 2.0, 20);
    for (const auto& r : t.rows) {
        EXPECT_EQ(r.drift_diffusion_gap, 0.0);
        EXPECT_EQ(r.jump_gap, 0.0);
    }
    EXPECT_FALSE(t.drift_diffusion_fit);
}

TEST(TamingGap, ZeroAtOriginWithoutDynamics) {
    const Model m = make_preset("zero", ParamMap(std::map<std::string, std::string>{{"x0", "0"}}));
    const GapTable t = taming_gap_probe(m, SchemeConfig{}, {16, 32, 64}, 2.0, 20);
    for (const auto& r : t.rows) EXPECT_EQ(r.drift_diffusion_gap, 0.0);
}

TEST(TamingGap, DoubleWellDecay) {
    const Model m = double_well_preset(DoubleWellParams{});
    const std::vector<std::size_t> ns{64, 128, 256, 512, 1024, 2048, 4096};
    const GapTable a = taming_gap_probe(m, SchemeConfig{}, ns, 2.0, 100, ProbeOptions{1, 1, 10});
    const GapTable b = taming_gap_probe(m, SchemeConfig{}, ns, 2.0, 100, ProbeOptions{2, 1, 10});
    ASSERT_TRUE(a.drift_diffusion_fit && b.drift_diffusion_fit);
    EXPECT_GE(a.drift_diffusion_fit->slope, 0.9);
    EXPECT_GE(b.drift_diffusion_fit->slope, 0.9);
    EXPECT_NEAR(a.drift_diffusion_fit->slope, b.drift_diffusion_fit->slope, 0.1);
}

#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "gnarx/errors.hpp"
#include "gnarx/panel.hpp"

using namespace gnarx;

namespace {

Panel row_panel(std::vector<double> v, std::vector<bool> obs = {}) {
    Eigen::MatrixXd values(1, static_cast<Eigen::Index>(v.size()));
    MaskMatrix mask(1, static_cast<Eigen::Index>(v.size()));
    for (std::size_t t = 0; t < v.size(); ++t) {
        values(0, static_cast<Eigen::Index>(t)) = v[t];
        mask(0, static_cast<Eigen::Index>(t)) = obs.empty() || obs[t];
    }
    return Panel::monthly({"a"}, {2020, 1}, values, mask);
}

Panel random_panel(int n, int t, double missing, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(5.0, 3.0);
    std::bernoulli_distribution drop(missing);
    Eigen::MatrixXd values(n, t);
    MaskMatrix mask(n, t);
    for (int i = 0; i < n; ++i) {
        for (int c = 0; c < t; ++c) {
            mask(i, c) = !drop(rng);
            values(i, c) = mask(i, c) ? normal(rng) : 0.0;
        }
    }
    return Panel::monthly(fixture::node_names(n), {1999, 7}, values, mask);
}

}  // namespace

TEST(CalendarStamp, ParsesAndFormats) {
    const auto s = CalendarStamp::parse("2020-02");
    EXPECT_EQ(s.year, 2020);
    EXPECT_EQ(s.month, 2);
    EXPECT_EQ(s.to_string(), "2020-02");
    EXPECT_EQ(s.plus_months(11).to_string(), "2021-01");
    EXPECT_EQ(CalendarStamp(2021, 1).months_since(CalendarStamp(2019, 12)), 13);
    EXPECT_THROW((void)CalendarStamp::parse("2020/02"), ParseError);
    EXPECT_THROW((void)CalendarStamp::parse("2020-13"), DataError);
    EXPECT_LT(CalendarStamp(2019, 12), CalendarStamp(2020, 1));
}

TEST(PanelCsv, SingleCellPanel) {
    std::istringstream in("date,UK\n2020-01,50.0\n");
    const Panel p = read_panel_csv(in);
    EXPECT_EQ(p.num_nodes(), 1);
    EXPECT_EQ(p.num_times(), 1);
    EXPECT_TRUE(p.fully_observed());
    EXPECT_DOUBLE_EQ(p.value(0, 0), 50.0);
}

TEST(PanelCsv, EmptyCellIsMissing) {
    std::istringstream in("date,a,b\n2020-01,1,2\n2020-02,,4\n2020-03,5,6\n");
    const Panel p = read_panel_csv(in);
    EXPECT_FALSE(p.is_observed(0, 1));
    EXPECT_TRUE(p.is_observed(1, 1));
    EXPECT_DOUBLE_EQ(p.value(1, 1), 4.0);
    EXPECT_DOUBLE_EQ(p.value(0, 2), 5.0);
}

TEST(PanelCsv, LateStartingNodeIsMissingBeforeItsFirstValue) {
    std::ostringstream csv;
    csv << "date,UK,Australia\n";
    for (int t = 0; t < 24; ++t) {
        csv << CalendarStamp(2015, 1).plus_months(t).to_string() << ',' << 50 + t << ',';
        if (t >= 16) csv << 49 + t;
        csv << '\n';
    }
    std::istringstream in(csv.str());
    const Panel p = read_panel_csv(in);
    EXPECT_EQ(p.num_times(), 24);
    for (int t = 0; t < 24; ++t) EXPECT_EQ(p.is_observed(1, t), t >= 16);
    EXPECT_EQ(p.times()[16].to_string(), "2016-05");
}

TEST(PanelCsv, ColumnMappingSelectsAndOrders) {
    std::istringstream in("date,a,b,c\n2020-01,1,2,3\n");
    const Panel p = read_panel_csv(in, ColumnMapping{{"c", "a"}});
    ASSERT_EQ(p.num_nodes(), 2);
    EXPECT_EQ(p.nodes()[0], "c");
    EXPECT_DOUBLE_EQ(p.value(0, 0), 3.0);
    EXPECT_DOUBLE_EQ(p.value(1, 0), 1.0);
}

TEST(PanelCsv, Errors) {
    std::istringstream bad_date("date,a\n2020-1x,1\n");
    EXPECT_THROW((void)read_panel_csv(bad_date), ParseError);
    std::istringstream bad_cell("date,a\n2020-01,abc\n");
    EXPECT_THROW((void)read_panel_csv(bad_cell), ParseError);
    std::istringstream duplicate("date,a\n2020-01,1\n2020-01,2\n");
    EXPECT_THROW((void)read_panel_csv(duplicate), FormatError);
    try {
        std::istringstream named("date,a\n2020-01,1\nnope,2\n");
        (void)read_panel_csv(named);
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("row"), std::string::npos);
    }
}

TEST(PanelCsv, RoundTripIsBitIdentical) {
    std::mt19937_64 rng(11);
    fixture::TempDir dir("panel");
    for (int trial = 0; trial < 20; ++trial) {
        const Panel p = random_panel(4, 15, 0.2, rng);
        save_panel_csv(dir / "a.csv", p);
        const Panel q = load_panel_csv(dir / "a.csv");
        save_panel_csv(dir / "b.csv", q);
        EXPECT_EQ(fixture::read_text(dir / "a.csv"), fixture::read_text(dir / "b.csv"));
        EXPECT_EQ(q.observed(), p.observed());
        for (int i = 0; i < 4; ++i) {
            for (int t = 0; t < 15; ++t) {
                if (p.is_observed(i, t)) EXPECT_EQ(q.value(i, t), p.value(i, t));
            }
        }
    }
}

TEST(Difference, StepBecomesSpike) {
    const Panel d = difference(row_panel({0, 0, 67.9, 67.9}));
    ASSERT_EQ(d.num_times(), 3);
    EXPECT_DOUBLE_EQ(d.value(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(d.value(0, 1), 67.9);
    EXPECT_DOUBLE_EQ(d.value(0, 2), 0.0);
    EXPECT_EQ(d.times()[0].to_string(), "2020-02");
}

TEST(Difference, ConstantAndMissing) {
    const Panel c = difference(row_panel({3, 3, 3}));
    EXPECT_DOUBLE_EQ(c.value(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(c.value(0, 1), 0.0);
    const Panel m = difference(row_panel({1, 0, 3}, {true, false, true}));
    EXPECT_FALSE(m.is_observed(0, 0));
    EXPECT_FALSE(m.is_observed(0, 1));
    EXPECT_THROW((void)difference(row_panel({1})), DimensionError);
}

TEST(Difference, CumulativeSumReconstructs) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const Panel p = random_panel(3, 20, 0.0, rng);
        const Panel d = difference(p);
        for (int i = 0; i < 3; ++i) {
            double level = p.value(i, 0);
            for (int t = 0; t < d.num_times(); ++t) {
                level += d.value(i, t);
                EXPECT_NEAR(level, p.value(i, t + 1), 1e-10);
            }
        }
    }
}

TEST(Standardize, HandExample) {
    const auto s = standardize(row_panel({1, 2, 3}));
    EXPECT_NEAR(s.panel.value(0, 0), -1.0, 1e-15);
    EXPECT_NEAR(s.panel.value(0, 1), 0.0, 1e-15);
    EXPECT_NEAR(s.panel.value(0, 2), 1.0, 1e-15);
    EXPECT_DOUBLE_EQ(s.scales[0].mean, 2.0);
    EXPECT_DOUBLE_EQ(s.scales[0].sd, 1.0);
}

TEST(Standardize, IdempotentMaskPreservingAndInvertible) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const Panel p = random_panel(3, 25, 0.15, rng);
        const auto s = standardize(p);
        EXPECT_EQ(s.panel.observed(), p.observed());
        const auto again = standardize(s.panel);
        const Panel back = destandardize(s.panel, s.scales);
        for (int i = 0; i < 3; ++i) {
            for (int t = 0; t < 25; ++t) {
                if (!p.is_observed(i, t)) continue;
                EXPECT_NEAR(again.panel.value(i, t), s.panel.value(i, t), 1e-12);
                EXPECT_NEAR(back.value(i, t), p.value(i, t), 1e-10);
            }
        }
    }
}

TEST(Standardize, ZeroVarianceNamesNode) {
    Eigen::MatrixXd v(2, 3);
    v << 1, 2, 3, 4, 4, 4;
    const Panel p = Panel::monthly({"ok", "flat"}, {2020, 1}, v);
    try {
        (void)standardize(p);
        FAIL() << "expected a degenerate-scale error";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("flat"), std::string::npos);
    }
}

TEST(ZeroFillBefore, OutbreakCutoff) {
    const Panel p = row_panel({5, 6, 7, 8}, {false, true, false, true});
    const Panel z = zero_fill_before(p, {2020, 3});
    EXPECT_TRUE(z.is_observed(0, 0));
    EXPECT_TRUE(z.is_observed(0, 1));
    EXPECT_DOUBLE_EQ(z.value(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(z.value(0, 1), 0.0);
    EXPECT_FALSE(z.is_observed(0, 2));
    EXPECT_DOUBLE_EQ(z.value(0, 3), 8.0);
}

TEST(ZeroFillBefore, CutoffOutsideRange) {
    const Panel p = row_panel({5, 6, 7});
    const Panel early = zero_fill_before(p, {2019, 1});
    EXPECT_EQ(early.values(), p.values());
    const Panel late = zero_fill_before(p, {2030, 1});
    EXPECT_TRUE(late.fully_observed());
    EXPECT_TRUE(late.values().isZero());
}

TEST(Panel, RejectsGapsAndNonFinite) {
    Eigen::MatrixXd v(1, 2);
    v << 1, 2;
    EXPECT_THROW(Panel({"a"}, {{2020, 1}, {2020, 3}}, v), FormatError);
    v(0, 1) = std::nan("");
    EXPECT_THROW(Panel::monthly({"a"}, {2020, 1}, v), ValidationError);
}

TEST(FormatDouble, RoundTrips) {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> normal(0.0, 1e3);
    for (int k = 0; k < 1000; ++k) {
        const double x = normal(rng);
        EXPECT_EQ(std::stod(format_double(x)), x);
    }
}

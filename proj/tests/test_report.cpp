#include <gtest/gtest.h>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <sstream>

#include "bandgate/error.hpp"
#include "bandgate/report.hpp"

using namespace bandgate;
namespace pt = boost::property_tree;

namespace {

Dataset small()
{
    SyntheticSpec spec;
    spec.n_bands = 12;
    spec.samples = 300;
    spec.informative = {2, 8};
    spec.seed = 6;
    return generate(spec);
}

SweepSpec two_methods()
{
    SweepSpec s;
    s.methods = {Method::random_k, Method::variance_k};
    s.ks = {6, 2, 4};
    s.folds = 5;
    s.base.epochs = 2;
    return s;
}

std::size_t count(const std::string& text, const std::string& needle)
{
    std::size_t n = 0;
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) {
        ++n;
    }
    return n;
}

pt::ptree parse_xml(const std::string& text)
{
    std::istringstream in(text);
    pt::ptree tree;
    pt::read_xml(in, tree);
    return tree;
}

} // namespace

TEST(Sweep, RowCardinality)
{
    const auto result = run_sweep(two_methods(), small(), 1);
    const auto csv = sweep_csv(result);
    const auto lines = count(csv, "\n");
    // header + 2 methods x 3 ks x 5 folds x 8 metrics + 2 AUC rows
    EXPECT_EQ(lines, 1u + 2 * 3 * 5 * 8 + 2);
    EXPECT_EQ(csv.rfind("method,k,fold,metric,value\n", 0), 0u);
    EXPECT_EQ(count(csv, ",all,mean,bands_auc,"), 2u);
    ASSERT_EQ(result.cells.size(), 6u);
    EXPECT_EQ(result.cells[0].method, Method::random_k);
    EXPECT_EQ(result.cells[0].k, 2u);
    EXPECT_EQ(result.cells[5].k, 6u);
}

TEST(Sweep, DeterministicAcrossWorkerCounts)
{
    const auto d = small();
    EXPECT_EQ(sweep_csv(run_sweep(two_methods(), d, 1)), sweep_csv(run_sweep(two_methods(), d, 3)));
}

TEST(Sweep, Validation)
{
    auto s = two_methods();
    s.ks = {};
    EXPECT_THROW(s.validate(12), ValidationError);
    s.ks = {13};
    EXPECT_THROW(s.validate(12), ValidationError);
    s = two_methods();
    s.methods = {};
    EXPECT_THROW(s.validate(12), ValidationError);
}

TEST(SweepCsv, ParseRecoversCurvesAndAuc)
{
    const auto result = run_sweep(two_methods(), small(), 1);
    const auto curves = parse_sweep_csv(sweep_csv(result));
    ASSERT_EQ(curves.curves.size(), 2u);
    const auto& rk = curves.curves.at("random-k");
    ASSERT_EQ(rk.points.size(), 3u);
    EXPECT_NEAR(rk.points[0].second, result.cells[0].cv.mean[0], 1e-12);
    EXPECT_NEAR(curves.auc.at("random-k"), result.auc.at("random-k"), 1e-15);
}

TEST(SweepCsv, RejectsEmptyAndMalformed)
{
    EXPECT_THROW(parse_sweep_csv(""), ValidationError);
    EXPECT_THROW(parse_sweep_csv("method,k,fold,metric,value\n"), ValidationError);
    EXPECT_THROW(parse_sweep_csv("a,b\n"), ValidationError);
    EXPECT_THROW(parse_sweep_csv("method,k,fold,metric,value\nchbs,2,0,oa\n"), ValidationError);
    EXPECT_THROW(parse_sweep_csv("method,k,fold,metric,value\nchbs,2,0,oa,high\n"), ValidationError);
}

TEST(Svg, SingleCurveThreePoints)
{
    SweepCurves c;
    c.curves["chbs"].points = {{2, 0.6}, {4, 0.75}, {6, 0.8}};
    c.auc["chbs"] = 0.725;
    const auto svg = render_svg(c);
    EXPECT_EQ(count(svg, "<polyline"), 1u);
    const auto tree = parse_xml(svg);
    const auto& root = tree.get_child("svg");
    EXPECT_EQ(root.get<std::string>("<xmlattr>.width"), "800");
    EXPECT_EQ(root.get<std::string>("<xmlattr>.height"), "500");
    std::size_t polylines = 0;
    for (const auto& [name, node] : root) {
        if (name == "polyline") {
            ++polylines;
            std::istringstream pts(node.get<std::string>("<xmlattr>.points"));
            std::string p;
            std::size_t n = 0;
            while (pts >> p) {
                ++n;
            }
            EXPECT_EQ(n, 3u);
            EXPECT_EQ(node.get<std::string>("<xmlattr>.data-method"), "chbs");
        }
    }
    EXPECT_EQ(polylines, 1u);
    EXPECT_NE(svg.find("AUC 0.7250"), std::string::npos);
    EXPECT_NE(svg.find("Number of selected bands"), std::string::npos);
    EXPECT_NE(svg.find("Overall accuracy"), std::string::npos);
}

TEST(Svg, WellFormedWithAwkwardNames)
{
    SweepCurves c;
    c.curves["a<b&\"c\""].points = {{1, 0.2}, {3, 0.4}};
    c.curves["plain"].points = {{1, 0.9}, {3, 0.9}};
    EXPECT_NO_THROW(parse_xml(render_svg(c)));
}

TEST(Svg, PointsInsidePlotArea)
{
    SweepCurves c;
    c.curves["m"].points = {{2, 0.31}, {10, 0.97}};
    const auto root = parse_xml(render_svg(c)).get_child("svg");
    for (const auto& [name, node] : root) {
        if (name != "polyline") {
            continue;
        }
        std::istringstream pts(node.get<std::string>("<xmlattr>.points"));
        std::string p;
        while (pts >> p) {
            const double x = std::stod(p.substr(0, p.find(',')));
            const double y = std::stod(p.substr(p.find(',') + 1));
            EXPECT_GE(x, 80.0);
            EXPECT_LE(x, 720.0);
            EXPECT_GE(y, 50.0);
            EXPECT_LE(y, 450.0);
        }
    }
}

TEST(Svg, NothingToPlot)
{
    EXPECT_THROW(render_svg(SweepCurves{}), ValidationError);
}

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "bandgate/data.hpp"
#include "bandgate/error.hpp"
#include "bandgate/training.hpp"

using namespace bandgate;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / "bandgate_test_data";
    fs::create_directories(dir);
    return dir / name;
}

void write(const fs::path& p, const std::string& text)
{
    std::ofstream(p, std::ios::binary) << text;
}

std::string load_error(const std::string& text)
{
    const auto p = temp_file("bad.csv");
    write(p, text);
    try {
        load_csv(p);
    } catch (const ValidationError& e) {
        return e.what();
    }
    return "";
}

// Plug-in mutual information (nats) between labels and a band quantised into equal-count bins.
double histogram_mi(const Dataset& d, std::size_t band, std::size_t bins = 10)
{
    const std::size_t m = d.samples();
    std::vector<std::pair<double, int>> v;
    for (std::size_t i = 0; i < m; ++i) {
        v.emplace_back(d.spectra(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(band)), d.labels[i]);
    }
    std::sort(v.begin(), v.end());
    std::vector<std::vector<double>> joint(bins, std::vector<double>(d.n_classes, 0.0));
    for (std::size_t i = 0; i < m; ++i) {
        joint[i * bins / m][static_cast<std::size_t>(v[i].second)] += 1.0 / static_cast<double>(m);
    }
    std::vector<double> pb(bins, 0.0), pc(d.n_classes, 0.0);
    for (std::size_t b = 0; b < bins; ++b) {
        for (std::size_t c = 0; c < d.n_classes; ++c) {
            pb[b] += joint[b][c];
            pc[c] += joint[b][c];
        }
    }
    double mi = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
        for (std::size_t c = 0; c < d.n_classes; ++c) {
            if (joint[b][c] > 0) {
                mi += joint[b][c] * std::log(joint[b][c] / (pb[b] * pc[c]));
            }
        }
    }
    return mi;
}

// Best single-threshold accuracy on one band for 2-class data, either orientation.
double best_stump(const Dataset& d, std::size_t band)
{
    std::vector<std::pair<double, int>> v;
    for (std::size_t i = 0; i < d.samples(); ++i) {
        v.emplace_back(d.spectra(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(band)), d.labels[i]);
    }
    std::sort(v.begin(), v.end());
    const double m = static_cast<double>(v.size());
    double ones_total = 0;
    for (auto& p : v) {
        ones_total += p.second;
    }
    double best = 0.0;
    double ones_below = 0.0;
    for (std::size_t i = 0; i <= v.size(); ++i) {
        const double below = static_cast<double>(i);
        // predict 0 below the cut, 1 above, and the reverse
        const double acc = ((below - ones_below) + (ones_total - ones_below)) / m;
        best = std::max({best, acc, 1.0 - acc});
        if (i < v.size()) {
            ones_below += v[i].second;
        }
    }
    return best;
}

} // namespace

TEST(Generate, DeterministicForSeed)
{
    SyntheticSpec spec;
    spec.informative = {1, 5};
    spec.seed = 3;
    const auto a = generate(spec);
    const auto b = generate(spec);
    EXPECT_EQ(a.spectra, b.spectra);
    EXPECT_EQ(a.labels, b.labels);
    spec.seed = 4;
    EXPECT_NE(generate(spec).spectra, a.spectra);
}

TEST(Generate, ShapeAndBalance)
{
    SyntheticSpec spec;
    spec.n_bands = 12;
    spec.n_classes = 3;
    spec.samples = 301;
    const auto d = generate(spec);
    EXPECT_EQ(d.bands(), 12u);
    EXPECT_EQ(d.samples(), 301u);
    std::vector<int> counts(3, 0);
    for (int y : d.labels) {
        ++counts[static_cast<std::size_t>(y)];
    }
    EXPECT_EQ(counts, (std::vector<int>{101, 100, 100}));
    d.validate();
}

TEST(Generate, NoiselessSingleBandIsThresholdSeparable)
{
    SyntheticSpec spec;
    spec.n_bands = 6;
    spec.n_classes = 2;
    spec.samples = 500;
    spec.informative = {2};
    spec.noise_std = 0.0;
    spec.class_signature_gap = 1.0;
    EXPECT_EQ(best_stump(generate(spec), 2), 1.0);
}

TEST(Generate, StumpOnInformativeBandWhenGapDominatesNoise)
{
    for (double noise : {0.1, 0.25}) {
        SyntheticSpec spec;
        spec.n_bands = 10;
        spec.n_classes = 2;
        spec.samples = 2000;
        spec.informative = {3, 7};
        spec.noise_std = noise;
        spec.class_signature_gap = 4.0 * noise;
        spec.seed = 9;
        const auto d = generate(spec);
        for (std::size_t b : spec.informative) {
            EXPECT_GE(best_stump(d, b), 0.95) << noise << " band " << b;
        }
    }
}

TEST(Generate, MutualInformationOnlyOnInformativeBands)
{
    SyntheticSpec spec;
    spec.n_bands = 20;
    spec.samples = 8000;
    spec.informative = {4, 15};
    spec.correlation_width = 2;
    spec.seed = 12;
    const auto d = generate(spec);
    // bias of the plug-in estimate is about (bins-1)(c-1)/(2m) = 0.0017 nats
    for (std::size_t b = 0; b < spec.n_bands; ++b) {
        const double mi = histogram_mi(d, b);
        if (b == 4 || b == 15) {
            EXPECT_GT(mi, 0.2) << b;
        } else {
            EXPECT_LT(mi, 0.01) << b;
        }
    }
}

TEST(Generate, NoInformativeBandsMeansChance)
{
    SyntheticSpec spec;
    spec.n_bands = 8;
    spec.n_classes = 4;
    spec.samples = 4000;
    spec.seed = 2;
    const auto d = generate(spec);
    const auto parts = kfold_partition(d.samples(), 4, 1);
    std::vector<std::size_t> train_rows;
    for (std::size_t f = 1; f < 4; ++f) {
        train_rows.insert(train_rows.end(), parts[f].begin(), parts[f].end());
    }
    const auto train_set = d.subset(train_rows);
    const auto test_set = d.subset(parts[0]);
    TrainConfig config;
    config.method = Method::all_bands;
    config.epochs = 10;
    const auto result = train(config, train_set);
    const auto scores = evaluate(result.model, test_set);
    // 1000 held-out samples: binomial sd of accuracy at p = 0.25 is 0.0137
    EXPECT_NEAR(scores.oa, 0.25, 4 * 0.0137);
}

TEST(Generate, RejectsBadSpecNamingTheBand)
{
    SyntheticSpec spec;
    spec.n_bands = 10;
    spec.informative = {3, 12};
    try {
        spec.validate();
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("12"), std::string::npos);
    }
    spec.informative = {3, 3};
    EXPECT_THROW(spec.validate(), ValidationError);
    spec.informative = {};
    spec.class_signature_gap = 0.0;
    EXPECT_THROW(spec.validate(), ValidationError);
    spec.class_signature_gap = 1.0;
    spec.noise_std = -0.1;
    EXPECT_THROW(spec.validate(), ValidationError);
}

TEST(Csv, RoundTrip)
{
    SyntheticSpec spec;
    spec.n_bands = 25;
    spec.samples = 100;
    spec.informative = {0, 24};
    spec.seed = 5;
    const auto d = generate(spec);
    const auto p = temp_file("round.csv");
    save_csv(d, p);
    const auto back = load_csv(p);
    EXPECT_EQ(back.labels, d.labels);
    EXPECT_EQ(back.n_classes, d.n_classes);
    EXPECT_LE((back.spectra - d.spectra).cwiseAbs().maxCoeff(), 1e-12);
    std::ifstream in(p);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "bands=25 classes=4");
}

TEST(Csv, SpatialHeaderRoundTrip)
{
    Dataset d;
    d.spectra = RowMatrix::Constant(2, 3, 0.5);
    d.labels = {0, 1};
    d.n_classes = 2;
    d.spatial = SpatialShape{3, 3};
    const auto p = temp_file("spatial.csv");
    save_csv(d, p);
    const auto back = load_csv(p);
    ASSERT_TRUE(back.spatial.has_value());
    EXPECT_EQ(*back.spatial, (SpatialShape{3, 3}));
}

TEST(Csv, RaggedRowNamesLine)
{
    const auto msg = load_error("bands=3 classes=2\n0,1,2,3\n1,1,2,3,4\n");
    EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("ragged"), std::string::npos) << msg;
}

TEST(Csv, EmptyFile)
{
    const auto msg = load_error("");
    EXPECT_NE(msg.find("empty"), std::string::npos) << msg;
}

TEST(Csv, MalformedInputs)
{
    EXPECT_NE(load_error("bands3 classes=2\n0,1,2,3\n"), "");
    EXPECT_NE(load_error("bands=3 classes=2\n2,1,2,3\n"), "");
    EXPECT_NE(load_error("bands=3 classes=2\n0,1,nan,3\n"), "");
    EXPECT_NE(load_error("bands=3 classes=2\n0,1,x,3\n"), "");
    EXPECT_NE(load_error("bands=3 classes=2\n"), "");
}

TEST(Csv, MissingFileIsRuntimeError)
{
    EXPECT_THROW(load_csv(temp_file("does_not_exist.csv")), std::runtime_error);
}

TEST(Dataset, ValidateRejectsNonFinite)
{
    Dataset d;
    d.spectra = RowMatrix::Zero(2, 2);
    d.spectra(1, 1) = std::numeric_limits<double>::infinity();
    d.labels = {0, 1};
    d.n_classes = 2;
    EXPECT_THROW(d.validate(), ValidationError);
}

TEST(Dataset, SubsetAndSelectBands)
{
    Dataset d;
    d.spectra.resize(3, 4);
    d.spectra << 0, 1, 2, 3, 10, 11, 12, 13, 20, 21, 22, 23;
    d.labels = {0, 1, 0};
    d.n_classes = 2;
    const std::vector<std::size_t> rows{2, 0};
    const auto s = d.subset(rows);
    EXPECT_EQ(s.labels, (std::vector<int>{0, 0}));
    EXPECT_EQ(s.spectra(0, 3), 23);
    const auto cols = d.select_bands(BandSelection({1, 3}));
    EXPECT_EQ(cols(1, 0), 11);
    EXPECT_EQ(cols(1, 1), 13);
    EXPECT_THROW(d.select_bands(BandSelection({4})), ValidationError);
}

TEST(VarianceRank, ConstantLastScaledFirst)
{
    Dataset d;
    d.spectra.resize(4, 3);
    d.spectra << 1, 5, 10, 2, 5, 20, 3, 5, 30, 4, 5, 40;
    d.labels = {0, 1, 0, 1};
    d.n_classes = 2;
    EXPECT_EQ(variance_rank(d), (std::vector<std::size_t>{2, 0, 1}));
}

TEST(VarianceRank, TiesToLowerIndex)
{
    Dataset d;
    d.spectra.resize(2, 3);
    d.spectra << 0, 1, 0, 1, 0, 1;
    d.labels = {0, 1};
    d.n_classes = 2;
    EXPECT_EQ(variance_rank(d), (std::vector<std::size_t>{0, 1, 2}));
}

TEST(VarianceRank, MatchesTwoPassOracle)
{
    SyntheticSpec spec;
    spec.n_bands = 15;
    spec.samples = 777;
    spec.informative = {2, 9};
    spec.correlation_width = 1;
    const auto d = generate(spec);
    std::vector<std::pair<double, std::size_t>> oracle;
    for (Eigen::Index j = 0; j < d.spectra.cols(); ++j) {
        double mean = 0.0;
        for (Eigen::Index i = 0; i < d.spectra.rows(); ++i) {
            mean += d.spectra(i, j);
        }
        mean /= static_cast<double>(d.spectra.rows());
        double ss = 0.0;
        for (Eigen::Index i = 0; i < d.spectra.rows(); ++i) {
            ss += (d.spectra(i, j) - mean) * (d.spectra(i, j) - mean);
        }
        oracle.emplace_back(-ss / static_cast<double>(d.spectra.rows()), static_cast<std::size_t>(j));
    }
    std::sort(oracle.begin(), oracle.end());
    std::vector<std::size_t> expect;
    for (auto& o : oracle) {
        expect.push_back(o.second);
    }
    EXPECT_EQ(variance_rank(d), expect);
}

TEST(VarianceRank, NeedsTwoSamples)
{
    Dataset d;
    d.spectra = RowMatrix::Zero(1, 3);
    d.labels = {0};
    d.n_classes = 2;
    EXPECT_THROW(variance_rank(d), ValidationError);
}

TEST(Standardizer, FitsTrainingStatistics)
{
    RowMatrix x(4, 2);
    x << 1, 10, 2, 10, 3, 10, 4, 10;
    const auto s = Standardizer::fit(x);
    const RowMatrix z = s.apply(x);
    EXPECT_NEAR(z.col(0).mean(), 0.0, 1e-15);
    EXPECT_NEAR(z.col(0).squaredNorm() / 4.0, 1.0, 1e-12);
    // constant band stays finite
    EXPECT_TRUE(z.col(1).allFinite());
}

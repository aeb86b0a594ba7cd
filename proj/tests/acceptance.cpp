// Acceptance run: one TAP line per criterion, measured quantities to argv[1].

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "bandgate/chbs.hpp"
#include "bandgate/ehbs.hpp"
#include "bandgate/math.hpp"
#include "bandgate/metrics.hpp"
#include "bandgate/training.hpp"
#include "bandgate/verification.hpp"
#include "scenarios.hpp"
#include "toy_pipeline.hpp"

using namespace bandgate;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v)
{
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

double simpson_cdf(double x)
{
    const auto pdf = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi); };
    const double a = -12.0;
    const int n = 200000;
    const double h = (x - a) / n;
    double sum = pdf(a) + pdf(x);
    for (int i = 1; i < n; ++i) {
        sum += pdf(a + i * h) * (i % 2 ? 4.0 : 2.0);
    }
    return sum * h / 3.0;
}

void gradient_fidelity(TapWriter& tap)
{
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const toy::ConcreteToy c(2, 5, 3, seed);
        worst = std::max(worst, finite_diff_check([&](std::span<const double> p) { return c.objective(p); },
                                                  c.point, c.gradient(c.point))
                                    .max_relative_error);
        const toy::GateToy g(5, 3, seed);
        worst = std::max(worst, finite_diff_check([&](std::span<const double> p) { return g.objective(p); },
                                                  g.point, g.gradient(g.point))
                                    .max_relative_error);
    }
    const double elapsed = seconds_since(t0);
    tap.measure("1", "max_relative_error", worst);
    tap.measure("1", "seconds", elapsed);
    tap.check(worst <= 1e-5 && elapsed < 10.0, "1 gradient fidelity (both selectors, 5 bands, 3 classes)",
              "max rel error " + fmt(worst) + ", " + fmt(elapsed) + " s");
}

// Share of rows whose max entry stays below 0.99 after annealing past 0.01.
double low_tau_failure_rate(double gap, std::size_t draws)
{
    const std::size_t k = 4;
    const std::size_t n = 12;
    SelectorMatrix l(k, n, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        l(i, 3 * i) = gap;
    }
    ConcreteLayer layer(l, 1.5, 0.9, 0.15);
    while (layer.tau() > 0.01) {
        layer.anneal_temperature();
    }
    Rng rng(8);
    std::size_t bad = 0;
    for (std::size_t t = 0; t < draws; ++t) {
        const auto rec = layer.sample(rng);
        for (std::size_t i = 0; i < k; ++i) {
            const auto row = rec.m.row(i);
            bad += *std::max_element(row.begin(), row.end()) < 0.99;
        }
    }
    return static_cast<double>(bad) / static_cast<double>(draws * k);
}

void simplex_and_annealing(TapWriter& tap)
{
    Rng rng(31);
    SelectorMatrix l(6, 20);
    for (auto& v : l.values) {
        v = 3.0 * rng.standard_normal();
    }
    const ConcreteLayer layer(l, 0.7, 0.99, 0.15);
    double worst_sum = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const auto rec = layer.sample(rng);
        for (std::size_t i = 0; i < 6; ++i) {
            double s = 0.0;
            for (double v : rec.m.row(i)) {
                s += v;
            }
            worst_sum = std::max(worst_sum, std::abs(s - 1.0));
        }
    }

    const double fail_gap1 = low_tau_failure_rate(1.0, 1000);
    const double fail_gap5 = low_tau_failure_rate(5.0, 1000);

    SyntheticSpec spec;
    spec.n_bands = 12;
    spec.samples = 400;
    spec.informative = {2, 8};
    spec.seed = 3;
    TrainConfig c;
    c.k = 3;
    c.epochs = 7;
    c.batch_size = 64;
    c.alpha = 0.97;
    const auto r = train(c, generate(spec));
    const double expect = c.tau0 * std::pow(c.alpha, static_cast<double>(r.report.batches));
    const double tau_err = std::abs(r.report.final_tau / expect - 1.0);

    tap.measure("2", "max_row_sum_error", worst_sum);
    tap.measure("2", "rows_below_0.99_gap1", fail_gap1);
    tap.measure("2", "rows_below_0.99_gap5", fail_gap5);
    tap.measure("2", "tau_relative_error", tau_err);
    tap.check(worst_sum <= 1e-12 && fail_gap1 == 0.0 && tau_err <= 1e-9, "2 simplex and annealing",
              "row sum err " + fmt(worst_sum) + ", rows with max < 0.99 at gap 1: " + fmt(100 * fail_gap1) +
                  "% (gap 5: " + fmt(100 * fail_gap5) + "%), tau rel err " + fmt(tau_err));
}

void regularizer(TapWriter& tap)
{
    Rng rng(14);
    GateLayer layer(12, 0.5, 1.3);
    for (auto& m : layer.mu()) {
        m = rng.standard_normal();
    }
    double oracle = 0.0;
    for (double m : layer.mu()) {
        oracle += simpson_cdf(m / 0.5);
    }
    oracle *= 1.3;
    const double value_err = std::abs(layer.regularizer() - oracle);
    const std::vector<double> point(layer.mu().begin(), layer.mu().end());
    const auto check = finite_diff_check(
        [&](std::span<const double> mu) {
            GateLayer probe = layer;
            std::copy(mu.begin(), mu.end(), probe.mu().begin());
            return probe.regularizer();
        },
        point, layer.regularizer_gradient());
    tap.measure("3", "value_abs_error", value_err);
    tap.measure("3", "gradient_rel_error", check.max_relative_error);
    tap.check(value_err <= 1e-7 && check.max_relative_error <= 1e-6, "3 regularizer value and gradient",
              "value err " + fmt(value_err) + ", grad rel err " + fmt(check.max_relative_error));
}

void recovery_and_dominance(TapWriter& tap)
{
    int chbs_good = 0;
    int ehbs_good = 0;
    double slowest = 0.0;
    double chbs_oa = 0.0;
    double random_oa = 0.0;
    for (std::uint64_t s = 1; s <= 10; ++s) {
        const auto split = scenario::planted_split(s);
        const auto planted = scenario::planted_spec(s).informative;

        auto t0 = Clock::now();
        const auto chbs = train(scenario::planted_config(Method::chbs, s), split.train, &split.validation);
        slowest = std::max(slowest, seconds_since(t0));
        const double rc = recovery_score(chbs.selection, planted);
        chbs_good += rc >= 0.75;

        t0 = Clock::now();
        const auto ehbs = train(scenario::planted_config(Method::ehbs, s), split.train, &split.validation);
        slowest = std::max(slowest, seconds_since(t0));
        const double re = recovery_score(ehbs.selection, planted);
        ehbs_good += re >= 0.5;

        tap.measure("4", "chbs_recovery_seed" + std::to_string(s), rc);
        tap.measure("4", "ehbs_recovery_seed" + std::to_string(s), re);

        if (s <= 5) {
            const auto rnd = train(scenario::planted_config(Method::random_k, s), split.train);
            const double a = evaluate(chbs.model, split.validation).oa;
            const double b = evaluate(rnd.model, split.validation).oa;
            tap.measure("5", "chbs_oa_seed" + std::to_string(s), a);
            tap.measure("5", "random_k_oa_seed" + std::to_string(s), b);
            chbs_oa += a / 5.0;
            random_oa += b / 5.0;
        }
    }
    tap.measure("4", "chbs_seeds_ok", chbs_good);
    tap.measure("4", "ehbs_seeds_ok", ehbs_good);
    tap.measure("4", "slowest_run_seconds", slowest);
    tap.check(chbs_good >= 8 && ehbs_good >= 7 && slowest < 60.0, "4 planted-band recovery",
              "chbs " + std::to_string(chbs_good) + "/10, ehbs " + std::to_string(ehbs_good) +
                  "/10, slowest run " + fmt(slowest) + " s");

    tap.measure("5", "mean_oa_gap", chbs_oa - random_oa);
    tap.check(chbs_oa - random_oa >= 0.05, "5 downstream dominance over random-k",
              "chbs " + fmt(chbs_oa) + " vs random-k " + fmt(random_oa));
}

void collapse(TapWriter& tap)
{
    std::vector<std::uint64_t> seeds(10);
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        seeds[i] = i + 1;
    }
    const auto seg = collapse_experiment(seeds, InitScheme::segmented);
    const auto plain = collapse_experiment(seeds, InitScheme::plain);
    int full = 0;
    double seg_mean = 0.0;
    double plain_mean = 0.0;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        full += seg[i].distinct == 6;
        seg_mean += static_cast<double>(seg[i].distinct) / 10.0;
        plain_mean += static_cast<double>(plain[i].distinct) / 10.0;
        tap.measure("6", "segmented_distinct_seed" + std::to_string(seeds[i]), static_cast<double>(seg[i].distinct));
        tap.measure("6", "plain_distinct_seed" + std::to_string(seeds[i]), static_cast<double>(plain[i].distinct));
    }
    tap.measure("6", "segmented_full_seeds", full);
    tap.measure("6", "segmented_mean", seg_mean);
    tap.measure("6", "plain_mean", plain_mean);
    tap.check(full >= 8 && seg_mean >= plain_mean, "6 collapse mitigation by segmented init",
              "6 distinct in " + std::to_string(full) + "/10 seeds, mean " + fmt(seg_mean) + " vs plain " +
                  fmt(plain_mean));
}

void metric_oracles(TapWriter& tap)
{
    const auto cm = ConfusionMatrix::from_rows({{45, 5}, {15, 35}});
    const double k = kappa(cm).value;
    const double auc = bands_auc({{{3, 0.9}, {5, 0.9}, {8, 0.9}}});
    const auto s = per_class_iou_precision_recall(cm);
    const double iou_err = std::max({std::abs(s.iou[0] - 45.0 / 65.0), std::abs(s.iou[1] - 35.0 / 55.0),
                                     std::abs(s.mean_iou - (45.0 / 65.0 + 35.0 / 55.0) / 2.0),
                                     std::abs(s.overall_iou - 80.0 / 120.0)});
    tap.measure("7", "kappa", k);
    tap.measure("7", "auc", auc);
    tap.measure("7", "iou_abs_error", iou_err);
    tap.check(k == 0.6 && auc == 0.9 && iou_err <= 1e-12, "7 metric oracles",
              "kappa " + fmt(k) + ", auc " + fmt(auc) + ", iou err " + fmt(iou_err));
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

int sh(const fs::path& dir, const std::string& args, const std::string& env = "")
{
    const std::string cmd = "cd '" + dir.string() + "' && " + env + " '" BANDGATE_CLI "' " + args + " >/dev/null 2>&1";
    return std::system(cmd.c_str());
}

void determinism(TapWriter& tap)
{
    const fs::path dir = fs::temp_directory_path() / "bandgate_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    bool ok = true;
    std::string detail;
    const auto same = [&](const char* a, const char* b) {
        const auto x = slurp(dir / a);
        if (x.empty() || x != slurp(dir / b)) {
            ok = false;
            detail += std::string(a) + " differs from " + b + "; ";
        }
    };
    const std::string gen = "gen --bands 20 --samples 600 --informative 4,13 --seed 5 --out ";
    ok &= sh(dir, gen + "a.csv") == 0 && sh(dir, gen + "b.csv") == 0;
    same("a.csv", "b.csv");
    for (const char* method : {"chbs", "ehbs"}) {
        const std::string train = std::string("train --data a.csv --method ") + method +
                                  " --k 3 --epochs 4 --seed 2 --checkpoint m.bgnet --progress ";
        ok &= sh(dir, train + "p1.csv") == 0 && sh(dir, train + "p2.csv") == 0;
        same("p1.csv", "p2.csv");
    }
    const std::string sweep = "sweep --data a.csv --methods chbs,random-k --ks 2,4 --folds 4 --epochs 2 --seed 3 --out ";
    ok &= sh(dir, sweep + "s1.csv", "BANDGATE_THREADS=1") == 0;
    ok &= sh(dir, sweep + "s2.csv", "BANDGATE_THREADS=1") == 0;
    ok &= sh(dir, sweep + "s4.csv", "BANDGATE_THREADS=4") == 0;
    same("s1.csv", "s2.csv");
    same("s1.csv", "s4.csv");
    tap.check(ok, "8 byte-identical CLI outputs (sequential and parallel folds)", detail);
}

void defaults_echo(TapWriter& tap)
{
    const auto text = echo_config(TrainConfig::reference_defaults());
    bool ok = true;
    for (const char* line : {"sigma=0.5\n", "mu0=0.5\n", "tau=1.5\n", "alpha=0.99998\n", "beta=0.15\n"}) {
        ok &= text.find(line) != std::string::npos;
    }
    tap.check(ok, "9 reference hyperparameters echo");
}

} // namespace

int main(int argc, char** argv)
{
    TapWriter tap(std::cout);
    gradient_fidelity(tap);
    simplex_and_annealing(tap);
    regularizer(tap);
    recovery_and_dominance(tap);
    collapse(tap);
    metric_oracles(tap);
    determinism(tap);
    defaults_echo(tap);
    tap.finish();
    if (argc > 1) {
        std::ofstream(argv[1]) << tap.measurements_csv();
    }
    return tap.failures() == 0 ? 0 : 1;
}

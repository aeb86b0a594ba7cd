#include "bandgate/verification.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "bandgate/error.hpp"

namespace bandgate {

GradientCheck finite_diff_check(const std::function<double(std::span<const double>)>& objective,
                                std::span<const double> point, std::span<const double> analytic,
                                double step)
{
    if (point.size() != analytic.size()) {
        throw ValidationError("finite_diff_check: gradient length does not match the point");
    }
    if (!(step > 0.0)) {
        throw ValidationError("finite_diff_check: step must be > 0");
    }
    GradientCheck result;
    result.numeric.resize(point.size());
    std::vector<double> probe(point.begin(), point.end());
    for (std::size_t i = 0; i < probe.size(); ++i) {
        const double saved = probe[i];
        probe[i] = saved + step;
        const double up = objective(probe);
        probe[i] = saved - step;
        const double down = objective(probe);
        probe[i] = saved;
        if (!std::isfinite(up) || !std::isfinite(down)) {
            throw std::domain_error("finite_diff_check: objective is not finite at coordinate " +
                                    std::to_string(i));
        }
        const double numeric = (up - down) / (2.0 * step);
        result.numeric[i] = numeric;
        const double scale = std::max(std::abs(numeric), std::abs(analytic[i]));
        const double diff = std::abs(numeric - analytic[i]);
        const double err = scale < 1e-8 ? diff : diff / scale;
        if (err > result.max_relative_error) {
            result.max_relative_error = err;
            result.worst_index = i;
        }
    }
    return result;
}

double recovery_score(const BandSelection& selected, std::span<const std::size_t> planted)
{
    if (planted.empty()) {
        throw ValidationError("recovery_score needs a non-empty planted set");
    }
    std::vector<std::size_t> unique(planted.begin(), planted.end());
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    std::size_t hits = 0;
    for (std::size_t band : unique) {
        hits += selected.contains(band) ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(unique.size());
}

CollapseScenario CollapseScenario::standard()
{
    CollapseScenario s;
    s.data.n_bands = 30;
    s.data.n_classes = 4;
    s.data.samples = 1200;
    s.data.informative = {12, 13, 14, 15, 16, 17};
    s.data.class_signature_gap = 1.0;
    s.data.noise_std = 1.0;
    s.data.correlation_width = 1;

    s.train.method = Method::chbs;
    s.train.k = 6;
    s.train.epochs = 60;
    s.train.batch_size = 64;
    s.train.learning_rate = 0.02;
    // ~1100 batches at desk scale, so tau has to decay faster than the full-scale default
    s.train.alpha = 0.995;
    return s;
}

std::vector<CollapseRun> collapse_experiment(std::span<const std::uint64_t> seeds, InitScheme init,
                                             const CollapseScenario& scenario,
                                             std::size_t workers)
{
    std::vector<CollapseRun> runs(seeds.size());
    std::vector<std::exception_ptr> errors(seeds.size());
    auto run_one = [&](std::size_t i) {
        try {
            SyntheticSpec spec = scenario.data;
            spec.seed = seeds[i];
            const Dataset data = generate(spec);
            TrainConfig config = scenario.train;
            config.method = Method::chbs;
            config.init = init;
            config.seed = seeds[i];
            const auto result = train(config, data);
            runs[i].seed = seeds[i];
            runs[i].selection = result.selection;
            runs[i].distinct = result.selection.size();
            runs[i].raw_picks = result.report.raw_picks;
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    if (workers == 0) {
        workers = default_worker_count();
    }
    workers = std::min(workers, seeds.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < seeds.size(); ++i) {
            run_one(i);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < seeds.size(); i = next++) {
                    run_one(i);
                }
            });
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return runs;
}

TapWriter::TapWriter(std::ostream& out) : out_(out)
{
    out_ << "TAP version 13\n";
}

bool TapWriter::check(bool ok, const std::string& description, const std::string& detail)
{
    ++count_;
    if (!ok) {
        ++failures_;
    }
    out_ << (ok ? "ok " : "not ok ") << count_ << " - " << description << '\n';
    if (!detail.empty()) {
        out_ << "  # " << detail << '\n';
    }
    out_.flush();
    return ok;
}

void TapWriter::measure(const std::string& criterion, const std::string& quantity, double value)
{
    char buffer[32];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
    rows_.push_back(criterion + "," + quantity + "," + std::string(buffer, ptr));
}

void TapWriter::finish()
{
    out_ << "1.." << count_ << '\n';
    out_ << "# " << (count_ - failures_) << " passed, " << failures_ << " failed\n";
    out_.flush();
}

std::string TapWriter::measurements_csv() const
{
    std::string out = "criterion,quantity,value\n";
    for (const auto& row : rows_) {
        out += row + '\n';
    }
    return out;
}

} // namespace bandgate

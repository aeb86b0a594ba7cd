#include "bandgate/training.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <memory>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "bandgate/error.hpp"
#include "bandgate/math.hpp"

namespace bandgate {

namespace {

// Rng stream ids, fixed so that a seed always means the same run.
constexpr std::uint64_t kNetStream = 10;
constexpr std::uint64_t kSelectorStream = 11;
constexpr std::uint64_t kShuffleStream = 12;
constexpr std::uint64_t kNoiseStream = 13;
constexpr std::uint64_t kBaselineStream = 14;
constexpr std::uint64_t kFoldStream = 100;

std::string format_double(double value)
{
    char buffer[32];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
    return std::string(buffer, ptr);
}

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    return s.substr(first, s.find_last_not_of(" \t\r\n") - first + 1);
}

double parse_double(std::string_view key, std::string_view text)
{
    text = trim(text);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
        throw ValidationError("config '" + std::string(key) + "': '" + std::string(text) +
                              "' is not a number");
    }
    return value;
}

std::uint64_t parse_unsigned(std::string_view key, std::string_view text)
{
    text = trim(text);
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
        throw ValidationError("config '" + std::string(key) + "': '" + std::string(text) +
                              "' is not a non-negative integer");
    }
    return value;
}

bool parse_bool(std::string_view key, std::string_view text)
{
    text = trim(text);
    if (text == "true" || text == "1" || text == "on") {
        return true;
    }
    if (text == "false" || text == "0" || text == "off") {
        return false;
    }
    throw ValidationError("config '" + std::string(key) + "': expected true or false");
}

std::vector<std::size_t> parse_list(std::string_view key, std::string_view text)
{
    std::vector<std::size_t> out;
    text = trim(text);
    if (text.empty() || text == "none") {
        return out;
    }
    std::size_t start = 0;
    while (true) {
        const auto comma = text.find(',', start);
        out.push_back(static_cast<std::size_t>(parse_unsigned(
            key, text.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                     : comma - start))));
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

std::vector<std::size_t> classifier_widths(std::size_t input, const TrainConfig& config,
                                           std::size_t classes)
{
    std::vector<std::size_t> widths{input};
    widths.insert(widths.end(), config.hidden.begin(), config.hidden.end());
    widths.push_back(classes);
    return widths;
}

RowMatrix gather_rows(const RowMatrix& source, std::span<const std::size_t> rows)
{
    RowMatrix out(static_cast<Eigen::Index>(rows.size()), source.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.row(static_cast<Eigen::Index>(r)) = source.row(static_cast<Eigen::Index>(rows[r]));
    }
    return out;
}

RowMatrix gather_columns(const RowMatrix& source, std::span<const std::size_t> cols)
{
    RowMatrix out(source.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
        out.col(static_cast<Eigen::Index>(j)) = source.col(static_cast<Eigen::Index>(cols[j]));
    }
    return out;
}

BandSelection all_bands(std::size_t n)
{
    std::vector<std::size_t> bands(n);
    std::iota(bands.begin(), bands.end(), std::size_t{0});
    return BandSelection(std::move(bands));
}

// --- Selector stages -------------------------------------------------------
//
// A stage maps a standardized batch to classifier inputs, owns its trainable
// state and optimizer, and exposes the noise-free inference path.

class Stage {
public:
    virtual ~Stage() = default;
    virtual void begin_batch(Rng& noise) = 0;
    virtual RowMatrix forward(const RowMatrix& batch) = 0;
    virtual double penalty() const { return 0.0; }
    virtual void backward(const RowMatrix& batch, const RowMatrix& grad_features) = 0;
    virtual void end_batch() {}
    virtual RowMatrix infer(const RowMatrix& batch) const = 0;
    virtual BandSelection selection() const = 0;
    virtual std::size_t distinct() const { return selection().size(); }
};

class FixedBandsStage final : public Stage {
public:
    explicit FixedBandsStage(BandSelection bands) : bands_(std::move(bands)) {}
    void begin_batch(Rng&) override {}
    RowMatrix forward(const RowMatrix& batch) override { return infer(batch); }
    void backward(const RowMatrix&, const RowMatrix&) override {}
    RowMatrix infer(const RowMatrix& batch) const override
    {
        return gather_columns(batch, bands_.bands());
    }
    BandSelection selection() const override { return bands_; }

private:
    BandSelection bands_;
};

class GateStage final : public Stage {
public:
    GateStage(GateLayer layer, std::size_t k, const TrainConfig& config)
        : layer_(std::move(layer)), k_(k),
          optimizer_(config.optimizer, layer_.bands(), config.learning_rate)
    {
    }

    void begin_batch(Rng& noise) override { record_ = layer_.sample(noise); }

    RowMatrix forward(const RowMatrix& batch) override
    {
        const Eigen::Map<const Eigen::RowVectorXd> z(record_.z.data(),
                                                     static_cast<Eigen::Index>(record_.z.size()));
        return batch.array().rowwise() * z.array();
    }

    double penalty() const override { return layer_.regularizer(); }

    void backward(const RowMatrix& batch, const RowMatrix& grad_features) override
    {
        std::vector<double> grad = layer_.regularizer_gradient();
        const auto n = static_cast<std::size_t>(batch.cols());
        for (Eigen::Index r = 0; r < batch.rows(); ++r) {
            layer_.accumulate_data_gradient(
                record_, std::span<const double>(batch.data() + r * batch.cols(), n),
                std::span<const double>(grad_features.data() + r * grad_features.cols(), n),
                grad);
        }
        optimizer_.step(layer_.mu(), grad);
    }

    RowMatrix infer(const RowMatrix& batch) const override
    {
        Eigen::RowVectorXd z(batch.cols());
        for (Eigen::Index j = 0; j < batch.cols(); ++j) {
            z(j) = clamp01(layer_.mu()[static_cast<std::size_t>(j)]);
        }
        return batch.array().rowwise() * z.array();
    }

    BandSelection selection() const override { return layer_.select_top_k(k_); }
    const GateLayer& layer() const { return layer_; }

private:
    GateLayer layer_;
    std::size_t k_;
    Optimizer optimizer_;
    GateForwardRecord record_;
};

class ConcreteStage final : public Stage {
public:
    ConcreteStage(ConcreteLayer layer, const TrainConfig& config)
        : layer_(std::move(layer)),
          optimizer_(config.optimizer, layer_.k() * layer_.n(), config.learning_rate)
    {
    }

    void begin_batch(Rng& noise) override { record_ = layer_.sample(noise); }

    RowMatrix forward(const RowMatrix& batch) override
    {
        return batch * selection_matrix(record_.m).transpose();
    }

    void backward(const RowMatrix& batch, const RowMatrix& grad_features) override
    {
        SelectorMatrix grad_m(layer_.k(), layer_.n());
        Eigen::Map<RowMatrix>(grad_m.values.data(), static_cast<Eigen::Index>(layer_.k()),
                              static_cast<Eigen::Index>(layer_.n())) =
            grad_features.transpose() * batch;
        const SelectorMatrix grad = layer_.backward_from_selection(record_, grad_m);
        optimizer_.step(layer_.parameters(), grad.values);
    }

    void end_batch() override { layer_.anneal_temperature(); }

    RowMatrix infer(const RowMatrix& batch) const override
    {
        return gather_columns(batch, layer_.row_argmax());
    }

    BandSelection selection() const override { return layer_.selected_bands().selection; }
    std::size_t distinct() const override { return layer_.selected_bands().distinct; }
    const ConcreteLayer& layer() const { return layer_; }

private:
    static Eigen::Map<const RowMatrix> selection_matrix(const SelectorMatrix& m)
    {
        return {m.values.data(), static_cast<Eigen::Index>(m.rows),
                static_cast<Eigen::Index>(m.cols)};
    }

    ConcreteLayer layer_;
    Optimizer optimizer_;
    ConcreteForwardRecord record_;
};

struct LoopContext {
    const RowMatrix& x;
    const std::vector<int>& y;
    const RowMatrix& x_val;
    const std::vector<int>& y_val;
    const LossSpec& loss;
    const TrainConfig& config;
    Rng& shuffle;
    Rng& noise;
    std::vector<std::size_t>& order;
    TrainReport& report;
};

double inference_oa(const Stage& stage, const Classifier& net, const RowMatrix& x,
                    const std::vector<int>& y)
{
    const auto predicted = predict_classes(net.forward(stage.infer(x)));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        correct += predicted[i] == y[i] ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(y.size());
}

void run_epochs(LoopContext& ctx, Stage& stage, Classifier& net, std::size_t epochs)
{
    Optimizer net_optimizer(ctx.config.optimizer, net.parameter_count(), ctx.config.learning_rate);
    std::vector<double> grad(net.parameter_count());
    Classifier::Cache cache;
    RowMatrix grad_logits;
    const std::size_t m = ctx.order.size();
    const std::size_t batch = ctx.config.batch_size;

    for (std::size_t e = 0; e < epochs; ++e) {
        for (std::size_t i = m - 1; i > 0; --i) {
            std::swap(ctx.order[i], ctx.order[ctx.shuffle.uniform_index(i + 1)]);
        }
        double objective = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < m; start += batch) {
            const std::size_t stop = std::min(m, start + batch);
            const std::span<const std::size_t> rows(ctx.order.data() + start, stop - start);
            const RowMatrix xb = gather_rows(ctx.x, rows);
            std::vector<int> yb(rows.size());
            for (std::size_t r = 0; r < rows.size(); ++r) {
                yb[r] = ctx.y[rows[r]];
            }

            stage.begin_batch(ctx.noise);
            const RowMatrix features = stage.forward(xb);
            const RowMatrix logits = net.forward(features, &cache);
            const double ce = batch_cross_entropy(logits, yb, ctx.loss, grad_logits);
            objective += ce + stage.penalty();

            std::fill(grad.begin(), grad.end(), 0.0);
            const RowMatrix grad_features = net.backward(cache, grad_logits, grad);
            stage.backward(xb, grad_features);
            net_optimizer.step(net.parameters(), grad);
            stage.end_batch();
            ++batches;
        }
        ctx.report.batches += batches;

        EpochRecord record;
        record.epoch = ctx.report.epochs.size() + 1;
        record.loss = objective / static_cast<double>(batches);
        record.val_oa = inference_oa(stage, net, ctx.x_val, ctx.y_val);
        record.selection = stage.selection();
        record.distinct = stage.distinct();
        ctx.report.epochs.push_back(std::move(record));
    }
}

/// Phase-2 classifier whose first layer reads only the selected bands. The
/// first-layer columns are scaled by the inference gate values so the rebuilt
/// network starts where the soft-gated one ended.
Classifier rebuild_for_bands(const Classifier& net, const GateLayer& gates,
                             const BandSelection& bands)
{
    auto widths = net.widths();
    widths.front() = bands.size();
    Classifier out = Classifier::zeros(widths);
    for (std::size_t l = 0; l < net.layers(); ++l) {
        if (l == 0) {
            for (std::size_t j = 0; j < bands.size(); ++j) {
                const double gate = clamp01(gates.mu()[bands[j]]);
                out.weights(0).col(static_cast<Eigen::Index>(j)) =
                    net.weights(0).col(static_cast<Eigen::Index>(bands[j])) * gate;
            }
        } else {
            out.weights(l) = net.weights(l);
        }
        out.bias(l) = net.bias(l);
    }
    return out;
}

BandSelection random_bands(std::size_t n, std::size_t k, Rng& rng)
{
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
        std::swap(pool[i], pool[i + rng.uniform_index(n - i)]);
    }
    pool.resize(k);
    return BandSelection::from_unordered(std::move(pool));
}

} // namespace

Method parse_method(std::string_view name)
{
    if (name == "chbs") {
        return Method::chbs;
    }
    if (name == "ehbs") {
        return Method::ehbs;
    }
    if (name == "all-bands") {
        return Method::all_bands;
    }
    if (name == "random-k") {
        return Method::random_k;
    }
    if (name == "variance-k") {
        return Method::variance_k;
    }
    throw ValidationError("unknown method '" + std::string(name) +
                          "' (expected chbs, ehbs, all-bands, random-k or variance-k)");
}

std::string_view to_string(Method method) noexcept
{
    switch (method) {
    case Method::chbs:
        return "chbs";
    case Method::ehbs:
        return "ehbs";
    case Method::all_bands:
        return "all-bands";
    case Method::random_k:
        return "random-k";
    case Method::variance_k:
        return "variance-k";
    }
    return "?";
}

InitScheme parse_init(std::string_view name)
{
    if (name == "segmented") {
        return InitScheme::segmented;
    }
    if (name == "plain") {
        return InitScheme::plain;
    }
    throw ValidationError("unknown init '" + std::string(name) + "' (expected segmented or plain)");
}

std::string_view to_string(InitScheme init) noexcept
{
    return init == InitScheme::segmented ? "segmented" : "plain";
}

TrainConfig TrainConfig::reference_defaults()
{
    TrainConfig config;
    config.batch_size = 256;
    config.tau0 = 1.5;
    config.alpha = 0.99998;
    config.beta = 0.15;
    config.sigma = 0.5;
    config.mu0 = 0.5;
    config.init = InitScheme::segmented;
    return config;
}

void TrainConfig::validate(std::size_t n_bands, std::size_t n_classes) const
{
    if (k == 0 || k > n_bands) {
        throw ValidationError("k must lie in [1, " + std::to_string(n_bands) + "], got " +
                              std::to_string(k));
    }
    if (epochs == 0) {
        throw ValidationError("epochs must be >= 1");
    }
    if (batch_size == 0) {
        throw ValidationError("batch size must be >= 1");
    }
    if (!(learning_rate > 0.0)) {
        throw ValidationError("learning rate must be > 0");
    }
    if (n_classes < 2) {
        throw ValidationError("training needs at least two classes");
    }
    for (std::size_t h : hidden) {
        if (h == 0) {
            throw ValidationError("hidden layer widths must be positive");
        }
    }
    if (!(tau0 > 0.0)) {
        throw ValidationError("tau must be > 0");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ValidationError("alpha must lie in (0, 1)");
    }
    if (!(beta > 0.0 && beta < 1.0)) {
        throw ValidationError("beta must lie in (0, 1)");
    }
    if (!(sigma > 0.0)) {
        throw ValidationError("sigma must be > 0");
    }
    if (!std::isfinite(mu0)) {
        throw ValidationError("mu0 must be finite");
    }
    if (!(lambda0 > 0.0)) {
        throw ValidationError("lambda0 must be > 0");
    }
    if (phase2_epochs && *phase2_epochs >= epochs) {
        throw ValidationError("phase2-epochs must be smaller than epochs");
    }
}

std::pair<std::size_t, std::size_t> TrainConfig::ehbs_phases() const
{
    std::size_t second = 0;
    if (phase2_epochs) {
        second = *phase2_epochs;
    } else if (epochs >= 2) {
        second = std::max<std::size_t>(1, static_cast<std::size_t>(
                                              std::lround(0.2 * static_cast<double>(epochs))));
    }
    return {epochs - second, second};
}

std::string echo_config(const TrainConfig& c)
{
    std::string hidden;
    for (std::size_t i = 0; i < c.hidden.size(); ++i) {
        hidden += (i ? "," : "") + std::to_string(c.hidden[i]);
    }
    std::ostringstream out;
    out << "method=" << to_string(c.method) << '\n'
        << "k=" << c.k << '\n'
        << "epochs=" << c.epochs << '\n'
        << "batch-size=" << c.batch_size << '\n'
        << "learning-rate=" << format_double(c.learning_rate) << '\n'
        << "optimizer=" << to_string(c.optimizer) << '\n'
        << "hidden=" << (hidden.empty() ? "none" : hidden) << '\n'
        << "standardize=" << (c.standardize ? "true" : "false") << '\n'
        << "weighted-loss=" << (c.weighted_loss ? "true" : "false") << '\n'
        << "seed=" << c.seed << '\n'
        << "tau=" << format_double(c.tau0) << '\n'
        << "alpha=" << format_double(c.alpha) << '\n'
        << "beta=" << format_double(c.beta) << '\n'
        << "init=" << to_string(c.init) << '\n'
        << "sigma=" << format_double(c.sigma) << '\n'
        << "mu0=" << format_double(c.mu0) << '\n'
        << "lambda0=" << format_double(c.lambda0) << '\n'
        << "phase2-epochs="
        << (c.phase2_epochs ? std::to_string(*c.phase2_epochs) : std::string("auto")) << '\n';
    return out.str();
}

void apply_config_entry(TrainConfig& c, std::string_view key, std::string_view value)
{
    key = trim(key);
    value = trim(value);
    if (key == "method") {
        c.method = parse_method(value);
    } else if (key == "k") {
        c.k = parse_unsigned(key, value);
    } else if (key == "epochs") {
        c.epochs = parse_unsigned(key, value);
    } else if (key == "batch-size") {
        c.batch_size = parse_unsigned(key, value);
    } else if (key == "learning-rate") {
        c.learning_rate = parse_double(key, value);
    } else if (key == "optimizer") {
        c.optimizer = parse_optimizer(value);
    } else if (key == "hidden") {
        c.hidden = parse_list(key, value);
    } else if (key == "standardize") {
        c.standardize = parse_bool(key, value);
    } else if (key == "weighted-loss") {
        c.weighted_loss = parse_bool(key, value);
    } else if (key == "seed") {
        c.seed = parse_unsigned(key, value);
    } else if (key == "tau") {
        c.tau0 = parse_double(key, value);
    } else if (key == "alpha") {
        c.alpha = parse_double(key, value);
    } else if (key == "beta") {
        c.beta = parse_double(key, value);
    } else if (key == "init") {
        c.init = parse_init(value);
    } else if (key == "sigma") {
        c.sigma = parse_double(key, value);
    } else if (key == "mu0") {
        c.mu0 = parse_double(key, value);
    } else if (key == "lambda0") {
        c.lambda0 = parse_double(key, value);
    } else if (key == "phase2-epochs") {
        if (value == "auto") {
            c.phase2_epochs.reset();
        } else {
            c.phase2_epochs = parse_unsigned(key, value);
        }
    } else {
        throw ValidationError("unknown config key '" + std::string(key) + "'");
    }
}

TrainConfig parse_config(std::string_view text, TrainConfig base)
{
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto newline = text.find('\n');
        std::string_view line = text.substr(0, newline);
        text = newline == std::string_view::npos ? std::string_view{} : text.substr(newline + 1);
        ++line_no;
        line = trim(line);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ValidationError("config line " + std::to_string(line_no) +
                                  ": expected key=value");
        }
        apply_config_entry(base, line.substr(0, eq), line.substr(eq + 1));
    }
    return base;
}

std::vector<std::size_t> TrainReport::loss_increases() const
{
    std::vector<std::size_t> out;
    for (std::size_t e = 1; e < epochs.size(); ++e) {
        if (epochs[e].loss > epochs[e - 1].loss) {
            out.push_back(epochs[e].epoch);
        }
    }
    return out;
}

RowMatrix TrainedModel::features(const RowMatrix& raw) const
{
    const RowMatrix x = standardizer ? standardizer->apply(raw) : raw;
    if (concrete) {
        return gather_columns(x, concrete->row_argmax());
    }
    return gather_columns(x, inputs.bands());
}

std::vector<int> TrainedModel::predict(const RowMatrix& raw) const
{
    return predict_classes(net.forward(features(raw)));
}

TrainResult train(const TrainConfig& config, const Dataset& data, const Dataset* validation)
{
    data.validate();
    const std::size_t n = data.bands();
    const std::size_t c = data.n_classes;
    config.validate(n, c);
    if (validation != nullptr) {
        validation->validate();
        if (validation->bands() != n || validation->n_classes != c) {
            throw ValidationError("validation set shape does not match the training set");
        }
    }
    const Dataset& val = validation != nullptr ? *validation : data;

    Rng net_rng(config.seed, kNetStream);
    Rng selector_rng(config.seed, kSelectorStream);
    Rng shuffle_rng(config.seed, kShuffleStream);
    Rng noise_rng(config.seed, kNoiseStream);
    Rng baseline_rng(config.seed, kBaselineStream);

    TrainResult result;
    TrainedModel& model = result.model;
    TrainReport& report = result.report;
    model.method = config.method;

    RowMatrix x = data.spectra;
    RowMatrix x_val = val.spectra;
    if (config.standardize) {
        model.standardizer = Standardizer::fit(data.spectra);
        x = model.standardizer->apply(data.spectra);
        x_val = model.standardizer->apply(val.spectra);
    }
    const LossSpec loss = config.weighted_loss ? LossSpec::inverse_frequency(data.labels, c)
                                               : LossSpec::uniform(c);
    std::vector<std::size_t> order(data.samples());
    std::iota(order.begin(), order.end(), std::size_t{0});
    LoopContext ctx{x, data.labels, x_val, val.labels, loss, config, shuffle_rng, noise_rng,
                    order, report};

    switch (config.method) {
    case Method::chbs: {
        SelectorMatrix logits = config.init == InitScheme::segmented
                                    ? init_segmented_xavier(config.k, n, selector_rng)
                                    : init_plain_xavier(config.k, n, selector_rng);
        ConcreteStage stage(ConcreteLayer(std::move(logits), config.tau0, config.alpha, config.beta),
                            config);
        Classifier net(classifier_widths(config.k, config, c), net_rng);
        run_epochs(ctx, stage, net, config.epochs);
        const auto picks = stage.layer().selected_bands();
        for (const auto& epoch : report.epochs) {
            if (epoch.distinct < config.k) {
                report.collapse_events.push_back("epoch " + std::to_string(epoch.epoch) + ": " +
                                                 std::to_string(epoch.distinct) +
                                                 " distinct bands for k=" +
                                                 std::to_string(config.k));
            }
        }
        report.raw_picks = picks.raw_picks;
        report.final_tau = stage.layer().tau();
        result.selection = picks.selection;
        model.concrete = stage.layer();
        model.net = std::move(net);
        break;
    }
    case Method::ehbs: {
        const auto [phase1, phase2] = config.ehbs_phases();
        GateStage gates(GateLayer(n, config.sigma, lambda_for_k(config.lambda0, n, config.k),
                                  config.mu0),
                        config.k, config);
        Classifier net(classifier_widths(n, config, c), net_rng);
        run_epochs(ctx, gates, net, phase1);
        const BandSelection chosen = gates.layer().select_top_k(config.k);
        report.phase_boundary = phase1 + 1;
        report.log.push_back("phase 1 finished after epoch " + std::to_string(phase1) +
                             "; fine-tuning on bands " + chosen.joined() + " for " +
                             std::to_string(phase2) + " epochs");
        Classifier tuned = rebuild_for_bands(net, gates.layer(), chosen);
        FixedBandsStage fixed(chosen);
        run_epochs(ctx, fixed, tuned, phase2);
        result.selection = chosen;
        model.gates = gates.layer();
        model.inputs = chosen;
        model.net = std::move(tuned);
        break;
    }
    case Method::all_bands:
    case Method::random_k:
    case Method::variance_k: {
        BandSelection bands;
        if (config.method == Method::all_bands) {
            bands = all_bands(n);
        } else if (config.method == Method::random_k) {
            bands = random_bands(n, config.k, baseline_rng);
        } else {
            auto ranked = variance_rank(data);
            ranked.resize(config.k);
            bands = BandSelection::from_unordered(std::move(ranked));
        }
        FixedBandsStage stage(bands);
        Classifier net(classifier_widths(bands.size(), config, c), net_rng);
        run_epochs(ctx, stage, net, config.epochs);
        result.selection = bands;
        model.inputs = bands;
        model.net = std::move(net);
        break;
    }
    }
    report.final_selection = result.selection;
    return result;
}

const std::vector<std::string>& metric_names()
{
    static const std::vector<std::string> names{"oa",          "aa",           "kappa",
                                                "mean_iou",    "overall_iou",  "weighted_iou",
                                                "mean_precision", "mean_recall"};
    return names;
}

double metric_value(const EvaluationScores& s, std::size_t index)
{
    switch (index) {
    case 0:
        return s.oa;
    case 1:
        return s.aa;
    case 2:
        return s.kappa;
    case 3:
        return s.mean_iou;
    case 4:
        return s.overall_iou;
    case 5:
        return s.weighted_iou;
    case 6:
        return s.mean_precision;
    case 7:
        return s.mean_recall;
    default:
        throw ValidationError("metric index out of range");
    }
}

EvaluationScores evaluate(const TrainedModel& model, const Dataset& data)
{
    const auto predicted = model.predict(data.spectra);
    const auto cm = ConfusionMatrix::from_predictions(data.labels, predicted, data.n_classes);
    const auto per_class = per_class_iou_precision_recall(cm);
    EvaluationScores s;
    s.oa = overall_accuracy(cm);
    s.aa = average_accuracy(cm).value;
    s.kappa = kappa(cm).value;
    s.mean_iou = per_class.mean_iou;
    s.overall_iou = per_class.overall_iou;
    s.weighted_iou = per_class.weighted_iou;
    s.mean_precision = per_class.mean_precision;
    s.mean_recall = per_class.mean_recall;
    return s;
}

std::vector<std::vector<std::size_t>> kfold_partition(std::size_t samples, std::size_t folds,
                                                      std::uint64_t seed)
{
    if (folds < 2) {
        throw ValidationError("cross-validation needs at least 2 folds");
    }
    if (samples < folds) {
        throw ValidationError("too few samples (" + std::to_string(samples) + ") for " +
                              std::to_string(folds) + " folds");
    }
    std::vector<std::size_t> order(samples);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed, kFoldStream);
    for (std::size_t i = samples - 1; i > 0; --i) {
        std::swap(order[i], order[rng.uniform_index(i + 1)]);
    }
    std::vector<std::vector<std::size_t>> out(folds);
    const std::size_t base = samples / folds;
    const std::size_t extra = samples % folds;
    std::size_t cursor = 0;
    for (std::size_t f = 0; f < folds; ++f) {
        const std::size_t size = base + (f < extra ? 1 : 0);
        out[f].assign(order.begin() + static_cast<std::ptrdiff_t>(cursor),
                      order.begin() + static_cast<std::ptrdiff_t>(cursor + size));
        cursor += size;
    }
    return out;
}

std::size_t default_worker_count()
{
    if (const char* env = std::getenv("BANDGATE_THREADS")) {
        std::size_t value = 0;
        const std::string_view text(env);
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec == std::errc() && ptr == text.data() + text.size() && value > 0) {
            return value;
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

CrossValidationReport kfold_cross_validate(const TrainConfig& config, const Dataset& data,
                                           std::size_t folds, std::size_t workers)
{
    data.validate();
    config.validate(data.bands(), data.n_classes);
    const auto partition = kfold_partition(data.samples(), folds, config.seed);

    CrossValidationReport report;
    report.folds.resize(folds);
    std::vector<std::exception_ptr> errors(folds);

    auto run_fold = [&](std::size_t f) {
        try {
            std::vector<std::size_t> train_rows;
            for (std::size_t g = 0; g < folds; ++g) {
                if (g != f) {
                    train_rows.insert(train_rows.end(), partition[g].begin(), partition[g].end());
                }
            }
            std::sort(train_rows.begin(), train_rows.end());
            const Dataset train_set = data.subset(train_rows);
            const Dataset test_set = data.subset(partition[f]);
            TrainConfig fold_config = config;
            fold_config.seed = mix64(config.seed ^ mix64(f + 1));
            const auto trained = train(fold_config, train_set, &test_set);
            FoldResult& out = report.folds[f];
            out.fold = f;
            out.scores = evaluate(trained.model, test_set);
            out.selection = trained.selection;
            out.distinct = trained.selection.size();
        } catch (...) {
            errors[f] = std::current_exception();
        }
    };

    if (workers == 0) {
        workers = default_worker_count();
    }
    workers = std::min(workers, folds);
    if (workers <= 1) {
        for (std::size_t f = 0; f < folds; ++f) {
            run_fold(f);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t f = next++; f < folds; f = next++) {
                    run_fold(f);
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

    const std::size_t metrics = metric_names().size();
    report.mean.assign(metrics, 0.0);
    report.std.assign(metrics, 0.0);
    for (std::size_t i = 0; i < metrics; ++i) {
        double sum = 0.0;
        for (const auto& fold : report.folds) {
            sum += metric_value(fold.scores, i);
        }
        const double mean = sum / static_cast<double>(folds);
        double sq = 0.0;
        for (const auto& fold : report.folds) {
            const double d = metric_value(fold.scores, i) - mean;
            sq += d * d;
        }
        report.mean[i] = mean;
        report.std[i] = std::sqrt(sq / static_cast<double>(folds - 1));
    }
    return report;
}

} // namespace bandgate

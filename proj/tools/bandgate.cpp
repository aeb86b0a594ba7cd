#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bandgate/data.hpp"
#include "bandgate/error.hpp"
#include "bandgate/report.hpp"
#include "bandgate/training.hpp"

using namespace bandgate;

namespace {

// Keys shared by the config file and the train/sweep flags.
const std::vector<std::pair<std::string, std::string>> kTrainKeys = {
    {"method", "chbs | ehbs | all-bands | random-k | variance-k"},
    {"k", "number of bands to select"},
    {"epochs", "training epochs"},
    {"batch-size", "mini-batch size"},
    {"learning-rate", "optimizer step size"},
    {"optimizer", "adam | sgd"},
    {"hidden", "hidden layer widths, e.g. 64,32"},
    {"standardize", "z-score bands on the training split (true/false)"},
    {"weighted-loss", "inverse-frequency class weights (true/false)"},
    {"seed", "master seed"},
    {"tau", "initial concrete temperature"},
    {"alpha", "per-batch temperature decay"},
    {"beta", "upper bound of the Gumbel uniform draw"},
    {"init", "segmented | plain"},
    {"sigma", "gate noise std"},
    {"mu0", "initial gate mean"},
    {"lambda0", "gate regularizer weight before the n/k scaling"},
    {"phase2-epochs", "gate fine-tuning epochs (default: 20% of epochs)"},
};

struct ConfigFlags {
    std::map<std::string, std::string> values;
    std::string config_file;
    std::string preset;
    bool dump = false;

    void attach(CLI::App& cmd)
    {
        for (const auto& [key, help] : kTrainKeys) {
            cmd.add_option("--" + key, values[key], help);
        }
        cmd.add_option("--config", config_file, "key=value file; flags override its entries")
            ->check(CLI::ExistingFile);
        cmd.add_option("--preset", preset, "start from a named preset")
            ->check(CLI::IsMember({"reference"}));
        cmd.add_flag("--dump-config", dump, "print the effective config and exit");
    }

    TrainConfig resolve(const CLI::App& cmd) const
    {
        TrainConfig config = preset == "reference" ? TrainConfig::reference_defaults() : TrainConfig{};
        if (!config_file.empty()) {
            std::ifstream in(config_file);
            std::stringstream text;
            text << in.rdbuf();
            config = parse_config(text.str(), config);
        }
        for (const auto& [key, help] : kTrainKeys) {
            if (cmd.count("--" + key) > 0) {
                apply_config_entry(config, key, values.at(key));
            }
        }
        return config;
    }
};

void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path + " for writing");
    }
    out << text;
    if (!out.flush()) {
        throw std::runtime_error("write to " + path + " failed");
    }
}

std::string join(const std::vector<std::size_t>& values, const char* sep)
{
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        out += (i ? sep : "") + std::to_string(values[i]);
    }
    return out;
}

std::string fmt(double value, int digits = 4)
{
    char buffer[64];
    std::snprintf(buffer, sizeof buffer, "%.*f", digits, value);
    return buffer;
}

// "2,4,6" or "2..10" or a mix like "2..4,8"
std::vector<std::size_t> parse_k_list(const std::vector<std::string>& items)
{
    std::vector<std::size_t> out;
    for (const auto& item : items) {
        const auto dots = item.find("..");
        try {
            if (dots == std::string::npos) {
                out.push_back(std::stoul(item));
                continue;
            }
            const std::size_t lo = std::stoul(item.substr(0, dots));
            const std::size_t hi = std::stoul(item.substr(dots + 2));
            if (lo > hi) {
                throw ValidationError("k range '" + item + "' is empty");
            }
            for (std::size_t k = lo; k <= hi; ++k) {
                out.push_back(k);
            }
        } catch (const std::logic_error& e) {
            if (dynamic_cast<const ValidationError*>(&e)) {
                throw;
            }
            throw ValidationError("k list entry '" + item + "' is not a number or range");
        }
    }
    return out;
}

int cmd_gen(const SyntheticSpec& spec, const std::string& out)
{
    spec.validate();
    const Dataset data = generate(spec);
    save_csv(data, out);
    std::cout << "wrote " << out << ": n=" << data.bands() << " m=" << data.samples()
              << " c=" << data.n_classes << " informative=[" << join(spec.informative, ",")
              << "]\n";
    return 0;
}

int cmd_train(const TrainConfig& config, const std::string& data_path,
              const std::string& progress_path, const std::string& checkpoint_path)
{
    const Dataset data = load_csv(data_path);
    config.validate(data.bands(), data.n_classes);
    const auto result = train(config, data);

    for (const auto& line : result.report.log) {
        std::cout << "# " << line << '\n';
    }
    for (const auto& event : result.report.collapse_events) {
        std::cout << "# collapse: " << event << '\n';
    }

    std::string csv = "epoch,loss,val_oa,selected_bands\n";
    for (const auto& e : result.report.epochs) {
        char loss[32];
        char oa[32];
        std::snprintf(loss, sizeof loss, "%.17g", e.loss);
        std::snprintf(oa, sizeof oa, "%.17g", e.val_oa);
        csv += std::to_string(e.epoch) + ',' + loss + ',' + oa + ',' + e.selection.joined() + '\n';
    }
    write_text(progress_path, csv);
    result.model.net.save(checkpoint_path);

    const auto& bands = result.selection.bands();
    std::cout << "selected bands: " << join(bands, " ") << '\n';
    return 0;
}

int cmd_sweep(const SweepSpec& spec, const std::string& data_path, const std::string& out)
{
    const Dataset data = load_csv(data_path);
    spec.validate(data.bands());
    const auto result = run_sweep(spec, data);
    write_text(out, sweep_csv(result));
    std::cout << "wrote " << out << " (" << result.cells.size() << " method/k cells, "
              << spec.folds << " folds)\n";
    for (const auto& [method, auc] : result.auc) {
        std::cout << method << " bands_auc=" << fmt(auc) << '\n';
    }
    return 0;
}

int cmd_report(const std::string& input, const std::string& out)
{
    std::ifstream in(input, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + input);
    }
    std::stringstream text;
    text << in.rdbuf();
    const auto curves = parse_sweep_csv(text.str());
    const std::string svg = render_svg(curves);
    write_text(out, svg);

    std::cout << "method,points,bands_auc\n";
    for (const auto& [method, curve] : curves.curves) {
        const auto it = curves.auc.find(method);
        std::cout << method << ',' << curve.points.size() << ','
                  << (it == curves.auc.end() ? std::string("n/a") : fmt(it->second)) << '\n';
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Differentiable band selection: generate data, train, sweep, report"};
    app.require_subcommand(1);

    SyntheticSpec gen_spec;
    std::string gen_out;
    auto* gen = app.add_subcommand("gen", "write a planted-band synthetic dataset");
    gen->add_option("--bands", gen_spec.n_bands, "spectral bands")->capture_default_str();
    gen->add_option("--classes", gen_spec.n_classes, "classes")->capture_default_str();
    gen->add_option("--samples", gen_spec.samples, "spectra")->capture_default_str();
    gen->add_option("--informative", gen_spec.informative, "class-dependent bands, e.g. 3,11,19")
        ->delimiter(',');
    gen->add_option("--gap", gen_spec.class_signature_gap, "spacing of class mean levels")
        ->capture_default_str();
    gen->add_option("--noise", gen_spec.noise_std, "additive noise std")->capture_default_str();
    gen->add_option("--correlation-width", gen_spec.correlation_width,
                    "background smoothing half-width")
        ->capture_default_str();
    gen->add_option("--seed", gen_spec.seed, "generator seed")->capture_default_str();
    gen->add_option("--out", gen_out, "output CSV")->required();

    ConfigFlags train_flags;
    std::string train_data;
    std::string progress_path = "progress.csv";
    std::string checkpoint_path = "model.bgnet";
    auto* tr = app.add_subcommand("train", "train a selector and classifier on a dataset");
    train_flags.attach(*tr);
    tr->add_option("--data", train_data, "dataset CSV");
    tr->add_option("--progress", progress_path, "per-epoch progression CSV")
        ->capture_default_str();
    tr->add_option("--checkpoint", checkpoint_path, "classifier checkpoint")
        ->capture_default_str();

    ConfigFlags sweep_flags;
    std::string sweep_data;
    std::string sweep_out;
    std::vector<std::string> sweep_methods{"chbs", "random-k"};
    std::vector<std::string> sweep_ks{"2..10"};
    std::size_t sweep_folds = 5;
    auto* sw = app.add_subcommand("sweep", "k-fold cross-validation over methods and k");
    sweep_flags.attach(*sw);
    sw->add_option("--data", sweep_data, "dataset CSV");
    sw->add_option("--methods", sweep_methods, "methods to compare")->delimiter(',');
    sw->add_option("--ks", sweep_ks, "k values, e.g. 2,4,6 or 2..10")->delimiter(',');
    sw->add_option("--folds", sweep_folds, "cross-validation folds")->capture_default_str();
    sw->add_option("--out", sweep_out, "sweep CSV");

    std::string report_in;
    std::string report_out;
    auto* rp = app.add_subcommand("report", "plot a sweep CSV as an SVG");
    rp->add_option("--input", report_in, "sweep CSV")->required();
    rp->add_option("--out", report_out, "output SVG")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) {
            return cmd_gen(gen_spec, gen_out);
        }
        if (tr->parsed()) {
            const TrainConfig config = train_flags.resolve(*tr);
            if (train_flags.dump) {
                std::cout << echo_config(config);
                return 0;
            }
            if (train_data.empty()) {
                throw ValidationError("train: --data is required");
            }
            return cmd_train(config, train_data, progress_path, checkpoint_path);
        }
        if (sw->parsed()) {
            SweepSpec spec;
            spec.base = sweep_flags.resolve(*sw);
            if (sweep_flags.dump) {
                std::cout << echo_config(spec.base);
                return 0;
            }
            if (sweep_data.empty() || sweep_out.empty()) {
                throw ValidationError("sweep: --data and --out are required");
            }
            for (const auto& name : sweep_methods) {
                spec.methods.push_back(parse_method(name));
            }
            spec.ks = parse_k_list(sweep_ks);
            spec.folds = sweep_folds;
            return cmd_sweep(spec, sweep_data, sweep_out);
        }
        if (rp->parsed()) {
            return cmd_report(report_in, report_out);
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

#include "bandgate/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>

#include "bandgate/error.hpp"
#include "bandgate/math.hpp"

namespace bandgate {

namespace {

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::string line_prefix(std::size_t line)
{
    return "line " + std::to_string(line) + ": ";
}

template <typename T>
bool parse_number(std::string_view text, T& out)
{
    text = trim(text);
    if (!text.empty() && text.front() == '+') {
        text.remove_prefix(1);
    }
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc() && ptr == text.data() + text.size() && !text.empty();
}

void append_double(std::string& out, double value)
{
    char buffer[32];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
    out.append(buffer, ptr);
}

} // namespace

void Dataset::validate() const
{
    if (labels.empty() || spectra.rows() == 0) {
        throw ValidationError("dataset is empty");
    }
    if (static_cast<std::size_t>(spectra.rows()) != labels.size()) {
        throw ValidationError("dataset has " + std::to_string(spectra.rows()) + " spectra but " +
                              std::to_string(labels.size()) + " labels");
    }
    if (spectra.cols() == 0) {
        throw ValidationError("dataset has no bands");
    }
    if (n_classes == 0) {
        throw ValidationError("dataset needs at least one class");
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= n_classes) {
            throw ValidationError("sample " + std::to_string(i) + " has label " +
                                  std::to_string(labels[i]) + " outside [0, " +
                                  std::to_string(n_classes) + ")");
        }
    }
    if (!spectra.allFinite()) {
        throw ValidationError("dataset contains non-finite values");
    }
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const
{
    Dataset out;
    out.n_classes = n_classes;
    out.spatial = spatial;
    out.spectra.resize(static_cast<Eigen::Index>(rows.size()), spectra.cols());
    out.labels.resize(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.spectra.row(static_cast<Eigen::Index>(r)) =
            spectra.row(static_cast<Eigen::Index>(rows[r]));
        out.labels[r] = labels.at(rows[r]);
    }
    return out;
}

RowMatrix Dataset::select_bands(const BandSelection& selection) const
{
    RowMatrix out(spectra.rows(), static_cast<Eigen::Index>(selection.size()));
    for (std::size_t j = 0; j < selection.size(); ++j) {
        if (selection[j] >= bands()) {
            throw ValidationError("band " + std::to_string(selection[j]) + " out of range");
        }
        out.col(static_cast<Eigen::Index>(j)) = spectra.col(static_cast<Eigen::Index>(selection[j]));
    }
    return out;
}

void SyntheticSpec::validate() const
{
    if (n_bands == 0) {
        throw ValidationError("synthetic spec: bands must be >= 1");
    }
    if (n_classes < 2) {
        throw ValidationError("synthetic spec: classes must be >= 2");
    }
    if (samples == 0) {
        throw ValidationError("synthetic spec: samples must be >= 1");
    }
    if (!(class_signature_gap > 0.0)) {
        throw ValidationError("synthetic spec: class signature gap must be > 0");
    }
    if (!(noise_std >= 0.0)) {
        throw ValidationError("synthetic spec: noise std must be >= 0");
    }
    std::vector<bool> seen(n_bands, false);
    for (std::size_t band : informative) {
        if (band >= n_bands) {
            throw ValidationError("synthetic spec: informative band " + std::to_string(band) +
                                  " is not below bands=" + std::to_string(n_bands));
        }
        if (seen[band]) {
            throw ValidationError("synthetic spec: informative band " + std::to_string(band) +
                                  " listed twice");
        }
        seen[band] = true;
    }
}

Dataset generate(const SyntheticSpec& spec)
{
    spec.validate();
    const std::size_t n = spec.n_bands;
    const std::size_t c = spec.n_classes;
    const std::size_t m = spec.samples;
    Rng level_rng(spec.seed, 1);
    Rng label_rng(spec.seed, 2);
    Rng sample_rng(spec.seed, 3);

    // levels[b][class] for each informative band b.
    std::vector<std::vector<double>> levels;
    const double centre = 0.5 * static_cast<double>(c - 1) * spec.class_signature_gap;
    for (std::size_t b = 0; b < spec.informative.size(); ++b) {
        std::vector<std::size_t> order(c);
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t i = c - 1; i > 0; --i) {
            std::swap(order[i], order[level_rng.uniform_index(i + 1)]);
        }
        std::vector<double> row(c);
        for (std::size_t t = 0; t < c; ++t) {
            row[t] = static_cast<double>(order[t]) * spec.class_signature_gap - centre;
        }
        levels.push_back(std::move(row));
    }
    std::vector<int> informative_slot(n, -1);
    for (std::size_t b = 0; b < spec.informative.size(); ++b) {
        informative_slot[spec.informative[b]] = static_cast<int>(b);
    }

    Dataset data;
    data.n_classes = c;
    data.labels.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        data.labels[i] = static_cast<int>(i % c);
    }
    for (std::size_t i = m - 1; i > 0; --i) {
        std::swap(data.labels[i], data.labels[label_rng.uniform_index(i + 1)]);
    }

    const std::size_t w = spec.correlation_width;
    const double smoothing = 1.0 / std::sqrt(static_cast<double>(2 * w + 1));
    data.spectra.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    std::vector<double> field(n + 2 * w);
    for (std::size_t i = 0; i < m; ++i) {
        for (double& v : field) {
            v = sample_rng.standard_normal();
        }
        const auto label = static_cast<std::size_t>(data.labels[i]);
        for (std::size_t j = 0; j < n; ++j) {
            const double baseline =
                0.5 + 0.25 * std::sin(2.0 * std::numbers::pi * static_cast<double>(j) /
                                      static_cast<double>(n));
            double value = baseline;
            if (informative_slot[j] >= 0) {
                value += levels[static_cast<std::size_t>(informative_slot[j])][label];
            } else {
                // Window sum of 2w+1 unit normals, rescaled to unit variance.
                double acc = 0.0;
                for (std::size_t o = 0; o <= 2 * w; ++o) {
                    acc += field[j + o];
                }
                value += acc * smoothing;
            }
            if (spec.noise_std > 0.0) {
                value += spec.noise_std * sample_rng.standard_normal();
            }
            data.spectra(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = value;
        }
    }
    return data;
}

Dataset load_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    std::size_t n = 0;
    Dataset data;
    std::vector<double> values;

    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view text = trim(line);
        if (text.empty()) {
            continue;
        }
        if (!have_header) {
            std::istringstream tokens{std::string(text)};
            std::string token;
            std::optional<std::size_t> bands;
            std::optional<std::size_t> classes;
            SpatialShape shape;
            bool has_shape = false;
            while (tokens >> token) {
                const auto eq = token.find('=');
                std::size_t value = 0;
                if (eq == std::string::npos ||
                    !parse_number(std::string_view(token).substr(eq + 1), value)) {
                    throw ValidationError(line_prefix(line_no) + "malformed header token '" +
                                          token + "'");
                }
                const std::string key = token.substr(0, eq);
                if (key == "bands") {
                    bands = value;
                } else if (key == "classes") {
                    classes = value;
                } else if (key == "height") {
                    shape.height = value;
                    has_shape = true;
                } else if (key == "width") {
                    shape.width = value;
                    has_shape = true;
                } else {
                    throw ValidationError(line_prefix(line_no) + "unknown header key '" + key +
                                          "'");
                }
            }
            if (!bands || !classes || *bands == 0 || *classes == 0) {
                throw ValidationError(line_prefix(line_no) +
                                      "malformed header, expected 'bands=<n> classes=<c>'");
            }
            n = *bands;
            data.n_classes = *classes;
            if (has_shape) {
                data.spatial = shape;
            }
            have_header = true;
            continue;
        }

        std::size_t fields = 0;
        std::size_t start = 0;
        const std::size_t before = values.size();
        int label = -1;
        while (true) {
            const auto comma = text.find(',', start);
            const auto field = text.substr(start, comma == std::string_view::npos
                                                      ? std::string_view::npos
                                                      : comma - start);
            if (fields == 0) {
                if (!parse_number(field, label)) {
                    throw ValidationError(line_prefix(line_no) + "label '" + std::string(field) +
                                          "' is not an integer");
                }
                if (label < 0 || static_cast<std::size_t>(label) >= data.n_classes) {
                    throw ValidationError(line_prefix(line_no) + "label " +
                                          std::to_string(label) + " outside [0, " +
                                          std::to_string(data.n_classes) + ")");
                }
            } else {
                double v = 0.0;
                if (!parse_number(field, v)) {
                    throw ValidationError(line_prefix(line_no) + "value '" + std::string(field) +
                                          "' is not a number");
                }
                if (!std::isfinite(v)) {
                    throw ValidationError(line_prefix(line_no) + "non-finite value");
                }
                values.push_back(v);
            }
            ++fields;
            if (comma == std::string_view::npos) {
                break;
            }
            start = comma + 1;
        }
        if (fields != n + 1) {
            values.resize(before);
            throw ValidationError(line_prefix(line_no) + "ragged row: expected " +
                                  std::to_string(n + 1) + " fields (label + " +
                                  std::to_string(n) + " bands), got " + std::to_string(fields));
        }
        data.labels.push_back(label);
    }
    if (!have_header) {
        throw ValidationError(path.string() + ": empty dataset file");
    }
    if (data.labels.empty()) {
        throw ValidationError(path.string() + ": dataset has a header but no samples");
    }
    data.spectra = Eigen::Map<RowMatrix>(values.data(),
                                         static_cast<Eigen::Index>(data.labels.size()),
                                         static_cast<Eigen::Index>(n));
    data.validate();
    return data;
}

void save_csv(const Dataset& data, const std::filesystem::path& path)
{
    data.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    std::string buffer = "bands=" + std::to_string(data.bands()) +
                         " classes=" + std::to_string(data.n_classes);
    if (data.spatial) {
        buffer += " height=" + std::to_string(data.spatial->height) +
                  " width=" + std::to_string(data.spatial->width);
    }
    buffer += '\n';
    for (std::size_t i = 0; i < data.samples(); ++i) {
        buffer += std::to_string(data.labels[i]);
        for (Eigen::Index j = 0; j < data.spectra.cols(); ++j) {
            buffer += ',';
            append_double(buffer, data.spectra(static_cast<Eigen::Index>(i), j));
        }
        buffer += '\n';
        if (buffer.size() > (1u << 20)) {
            out << buffer;
            buffer.clear();
        }
    }
    out << buffer;
    if (!out) {
        throw std::runtime_error("write to " + path.string() + " failed");
    }
}

std::vector<std::size_t> variance_rank(const Dataset& data)
{
    if (data.samples() < 2) {
        throw ValidationError("variance_rank needs at least two samples");
    }
    const Eigen::RowVectorXd mean = data.spectra.colwise().mean();
    const Eigen::RowVectorXd var =
        (data.spectra.rowwise() - mean).array().square().colwise().mean();
    std::vector<std::size_t> order(data.bands());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&var](std::size_t a, std::size_t b) {
        return var(static_cast<Eigen::Index>(a)) > var(static_cast<Eigen::Index>(b));
    });
    return order;
}

Standardizer Standardizer::fit(const RowMatrix& spectra)
{
    Standardizer s;
    s.mean = spectra.colwise().mean();
    const Eigen::RowVectorXd var =
        (spectra.rowwise() - s.mean).array().square().colwise().mean();
    s.scale = var.array().sqrt();
    for (Eigen::Index j = 0; j < s.scale.size(); ++j) {
        if (!(s.scale(j) > 1e-12)) {
            s.scale(j) = 1.0;
        }
    }
    return s;
}

RowMatrix Standardizer::apply(const RowMatrix& spectra) const
{
    return (spectra.rowwise() - mean).array().rowwise() / scale.array();
}

} // namespace bandgate

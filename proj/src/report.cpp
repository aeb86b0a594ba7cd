#include "bandgate/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "bandgate/error.hpp"

namespace bandgate {

namespace {

std::string format_double(double value)
{
    char buffer[32];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
    return std::string(buffer, ptr);
}

std::string fixed(double value, int digits)
{
    char buffer[64];
    std::snprintf(buffer, sizeof buffer, "%.*f", digits, value);
    return buffer;
}

std::string xml_escape(std::string_view text)
{
    std::string out;
    for (char ch : text) {
        switch (ch) {
        case '&':
            out += "&amp;";
            break;
        case '<':
            out += "&lt;";
            break;
        case '>':
            out += "&gt;";
            break;
        case '"':
            out += "&quot;";
            break;
        default:
            out += ch;
        }
    }
    return out;
}

std::vector<std::string_view> split(std::string_view line, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos) {
            return out;
        }
        start = pos + 1;
    }
}

template <typename T>
bool parse_number(std::string_view text, T& out)
{
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc() && ptr == text.data() + text.size() && !text.empty();
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#17becf"};

} // namespace

void SweepSpec::validate(std::size_t n_bands) const
{
    if (methods.empty()) {
        throw ValidationError("sweep needs at least one method");
    }
    if (ks.empty()) {
        throw ValidationError("sweep needs at least one k");
    }
    for (std::size_t k : ks) {
        if (k == 0 || k > n_bands) {
            throw ValidationError("sweep k=" + std::to_string(k) + " outside [1, " +
                                  std::to_string(n_bands) + "]");
        }
    }
    if (folds < 2) {
        throw ValidationError("sweep needs at least 2 folds");
    }
}

SweepResult run_sweep(const SweepSpec& spec, const Dataset& data, std::size_t workers)
{
    spec.validate(data.bands());
    std::vector<Method> methods = spec.methods;
    std::sort(methods.begin(), methods.end(),
              [](Method a, Method b) { return to_string(a) < to_string(b); });
    methods.erase(std::unique(methods.begin(), methods.end()), methods.end());
    std::vector<std::size_t> ks = spec.ks;
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

    SweepResult result;
    for (Method method : methods) {
        BandsCurve curve;
        for (std::size_t k : ks) {
            TrainConfig config = spec.base;
            config.method = method;
            config.k = k;
            auto cv = kfold_cross_validate(config, data, spec.folds, workers);
            curve.points.emplace_back(k, cv.mean[0]);
            result.cells.push_back({method, k, std::move(cv)});
        }
        if (curve.points.size() >= 2) {
            result.auc[std::string(to_string(method))] = bands_auc(curve);
        }
    }
    return result;
}

std::string sweep_csv(const SweepResult& result)
{
    std::string out = "method,k,fold,metric,value\n";
    const auto& names = metric_names();
    for (const auto& cell : result.cells) {
        for (const auto& fold : cell.cv.folds) {
            for (std::size_t m = 0; m < names.size(); ++m) {
                out += std::string(to_string(cell.method)) + ',' + std::to_string(cell.k) + ',' +
                       std::to_string(fold.fold) + ',' + names[m] + ',' +
                       format_double(metric_value(fold.scores, m)) + '\n';
            }
        }
    }
    for (const auto& [method, auc] : result.auc) {
        out += method + ",all,mean,bands_auc," + format_double(auc) + '\n';
    }
    return out;
}

SweepCurves parse_sweep_csv(std::string_view text)
{
    std::map<std::string, std::map<std::size_t, std::pair<double, std::size_t>>> sums;
    SweepCurves result;
    std::size_t line_no = 0;
    bool header = false;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line.empty()) {
            continue;
        }
        if (!header) {
            if (line != "method,k,fold,metric,value") {
                throw ValidationError("sweep CSV line " + std::to_string(line_no) +
                                      ": expected header 'method,k,fold,metric,value'");
            }
            header = true;
            continue;
        }
        const auto fields = split(line, ',');
        if (fields.size() != 5) {
            throw ValidationError("sweep CSV line " + std::to_string(line_no) +
                                  ": expected 5 fields");
        }
        double value = 0.0;
        if (!parse_number(fields[4], value)) {
            throw ValidationError("sweep CSV line " + std::to_string(line_no) +
                                  ": value is not a number");
        }
        const std::string method(fields[0]);
        if (fields[3] == "bands_auc") {
            result.auc[method] = value;
            continue;
        }
        if (fields[3] != "oa") {
            continue;
        }
        std::size_t k = 0;
        std::size_t fold = 0;
        if (!parse_number(fields[1], k) || !parse_number(fields[2], fold)) {
            throw ValidationError("sweep CSV line " + std::to_string(line_no) +
                                  ": k and fold must be integers");
        }
        auto& slot = sums[method][k];
        slot.first += value;
        slot.second += 1;
    }
    if (sums.empty()) {
        throw ValidationError("sweep CSV has no overall-accuracy rows");
    }
    for (const auto& [method, by_k] : sums) {
        BandsCurve curve;
        for (const auto& [k, acc] : by_k) {
            curve.points.emplace_back(k, acc.first / static_cast<double>(acc.second));
        }
        if (!result.auc.contains(method) && curve.points.size() >= 2) {
            result.auc[method] = bands_auc(curve);
        }
        result.curves[method] = std::move(curve);
    }
    return result;
}

std::string render_svg(const SweepCurves& curves)
{
    if (curves.curves.empty()) {
        throw ValidationError("nothing to plot");
    }
    constexpr double width = 800.0;
    constexpr double height = 500.0;
    constexpr double left = 0.1 * width;
    constexpr double right = width - 0.1 * width;
    constexpr double top = 0.1 * height;
    constexpr double bottom = height - 0.1 * height;

    std::set<std::size_t> ks;
    double lo = 1.0;
    double hi = 0.0;
    for (const auto& [method, curve] : curves.curves) {
        for (const auto& [k, score] : curve.points) {
            ks.insert(k);
            lo = std::min(lo, score);
            hi = std::max(hi, score);
        }
    }
    double y_min = std::floor(lo * 10.0) / 10.0;
    double y_max = std::ceil(hi * 10.0) / 10.0;
    if (y_max - y_min < 0.1) {
        y_max = y_min + 0.1;
    }
    double k_min = static_cast<double>(*ks.begin());
    double k_max = static_cast<double>(*ks.rbegin());
    if (k_max == k_min) {
        k_min -= 1.0;
        k_max += 1.0;
    }
    const auto px = [&](double k) { return left + (k - k_min) / (k_max - k_min) * (right - left); };
    const auto py = [&](double s) {
        return bottom - (s - y_min) / (y_max - y_min) * (bottom - top);
    };

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"500\" "
           "viewBox=\"0 0 800 500\" font-family=\"sans-serif\" font-size=\"12\">\n"
        << "<rect x=\"0\" y=\"0\" width=\"800\" height=\"500\" fill=\"white\"/>\n"
        << "<text x=\"400\" y=\"30\" text-anchor=\"middle\" font-size=\"15\">"
           "Overall accuracy vs. number of selected bands</text>\n";

    svg << "<g stroke=\"black\" stroke-width=\"1\">\n"
        << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << right << "\" y2=\""
        << bottom << "\"/>\n"
        << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
        << bottom << "\"/>\n"
        << "</g>\n";

    svg << "<g class=\"x-ticks\">\n";
    for (std::size_t k : ks) {
        const double x = px(static_cast<double>(k));
        svg << "<line x1=\"" << fixed(x, 2) << "\" y1=\"" << bottom << "\" x2=\"" << fixed(x, 2)
            << "\" y2=\"" << bottom + 5 << "\" stroke=\"black\"/>"
            << "<text x=\"" << fixed(x, 2) << "\" y=\"" << bottom + 18
            << "\" text-anchor=\"middle\">" << k << "</text>\n";
    }
    svg << "</g>\n<g class=\"y-ticks\">\n";
    const int steps = static_cast<int>(std::lround((y_max - y_min) * 10.0));
    for (int i = 0; i <= steps; ++i) {
        const double s = y_min + 0.1 * i;
        const double y = py(s);
        svg << "<line x1=\"" << left - 5 << "\" y1=\"" << fixed(y, 2) << "\" x2=\"" << left
            << "\" y2=\"" << fixed(y, 2) << "\" stroke=\"black\"/>"
            << "<text x=\"" << left - 8 << "\" y=\"" << fixed(y + 4, 2)
            << "\" text-anchor=\"end\">" << fixed(s, 1) << "</text>\n";
    }
    svg << "</g>\n";
    svg << "<text x=\"400\" y=\"" << height - 12
        << "\" text-anchor=\"middle\">Number of selected bands</text>\n"
        << "<text x=\"20\" y=\"250\" text-anchor=\"middle\" transform=\"rotate(-90 20 250)\">"
           "Overall accuracy</text>\n";

    std::size_t index = 0;
    for (const auto& [method, curve] : curves.curves) {
        const char* colour = kPalette[index % std::size(kPalette)];
        auto points = curve.points;
        std::sort(points.begin(), points.end());
        svg << "<polyline class=\"curve\" data-method=\"" << xml_escape(method)
            << "\" fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < points.size(); ++i) {
            svg << (i ? " " : "") << fixed(px(static_cast<double>(points[i].first)), 2) << ','
                << fixed(py(points[i].second), 2);
        }
        svg << "\"/>\n";

        const double ly = top + 10.0 + 18.0 * static_cast<double>(index);
        std::string label = method;
        if (const auto it = curves.auc.find(method); it != curves.auc.end()) {
            label += " (AUC " + fixed(it->second, 4) + ")";
        }
        svg << "<line x1=\"" << right - 190 << "\" y1=\"" << ly << "\" x2=\"" << right - 165
            << "\" y2=\"" << ly << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>"
            << "<text x=\"" << right - 160 << "\" y=\"" << ly + 4 << "\">" << xml_escape(label)
            << "</text>\n";
        ++index;
    }
    svg << "</svg>\n";
    return svg.str();
}

} // namespace bandgate

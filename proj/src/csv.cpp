#include "gasest/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>
#include <vector>

#include "gasest/errors.hpp"

namespace gasest::csv {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

double parse_double(const std::string& text, std::size_t line_no) {
    double value = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
        throw IoError("line " + std::to_string(line_no) + ": bad number '" + text + "'");
    }
    return value;
}

} // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw IoError("number formatting failed");
    return std::string(buf, ptr);
}

void write_timeseries(std::ostream& out, const TimeSeries& series,
                      double background_ppm) {
    const double offset = series.above_background ? background_ppm : 0.0;
    out << "time_s,concentration_ppm,occupancy_true\n";
    const bool with_truth = series.truth.size() == series.y.size();
    for (std::size_t i = 0; i < series.y.size(); ++i) {
        out << format_double(series.time_of(i)) << ','
            << format_double(series.y[i] + offset) << ',';
        if (with_truth) out << format_double(series.truth[i]);
        out << '\n';
    }
}

TimeSeries read_timeseries(std::istream& in, double background_ppm) {
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty data file");

    TimeSeries series;
    series.above_background = true;
    std::vector<double> times;
    std::size_t line_no = 1;
    bool any_truth = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto fields = split_fields(line);
        if (fields.size() < 2) {
            throw IoError("line " + std::to_string(line_no) + ": expected at least 2 columns");
        }
        times.push_back(parse_double(fields[0], line_no));
        series.y.push_back(parse_double(fields[1], line_no) - background_ppm);
        if (fields.size() >= 3 && !fields[2].empty()) {
            series.truth.push_back(parse_double(fields[2], line_no));
            any_truth = true;
        }
    }
    if (times.empty()) throw IoError("data file has no samples");
    if (any_truth && series.truth.size() != series.y.size()) {
        throw IoError("occupancy column must be present on every row or none");
    }

    series.has_t0 = times.front() == 0.0;
    if (times.size() >= 2) {
        series.ts = times[1] - times[0];
    } else {
        series.ts = series.has_t0 ? 0.0 : times.front();
    }
    if (!(series.ts > 0.0)) {
        throw IoError("samples must advance with a positive time step");
    }
    for (std::size_t i = 0; i + 1 < times.size(); ++i) {
        const double step = times[i + 1] - times[i];
        if (std::abs(step - series.ts) > 1e-9 * std::max(1.0, series.ts)) {
            throw IoError("samples must be evenly spaced");
        }
    }
    return series;
}

TimeSeries read_timeseries_file(const std::string& path, double background_ppm) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    return read_timeseries(in, background_ppm);
}

void write_timeseries_file(const std::string& path, const TimeSeries& series,
                           double background_ppm) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write_timeseries(out, series, background_ppm);
    if (!out) throw IoError("write to '" + path + "' failed");
}

} // namespace gasest::csv

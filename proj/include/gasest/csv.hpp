#pragma once

#include <iosfwd>
#include <string>

#include "gasest/model.hpp"

namespace gasest::csv {

// Shortest decimal form that parses back to the same double; "." decimal
// point, no grouping, so repeated runs emit byte-identical files.
std::string format_double(double v);

// Header `time_s,concentration_ppm,occupancy_true`; concentrations are raw
// (background added back) when the series is above-background.
void write_timeseries(std::ostream& out, const TimeSeries& series,
                      double background_ppm);

// Reads the write_timeseries layout (occupancy column optional) and returns
// an above-background series; `background_ppm` is subtracted from the values.
TimeSeries read_timeseries(std::istream& in, double background_ppm);

TimeSeries read_timeseries_file(const std::string& path, double background_ppm);
void write_timeseries_file(const std::string& path, const TimeSeries& series,
                           double background_ppm);

} // namespace gasest::csv

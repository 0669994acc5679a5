#pragma once

#include <initializer_list>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "kscrit/grid.hpp"

namespace kscrit {

/// Shortest-safe decimal with 17 significant digits (round-trips a double).
std::string format_double(double v);

void write_csv_row(std::ostream& os, std::initializer_list<double> row);
void write_csv_row(std::ostream& os, const std::vector<double>& row);

/// Columns: x, value.
void write_snapshot_csv(const Snapshot& s, const std::string& path);
/// Nodes and values from a two-column CSV; time and boundary data supplied.
Snapshot read_snapshot_csv(const std::string& path, double time = 0.0);

/// {grid, values, time, bc} with 17-digit decimal strings for bit-exact reload.
nlohmann::json snapshot_to_json(const Snapshot& s);
Snapshot snapshot_from_json(const nlohmann::json& j);

/// Columns: r, value.
void write_radial_csv(const RadialField& f, const std::string& path);
nlohmann::json radial_to_json(const RadialField& f);
RadialField radial_from_json(const nlohmann::json& j);

/// Write text to a file, throwing ConfigError on failure.
void write_text(const std::string& path, const std::string& text);

}  // namespace kscrit

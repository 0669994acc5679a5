#include "kscrit/field_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "kscrit/errors.hpp"

namespace kscrit {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& s) {
    double v = 0.0;
    const char* first = s.data();
    while (first != s.data() + s.size() && (*first == ' ' || *first == '+')) ++first;
    auto res = std::from_chars(first, s.data() + s.size(), v);
    if (res.ec != std::errc()) throw InvalidInput("cannot parse number '" + s + "'");
    return v;
}

template <class Range>
void write_row(std::ostream& os, const Range& row) {
    bool first = true;
    for (double v : row) {
        if (!first) os << ',';
        os << format_double(v);
        first = false;
    }
    os << '\n';
}

nlohmann::json encode(const std::vector<double>& v) {
    auto a = nlohmann::json::array();
    for (double x : v) a.push_back(format_double(x));
    return a;
}

std::vector<double> decode(const nlohmann::json& a) {
    std::vector<double> v;
    for (const auto& e : a) v.push_back(e.is_string() ? parse_double(e.get<std::string>()) : e.get<double>());
    return v;
}

double decode_one(const nlohmann::json& e) {
    return e.is_string() ? parse_double(e.get<std::string>()) : e.get<double>();
}

}  // namespace

void write_csv_row(std::ostream& os, std::initializer_list<double> row) { write_row(os, row); }
void write_csv_row(std::ostream& os, const std::vector<double>& row) { write_row(os, row); }

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write " + path);
    os << text;
    if (!text.empty() && text.back() != '\n') os << '\n';
}

void write_snapshot_csv(const Snapshot& s, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write " + path);
    os << "x,value\n";
    for (std::size_t i = 0; i < s.size(); ++i) write_csv_row(os, {s.x(i), s.values[i]});
}

Snapshot read_snapshot_csv(const std::string& path, double time) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read " + path);
    std::string line;
    std::vector<double> x, v;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw InvalidInput("snapshot CSV needs two columns");
        if (!std::isdigit(static_cast<unsigned char>(line[0])) && line[0] != '-' && line[0] != '.') continue;  // header
        x.push_back(parse_double(line.substr(0, comma)));
        v.push_back(parse_double(line.substr(comma + 1)));
    }
    Snapshot s;
    s.grid = std::make_shared<const GradedGrid>(GradedGrid::from_nodes(std::move(x)));
    s.values = std::move(v);
    s.time = time;
    s.left_bc = s.values.front();
    s.right_bc = s.values.back();
    return s;
}

nlohmann::json snapshot_to_json(const Snapshot& s) {
    nlohmann::json j;
    j["grid"] = {{"nodes", encode(s.grid->nodes)},
                 {"x_min", format_double(s.grid->x_min)},
                 {"grading_ratio", format_double(s.grid->grading_ratio)}};
    j["values"] = encode(s.values);
    j["time"] = format_double(s.time);
    j["bc"] = {{"left", format_double(s.left_bc)}, {"right", format_double(s.right_bc)}};
    return j;
}

Snapshot snapshot_from_json(const nlohmann::json& j) {
    GradedGrid g;
    g.nodes = decode(j.at("grid").at("nodes"));
    g.validate();
    g.x_min = decode_one(j.at("grid").at("x_min"));
    g.grading_ratio = decode_one(j.at("grid").at("grading_ratio"));
    Snapshot s;
    s.grid = std::make_shared<const GradedGrid>(std::move(g));
    s.values = decode(j.at("values"));
    s.time = decode_one(j.at("time"));
    s.left_bc = decode_one(j.at("bc").at("left"));
    s.right_bc = decode_one(j.at("bc").at("right"));
    if (s.values.size() != s.grid->size()) throw InvalidInput("snapshot JSON: values/grid size mismatch");
    return s;
}

void write_radial_csv(const RadialField& f, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write " + path);
    os << "r,value\n";
    for (std::size_t i = 0; i < f.r_nodes.size(); ++i) write_csv_row(os, {f.r_nodes[i], f.values[i]});
}

nlohmann::json radial_to_json(const RadialField& f) {
    return {{"r_nodes", encode(f.r_nodes)}, {"values", encode(f.values)}, {"total_mass", format_double(f.total_mass)}};
}

RadialField radial_from_json(const nlohmann::json& j) {
    RadialField f{decode(j.at("r_nodes")), decode(j.at("values")), decode_one(j.at("total_mass"))};
    if (f.r_nodes.size() != f.values.size()) throw InvalidInput("radial JSON: size mismatch");
    return f;
}

}  // namespace kscrit

#include "fraclod/table.hpp"

#include "fraclod/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace fraclod {

ResultTable::ResultTable(std::vector<std::string> columns) : columns_(std::move(columns)) {
    for (const auto& c : columns_)
        if (c.find_first_of(",\n\"") != std::string::npos) throw InputError("column name '" + c + "' not CSV-safe");
}

void ResultTable::add_row(std::vector<Cell> row) {
    if (row.size() != columns_.size())
        throw InputError("table row has " + std::to_string(row.size()) + " cells, expected " +
                         std::to_string(columns_.size()));
    for (const auto& c : row)
        if (const auto* s = std::get_if<std::string>(&c); s && s->find_first_of(",\n\"") != std::string::npos)
            throw InputError("table cell '" + *s + "' not CSV-safe");
    rows_.push_back(std::move(row));
}

std::size_t ResultTable::column_index(const std::string& name) const {
    const auto it = std::find(columns_.begin(), columns_.end(), name);
    if (it == columns_.end()) throw InputError("no column '" + name + "'");
    return static_cast<std::size_t>(it - columns_.begin());
}

std::vector<double> ResultTable::numeric_column(const std::string& name) const {
    const std::size_t c = column_index(name);
    std::vector<double> out;
    for (const auto& r : rows_) {
        if (const auto* d = std::get_if<double>(&r[c])) out.push_back(*d);
        else if (const auto* i = std::get_if<std::int64_t>(&r[c])) out.push_back(static_cast<double>(*i));
        else throw InputError("column '" + name + "' is not numeric");
    }
    return out;
}

const Cell& ResultTable::at(std::size_t row, const std::string& column) const {
    return rows_.at(row).at(column_index(column));
}

namespace {

std::string format_cell(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) {
        if (std::isnan(*d)) return "nan";
        if (std::isinf(*d)) return *d > 0 ? "inf" : "-inf";
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", *d);
        return buf;
    }
    if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
    return std::get<std::string>(c);
}

Cell parse_cell(const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    const char* b = s.data();
    const char* e = s.data() + s.size();
    if (s.find_first_of(".eE") == std::string::npos) {
        std::int64_t i = 0;
        const auto r = std::from_chars(b, e, i);
        if (r.ec == std::errc() && r.ptr == e && !s.empty()) return i;
    }
    double d = 0.0;
    const auto r = std::from_chars(b, e, d);
    if (r.ec == std::errc() && r.ptr == e && !s.empty()) return d;
    return s;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

std::string to_csv(const ResultTable& table) {
    std::string out;
    for (std::size_t c = 0; c < table.columns().size(); ++c) {
        if (c) out += ',';
        out += table.columns()[c];
    }
    out += '\n';
    for (const auto& row : table.rows()) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out += ',';
            out += format_cell(row[c]);
        }
        out += '\n';
    }
    return out;
}

void emit_csv(const ResultTable& table, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << to_csv(table);
    if (!out) throw InputError("cannot write " + path.string());
}

ResultTable parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw InputError("CSV: missing header");
    ResultTable table(split(line));
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<Cell> row;
        for (const auto& f : split(line)) row.push_back(parse_cell(f));
        table.add_row(std::move(row));
    }
    return table;
}

ResultTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str());
}

void emit_svg_plot(const ResultTable& table, const std::string& x, const std::vector<std::string>& ys,
                   const PlotOptions& options, const std::filesystem::path& path) {
    const double width = 640, height = 420, left = 70, right = 160, top = 40, bottom = 50;
    const std::size_t xc = table.column_index(x);
    std::vector<std::size_t> yc;
    for (const auto& y : ys) yc.push_back(table.column_index(y));
    const std::size_t gc = options.group_by.empty() ? std::size_t(-1) : table.column_index(options.group_by);

    const auto num = [](const Cell& c) {
        if (const auto* d = std::get_if<double>(&c)) return *d;
        if (const auto* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
        return std::numeric_limits<double>::quiet_NaN();
    };
    const auto tx = [&](double v) { return options.log_x ? std::log10(v) : v; };
    const auto ty = [&](double v) { return options.log_y ? std::log10(v) : v; };
    const auto usable = [&](double vx, double vy) {
        return std::isfinite(tx(vx)) && std::isfinite(ty(vy));
    };

    // series label -> points, in first-appearance order
    std::vector<std::string> order;
    std::map<std::string, std::vector<std::pair<double, double>>> series;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& row : table.rows()) {
        const std::string group = gc == std::size_t(-1) ? "" : format_cell(row[gc]) + " ";
        for (std::size_t k = 0; k < yc.size(); ++k) {
            const double vx = num(row[xc]), vy = num(row[yc[k]]);
            if (!usable(vx, vy)) continue;
            const std::string label = group + ys[k];
            if (!series.count(label)) order.push_back(label);
            series[label].emplace_back(tx(vx), ty(vy));
            x0 = std::min(x0, tx(vx));
            x1 = std::max(x1, tx(vx));
            y0 = std::min(y0, ty(vy));
            y1 = std::max(y1, ty(vy));
        }
    }
    if (order.empty()) x0 = y0 = 0.0, x1 = y1 = 1.0;
    if (x1 == x0) x1 = x0 + 1.0;
    if (y1 == y0) y1 = y0 + 1.0;
    const auto px = [&](double v) { return left + (v - x0) / (x1 - x0) * (width - left - right); };
    const auto py = [&](double v) { return height - bottom - (v - y0) / (y1 - y0) * (height - top - bottom); };

    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    char buf[128];
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << left << "\" y=\"24\" font-size=\"14\">" << options.title << "</text>\n";
    std::snprintf(buf, sizeof buf, "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" stroke=\"black\"/>\n",
                  left, top, width - left - right, height - top - bottom);
    out << buf;
    const auto tick = [&](double v, bool log) {
        std::snprintf(buf, sizeof buf, "%.3g", log ? std::pow(10.0, v) : v);
        return std::string(buf);
    };
    for (int i = 0; i <= 4; ++i) {
        const double vx = x0 + (x1 - x0) * i / 4.0, vy = y0 + (y1 - y0) * i / 4.0;
        out << "<text x=\"" << px(vx) - 10 << "\" y=\"" << height - bottom + 18 << "\" font-size=\"11\">"
            << tick(vx, options.log_x) << "</text>\n";
        out << "<text x=\"4\" y=\"" << py(vy) + 4 << "\" font-size=\"11\">" << tick(vy, options.log_y) << "</text>\n";
    }
    out << "<text x=\"" << (left + width - right) / 2 << "\" y=\"" << height - 10 << "\" font-size=\"12\">" << x
        << (options.log_x ? " (log)" : "") << "</text>\n";
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};
    for (std::size_t s = 0; s < order.size(); ++s) {
        const char* color = colors[s % std::size(colors)];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& [vx, vy] : series[order[s]]) {
            std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(vx), py(vy));
            out << buf;
        }
        out << "\"/>\n";
        out << "<text x=\"" << width - right + 8 << "\" y=\"" << top + 14 + 16 * s << "\" font-size=\"11\" fill=\""
            << color << "\">" << order[s] << "</text>\n";
    }
    out << "</svg>\n";
    if (!out) throw InputError("cannot write " + path.string());
}

}  // namespace fraclod

#include "seqtune/jsonio.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace seqtune {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

void dump_value(const Json& j, std::ostringstream& out, int indent, int depth) {
    const std::string pad(static_cast<std::size_t>(indent * depth), ' ');
    const std::string pad_in(static_cast<std::size_t>(indent * (depth + 1)), ' ');
    switch (j.type()) {
        case Json::value_t::object: {
            if (j.empty()) {
                out << "{}";
                return;
            }
            out << "{\n";
            bool first = true;
            for (const auto& [key, value] : j.items()) {
                if (!first) out << ",\n";
                first = false;
                out << pad_in << Json(key).dump() << ": ";
                dump_value(value, out, indent, depth + 1);
            }
            out << "\n" << pad << "}";
            return;
        }
        case Json::value_t::array: {
            if (j.empty()) {
                out << "[]";
                return;
            }
            out << "[\n";
            bool first = true;
            for (const auto& value : j) {
                if (!first) out << ",\n";
                first = false;
                out << pad_in;
                dump_value(value, out, indent, depth + 1);
            }
            out << "\n" << pad << "]";
            return;
        }
        case Json::value_t::number_float: {
            const double v = j.get<double>();
            if (!std::isfinite(v)) {
                out << "null";
            } else {
                out << format_double(v);
            }
            return;
        }
        default:
            out << j.dump();
            return;
    }
}

}  // namespace

std::string dump_json(const Json& j, int indent) {
    std::ostringstream out;
    dump_value(j, out, indent, 0);
    out << "\n";
    return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw std::runtime_error("cannot open for writing: " + path);
    }
    f << content;
    if (!f) {
        throw std::runtime_error("write failed: " + path);
    }
}

Json read_json_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw std::runtime_error("cannot open: " + path);
    }
    return Json::parse(f);
}

}  // namespace seqtune

#include "apxtune/tsv.hpp"

#include "apxtune/error.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace apxtune::tsv {

int Table::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name)
            return static_cast<int>(i);
    return -1;
}

static std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto tab = line.find('\t', start);
        if (tab == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    if (!out.empty() && !out.back().empty() && out.back().back() == '\r')
        out.back().pop_back();
    return out;
}

Table parse(const std::string& text, const std::string& source_name) {
    Table t;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        auto cells = split_tabs(line);
        if (t.header.empty()) {
            t.header = std::move(cells);
            continue;
        }
        if (cells.size() != t.header.size())
            fail(ErrorCategory::data, source_name + ":" + std::to_string(line_no) + ": expected " +
                                          std::to_string(t.header.size()) + " columns, got " + std::to_string(cells.size()));
        t.rows.push_back(std::move(cells));
        t.line_numbers.push_back(line_no);
    }
    if (t.header.empty())
        fail(ErrorCategory::data, source_name + ": missing header line");
    return t;
}

Table read_file(const std::string& path) {
    return parse(read_text_file(path), path);
}

std::string render(const Table& t) {
    std::string out;
    const auto append_row = [&out](const std::vector<std::string>& row) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i)
                out += '\t';
            out += row[i];
        }
        out += '\n';
    };
    append_row(t.header);
    for (const auto& row : t.rows)
        append_row(row);
    return out;
}

void write_file(const std::string& path, const Table& t) {
    write_text_file(path, render(t));
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(ErrorCategory::io, "cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            fail(ErrorCategory::io, "cannot write '" + tmp + "'");
        out << text;
        if (!out)
            fail(ErrorCategory::io, "short write to '" + tmp + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        fail(ErrorCategory::io, "cannot rename '" + tmp + "' to '" + path + "'");
}

} // namespace apxtune::tsv

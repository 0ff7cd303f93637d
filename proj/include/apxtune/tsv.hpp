#pragma once

#include <string>
#include <vector>

namespace apxtune::tsv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<int> line_numbers; // source line of each row, for error reporting

    // Column index by header name; -1 when absent.
    int column(const std::string& name) const;
};

Table read_file(const std::string& path);
Table parse(const std::string& text, const std::string& source_name);

std::string render(const Table& t);
void write_file(const std::string& path, const Table& t);

// Atomic-ish write: stage to path + ".tmp" then rename over path.
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

} // namespace apxtune::tsv

#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace fbguide {

/// Fixed "%.12g"-style rendering so identical runs emit byte-identical files.
std::string format_number(double v);

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header);

    void row(const std::vector<std::string>& cells);

private:
    std::ofstream out_;
    size_t columns_;
};

std::string cell(double v);
std::string cell(int v);
std::string cell(const std::string& s);

}  // namespace fbguide

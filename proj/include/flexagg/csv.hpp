#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "flexagg/errors.hpp"

namespace flexagg {

/// Plain numeric table with a one-line header. Values are written with
/// enough digits that parsing them back reproduces the doubles bit for bit.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::string to_string() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) out << ',';
      out << header[i];
    }
    out << '\n';
    char buf[40];
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", row[i]);
        out << buf;
      }
      out << '\n';
    }
    return out.str();
  }

  void save(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw Error("cannot write " + path);
    f << to_string();
  }

  static CsvTable parse(const std::string& text) {
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("csv", "empty input");
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) t.header.push_back(cell);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::vector<double> row;
      while (std::getline(ls, cell, ',')) {
        try {
          row.push_back(std::stod(cell));
        } catch (const std::exception&) {
          throw ParseError("csv line " + std::to_string(line_no),
                           "not a number: '" + cell + "'");
        }
      }
      if (row.size() != t.header.size())
        throw ParseError("csv line " + std::to_string(line_no), "column count mismatch");
      t.rows.push_back(std::move(row));
    }
    return t;
  }

  static CsvTable load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError(path, "cannot open");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
  }
};

}  // namespace flexagg

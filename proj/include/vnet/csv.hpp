#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace vnet {

// Stable shortest-ish decimal rendering so rerunning a command reproduces
// byte-identical CSV output.
std::string fmt_double(double v);

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);

  void row(const std::vector<std::string>& cells);
  void close();

 private:
  std::ofstream out_;
  size_t columns_;
};

}  // namespace vnet

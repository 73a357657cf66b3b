#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace vpe {

/// Minimal CSV writer with lossless double formatting (%.17g equivalent),
/// so identical runs produce bit-identical files.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);

  void header(const std::vector<std::string>& names);
  void begin_row();
  void field(double v);
  void field(long long v);
  void field(int v) { field(static_cast<long long>(v)); }
  void field(const std::string& s);
  void end_row();

 private:
  std::ofstream out_;
  bool first_in_row_{true};
  void sep();
};

/// Row-oriented CSV reader; splits on commas, no quoting (none of our
/// formats needs it).
std::vector<std::vector<std::string>> read_csv(const std::string& path, bool skip_header = true);

std::string format_double(double v);

}  // namespace vpe

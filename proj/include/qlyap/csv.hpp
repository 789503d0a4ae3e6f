#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace qlyap {

struct RunConfig;

// Comment lines written at the top of every CSV: code version, variate
// algorithm, the command, and the normalized config. Keys that only steer
// execution (workers, output_dir) are left out so that outputs are
// byte-identical across worker counts and output locations.
std::vector<std::string> provenance(const RunConfig& cfg, const std::string& command);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header_comments,
            const std::vector<std::string>& columns);

  CsvWriter& cell(double v);
  CsvWriter& cell(std::uint64_t v);
  CsvWriter& cell(const std::string& v);
  void end_row();
  // Flushes and throws IntegrityError if any write failed.
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t n_columns_;
  std::size_t in_row_ = 0;
};

}  // namespace qlyap

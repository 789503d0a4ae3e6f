#include "qlyap/csv.hpp"

#include <sstream>

#include "qlyap/config.hpp"
#include "qlyap/errors.hpp"
#include "qlyap/noise.hpp"

namespace qlyap {

std::vector<std::string> provenance(const RunConfig& cfg, const std::string& command) {
  std::vector<std::string> lines{std::string("qlyap ") + kVersion, std::string("rng = ") + kGaussianAlgorithm,
                                 "command = " + command};
  std::istringstream in(emit_config(cfg));
  std::string line;
  while (std::getline(in, line))
    if (line.rfind("workers ", 0) != 0 && line.rfind("output_dir ", 0) != 0) lines.push_back(line);
  lines.push_back("config_hash = " + std::to_string(config_hash(cfg)));
  lines.push_back("period = " + format_double(cfg.period()));
  lines.push_back("dt = " + format_double(cfg.dt()));
  return lines;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header_comments,
                     const std::vector<std::string>& columns)
    : path_(path), n_columns_(columns.size()) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::trunc);
  if (!out_) throw IntegrityError("cannot open " + path.string() + " for writing");
  for (const auto& c : header_comments) out_ << "# " << c << '\n';
  for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
  out_ << '\n';
}

CsvWriter& CsvWriter::cell(double v) { return cell(format_double(v)); }
CsvWriter& CsvWriter::cell(std::uint64_t v) { return cell(std::to_string(v)); }

CsvWriter& CsvWriter::cell(const std::string& v) {
  if (in_row_ == n_columns_) throw std::logic_error("CsvWriter: too many cells in row of " + path_.string());
  if (in_row_++) out_ << ',';
  if (v.find_first_of(",\"\n") == std::string::npos) {
    out_ << v;
  } else {
    out_ << '"';
    for (char c : v) out_ << (c == '"' ? "\"\"" : std::string(1, c == '\n' ? ' ' : c));
    out_ << '"';
  }
  return *this;
}

void CsvWriter::end_row() {
  if (in_row_ != n_columns_) throw std::logic_error("CsvWriter: short row in " + path_.string());
  out_ << '\n';
  in_row_ = 0;
}

void CsvWriter::close() {
  out_.flush();
  if (!out_) throw IntegrityError("write failed for " + path_.string());
  out_.close();
}

}  // namespace qlyap

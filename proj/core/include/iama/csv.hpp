#ifndef IAMA_CSV_HPP_
#define IAMA_CSV_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace iama {

// Shortest round-trip decimal form, independent of the C locale.
std::string format_number(double value);
std::string format_number(std::int64_t value);
std::string format_number(std::uint64_t value);

// Comma-separated table with a header row and '\n' line endings.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  const std::vector<std::string>& header() const { return header_; }
  std::size_t num_rows() const { return rows_.size(); }

  // Throws std::invalid_argument when the cell count differs from the header.
  void add_row(std::vector<std::string> cells);

  std::string str() const;
  // Writes through a temporary file so a failed run leaves no partial output.
  void write(const std::string& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

void write_text_file(const std::string& path, const std::string& content);

}  // namespace iama

#endif  // IAMA_CSV_HPP_

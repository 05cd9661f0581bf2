#ifndef NANOVLA_CSV_H_
#define NANOVLA_CSV_H_

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace nanovla {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each row

  // Throws DataError if the column is absent.
  std::size_t column(std::string_view name) const;
};

// RFC 4180 subset: comma separated, double-quoted fields may contain commas,
// quotes ("") and newlines. Every row must match the header width.
CsvTable parse_csv(std::string_view text, std::string_view source = "<csv>");
CsvTable read_csv(const std::string& path);

std::string csv_escape(std::string_view field);

class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& fields);

 private:
  std::ostream& out_;
  std::size_t width_;
};

}  // namespace nanovla

#endif  // NANOVLA_CSV_H_

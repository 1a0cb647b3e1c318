#pragma once

#include <charconv>
#include <concepts>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace ccmqd {

/// Shortest decimal that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Comma-separated rows, '\n' terminated, dot decimal.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  template <typename... Fields>
  void row(const Fields&... fields) {
    bool first = true;
    ((write_field(fields, first)), ...);
    os_ << '\n';
  }

  void row_vector(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) os_ << (i ? "," : "") << fields[i];
    os_ << '\n';
  }

 private:
  template <typename T>
  void write_field(const T& v, bool& first) {
    if (!first) os_ << ',';
    first = false;
    if constexpr (std::floating_point<T>) {
      os_ << format_double(double(v));
    } else {
      os_ << v;
    }
  }

  std::ostream& os_;
};

/// Splits one CSV line on commas (no quoting support; the harness never emits quotes).
inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace ccmqd

#include "cavphase/csv_io.hpp"

#include <cstdio>

namespace cavphase {

std::string format_real(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.16e", value);
  return buffer;
}

namespace {

template <class Range>
void header_impl(std::ostream& out, const Range& columns, std::string_view manifest_hash) {
  if (!manifest_hash.empty()) out << "# manifest=" << manifest_hash << '\n';
  bool first = true;
  for (const auto& c : columns) {
    if (!first) out << ',';
    out << c;
    first = false;
  }
  out << '\n';
}

}  // namespace

void write_csv_header(std::ostream& out, std::initializer_list<std::string_view> columns,
                      std::string_view manifest_hash) {
  header_impl(out, columns, manifest_hash);
}

void write_csv_header(std::ostream& out, std::span<const std::string> columns, std::string_view manifest_hash) {
  header_impl(out, columns, manifest_hash);
}

void write_csv_row(std::ostream& out, std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out << ',';
    out << format_real(values[i]);
  }
  out << '\n';
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(hash));
  return buffer;
}

}  // namespace cavphase

#pragma once

#include <cstdint>
#include <initializer_list>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

namespace cavphase {

/// 17 significant digits in scientific notation; round-trips every double.
std::string format_real(double value);

/// Optional "# manifest=<hash>" line followed by the comma-joined header.
void write_csv_header(std::ostream& out, std::initializer_list<std::string_view> columns,
                      std::string_view manifest_hash = {});
void write_csv_header(std::ostream& out, std::span<const std::string> columns, std::string_view manifest_hash = {});

void write_csv_row(std::ostream& out, std::span<const double> values);

/// 64-bit FNV-1a as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace cavphase

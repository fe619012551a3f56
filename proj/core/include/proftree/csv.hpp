#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace proftree {

/// RFC-4180 reader: quoted fields, doubled-quote escapes, CR/LF and LF
/// record breaks, embedded newlines inside quotes. Strips a UTF-8 BOM.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);
std::vector<std::vector<std::string>> read_csv_file(const std::string& path);

std::string csv_escape(std::string_view field);

/// Shortest decimal form that parses back to exactly the same double.
std::string format_double(double v);

}  // namespace proftree

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace poisonlab {

// Shortest decimal string that round-trips to the same double. Keeps golden
// CSV files byte-stable and diff-friendly. Infinities become "inf"/"-inf".
std::string format_double(double v);

// Inverse of format_double; throws config_error on junk.
double parse_double(const std::string& s);

std::string csv_join(const std::vector<std::string>& fields);

// Splits one CSV line on commas. Fields in this project never contain commas
// or quotes, so no quoting layer is needed.
std::vector<std::string> csv_split(const std::string& line);

// getline that skips '#' comment lines (tool/provenance headers); false at EOF.
bool csv_getline(std::istream& is, std::string& line);

std::string hash_hex(std::uint64_t h);

}  // namespace poisonlab

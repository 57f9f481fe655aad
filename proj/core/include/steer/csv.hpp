#pragma once

#include <string>
#include <vector>

namespace steer {

/// Nine significant digits, '.' decimal separator, no negative zero.
std::string format_number(double value);

/// One comma-separated line terminated by LF.
std::string csv_line(const std::vector<std::string>& fields);

/// Splits one CSV line (no quoting) into fields.
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace steer

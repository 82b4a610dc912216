#pragma once

#include <map>
#include <string>
#include <vector>

#include "soblab/stability.hpp"

namespace soblab {

// 17 significant digits, enough to round-trip doubles bit-exactly.
std::string fmt17(double x);

// Versioned CSV for sweep rows: comment line with the format tag, then the
// header row. Comma separator, '.' decimal point.
std::string sweep_csv(const std::vector<StabilityReport>& rows);

// Line-oriented "key = value" config; '#' starts a comment.
std::map<std::string, std::string> parse_config(const std::string& text);
std::map<std::string, std::string> load_config_file(const std::string& path);

void write_file(const std::string& path, const std::string& content);

} // namespace soblab

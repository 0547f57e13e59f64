#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace cmrf {

/// Line-oriented `key = value` text. `#` starts a comment; blank lines are
/// skipped; keys and values are trimmed. Duplicate keys or lines without `=`
/// throw std::runtime_error naming the line number.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(const std::string& text);
KeyValues read_key_values(const std::filesystem::path& path);

double kv_double(const KeyValues& kv, const std::string& key);
long long kv_int(const KeyValues& kv, const std::string& key);

/// Shortest decimal that reads back to the same double.
std::string format_double(double x);

}  // namespace cmrf

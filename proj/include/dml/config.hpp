#pragma once

#include "dml/core.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dml {

// Flat key/value configuration. Accepts
//   key = value
//   [section]            (prefixes following keys with "section.")
//   key = { a = 1, b = "x" }   (flattened to key.a, key.b)
// Lines starting with '#' are comments. Values may be quoted.
class KeyValueConfig {
public:
    static KeyValueConfig parse(const std::string& text);
    static KeyValueConfig load(const std::string& path);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    std::optional<std::string> get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    std::vector<std::string> get_list(const std::string& key) const;
    std::vector<double> get_double_list(const std::string& key) const;

    // Keys beginning with "prefix." with the prefix stripped.
    KeyValueConfig section(const std::string& prefix) const;
    std::vector<std::string> keys() const;

    void set(const std::string& key, const std::string& value) { values_[key] = value; }

private:
    std::map<std::string, std::string> values_;
};

std::vector<std::string> split_list(const std::string& text, char sep = ',');
std::string trim(const std::string& s);
double parse_double(const std::string& s);
long long parse_int(const std::string& s);

}  // namespace dml

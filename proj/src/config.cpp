#include "dml/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace dml {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

namespace {

std::string unquote(const std::string& s) {
    const std::string t = trim(s);
    if (t.size() >= 2 && ((t.front() == '"' && t.back() == '"') || (t.front() == '\'' && t.back() == '\'')))
        return t.substr(1, t.size() - 2);
    return t;
}

// Splits on `sep` outside of quotes and brackets.
std::vector<std::string> split_top_level(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string cur;
    int depth = 0;
    char quote = 0;
    for (char c : text) {
        if (quote) {
            if (c == quote) quote = 0;
            cur += c;
            continue;
        }
        if (c == '"' || c == '\'') quote = c;
        if (c == '[' || c == '{') ++depth;
        if (c == ']' || c == '}') --depth;
        if (c == sep && depth == 0) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

void assign(std::map<std::string, std::string>& values, const std::string& key, const std::string& raw,
            int line_no) {
    const std::string value = trim(raw);
    if (!value.empty() && value.front() == '{') {
        if (value.back() != '}')
            throw Error(ErrorCode::ConfigError, "unterminated inline table on line " + std::to_string(line_no));
        for (const auto& item : split_top_level(value.substr(1, value.size() - 2), ',')) {
            if (trim(item).empty()) continue;
            const auto eq = item.find('=');
            if (eq == std::string::npos)
                throw Error(ErrorCode::ConfigError, "expected key = value on line " + std::to_string(line_no));
            assign(values, key + "." + trim(item.substr(0, eq)), item.substr(eq + 1), line_no);
        }
        return;
    }
    if (!value.empty() && value.front() == '[' && value.back() == ']') {
        std::string joined;
        for (const auto& item : split_top_level(value.substr(1, value.size() - 2), ',')) {
            if (trim(item).empty()) continue;
            if (!joined.empty()) joined += ",";
            joined += unquote(item);
        }
        values[key] = joined;
        return;
    }
    values[key] = unquote(value);
}

}  // namespace

std::vector<std::string> split_list(const std::string& text, char sep) {
    std::vector<std::string> out;
    if (trim(text).empty()) return out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(unquote(item));
    return out;
}

double parse_double(const std::string& s) {
    const std::string t = trim(s);
    double v = 0.0;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    if (!t.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || t.empty())
        throw Error(ErrorCode::ParseError, "not a number: '" + s + "'");
    return v;
}

long long parse_int(const std::string& s) {
    const std::string t = trim(s);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
        throw Error(ErrorCode::ParseError, "not an integer: '" + s + "'");
    return v;
}

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
    KeyValueConfig cfg;
    std::stringstream ss(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        if (t.front() == '[' && t.back() == ']') {
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::ConfigError, "expected key = value on line " + std::to_string(line_no));
        std::string key = trim(t.substr(0, eq));
        if (key.empty()) throw Error(ErrorCode::ConfigError, "empty key on line " + std::to_string(line_no));
        if (!section.empty()) key = section + "." + key;
        assign(cfg.values_, key, t.substr(eq + 1), line_no);
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

std::string KeyValueConfig::get_or(const std::string& key, const std::string& fallback) const {
    return get(key).value_or(fallback);
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    const auto v = get(key);
    if (!v) return fallback;
    try {
        return parse_double(*v);
    } catch (const Error&) {
        throw Error(ErrorCode::ConfigError, "key '" + key + "' expects a number, got '" + *v + "'");
    }
}

long long KeyValueConfig::get_int(const std::string& key, long long fallback) const {
    const auto v = get(key);
    if (!v) return fallback;
    try {
        return parse_int(*v);
    } catch (const Error&) {
        throw Error(ErrorCode::ConfigError, "key '" + key + "' expects an integer, got '" + *v + "'");
    }
}

std::vector<std::string> KeyValueConfig::get_list(const std::string& key) const {
    const auto v = get(key);
    if (!v) return {};
    return split_list(*v);
}

std::vector<double> KeyValueConfig::get_double_list(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : get_list(key)) {
        try {
            out.push_back(parse_double(item));
        } catch (const Error&) {
            throw Error(ErrorCode::ConfigError, "key '" + key + "' expects numbers, got '" + item + "'");
        }
    }
    return out;
}

KeyValueConfig KeyValueConfig::section(const std::string& prefix) const {
    KeyValueConfig out;
    const std::string p = prefix + ".";
    for (const auto& [k, v] : values_)
        if (k.compare(0, p.size(), p) == 0) out.values_[k.substr(p.size())] = v;
    return out;
}

std::vector<std::string> KeyValueConfig::keys() const {
    std::vector<std::string> out;
    for (const auto& kv : values_) out.push_back(kv.first);
    return out;
}

}  // namespace dml

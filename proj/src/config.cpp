#include "a2p/config.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace a2p {

namespace {

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

[[noreturn]] void fail_at(const std::string& origin, int line, const std::string& what) {
    std::ostringstream os;
    os << origin << ":" << line << ": " << what;
    throw std::runtime_error(os.str());
}

bool valid_name(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'))
            return false;
    }
    return true;
}

}  // namespace

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path);
}

Config Config::parse_string(const std::string& text, const std::string& origin) {
    Config c;
    c.origin_ = origin;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                fail_at(origin, lineno, "unterminated section header: " + line);
            section = trim(line.substr(1, line.size() - 2));
            if (!valid_name(section))
                fail_at(origin, lineno, "bad section name: '" + section + "'");
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            fail_at(origin, lineno, "expected 'key = value': " + line);
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (!valid_name(key)) fail_at(origin, lineno, "bad key name: '" + key + "'");
        if (!section.empty()) key = section + "." + key;
        if (c.values_.count(key)) fail_at(origin, lineno, "duplicate key '" + key + "'");
        c.values_[key] = value;
    }
    return c;
}

bool Config::has(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return false;
    read_.insert(key);
    return true;
}

std::string Config::require(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end())
        throw std::runtime_error(origin_ + ": missing required key '" + key + "'");
    read_.insert(key);
    return it->second;
}

double Config::parse_double(const std::string& key, const std::string& raw) const {
    try {
        size_t used = 0;
        double v = std::stod(raw, &used);
        if (trim(raw.substr(used)).empty()) return v;
    } catch (const std::exception&) {
    }
    throw std::runtime_error(origin_ + ": key '" + key + "' is not a number: '" + raw +
                             "'");
}

std::string Config::get_string(const std::string& key) const { return require(key); }

std::string Config::get_string(const std::string& key,
                               const std::string& fallback) const {
    return has(key) ? require(key) : fallback;
}

double Config::get_double(const std::string& key) const {
    return parse_double(key, require(key));
}

double Config::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

long Config::get_long(const std::string& key) const {
    const std::string raw = require(key);
    try {
        size_t used = 0;
        long v = std::stol(raw, &used, 10);
        if (trim(raw.substr(used)).empty()) return v;
    } catch (const std::exception&) {
    }
    throw std::runtime_error(origin_ + ": key '" + key + "' is not an integer: '" +
                             raw + "'");
}

long Config::get_long(const std::string& key, long fallback) const {
    return has(key) ? get_long(key) : fallback;
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const std::string raw = require(key);
    try {
        size_t used = 0;
        unsigned long long v = std::stoull(raw, &used, 0);
        if (trim(raw.substr(used)).empty()) return static_cast<std::uint64_t>(v);
    } catch (const std::exception&) {
    }
    throw std::runtime_error(origin_ + ": key '" + key +
                             "' is not an unsigned integer: '" + raw + "'");
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    std::string raw = require(key);
    for (char& c : raw) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (raw == "true" || raw == "yes" || raw == "1") return true;
    if (raw == "false" || raw == "no" || raw == "0") return false;
    throw std::runtime_error(origin_ + ": key '" + key + "' is not a boolean: '" + raw +
                             "'");
}

std::vector<double> Config::get_doubles(const std::string& key) const {
    std::string raw = require(key);
    for (char& c : raw)
        if (c == ',') c = ' ';
    std::istringstream in(raw);
    std::vector<double> out;
    std::string tok;
    while (in >> tok) out.push_back(parse_double(key, tok));
    if (out.empty())
        throw std::runtime_error(origin_ + ": key '" + key + "' holds an empty list");
    return out;
}

void Config::set(const std::string& key, const std::string& value) {
    values_[key] = value;
    read_.insert(key);
}

std::vector<std::string> Config::unread_keys() const {
    std::vector<std::string> out;
    for (const auto& kv : values_)
        if (!read_.count(kv.first)) out.push_back(kv.first);
    return out;
}

std::string Config::canonical() const {
    std::ostringstream os;
    for (const auto& kv : values_) os << kv.first << " = " << kv.second << "\n";
    return os.str();
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace a2p

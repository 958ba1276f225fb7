#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace a2p {

/// INI-style experiment configuration.
///
/// Syntax: `[section]` headers, `key = value` assignments, `#` starts a
/// comment (full-line or trailing), blank lines ignored.  Keys before any
/// section header are top-level; keys inside a section are addressed as
/// "section.key".  A key assigned twice in one file is an error; `set`
/// overrides are not.
///
/// Typed getters record which keys were read so a caller can reject
/// unrecognized keys after building its typed view (`unread_keys`).
class Config {
  public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text,
                               const std::string& origin = "<config>");

    bool has(const std::string& key) const;

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    long get_long(const std::string& key) const;
    long get_long(const std::string& key, long fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    /// Comma- or space-separated list of numbers.
    std::vector<double> get_doubles(const std::string& key) const;

    /// Insert or override a value (CLI overrides; no duplicate check).
    void set(const std::string& key, const std::string& value);

    /// Keys present in the file that no getter has read.
    std::vector<std::string> unread_keys() const;

    /// Sorted `key = value` dump; the hashing and manifest form.
    std::string canonical() const;

    const std::string& origin() const { return origin_; }

  private:
    std::string require(const std::string& key) const;
    double parse_double(const std::string& key, const std::string& raw) const;

    std::string origin_;
    std::map<std::string, std::string> values_;
    mutable std::set<std::string> read_;
};

/// FNV-1a 64-bit hash of a string, as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace a2p

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace a2p {

/// Shortest round-trip decimal form of a double ("%.17g" fallback), with
/// non-finite values encoded as the strings "inf", "-inf", "nan" so every
/// record stays valid JSON.
std::string json_number(double v);

/// JSON string literal with the required escapes.
std::string json_string(const std::string& s);

std::string json_array(const std::vector<double>& v);
std::string json_array(const std::vector<long>& v);

/// One JSON object built field by field in insertion order.  Values are
/// serialized immediately, so records are deterministic byte for byte.
class JsonRecord {
  public:
    JsonRecord& field(const std::string& key, double v);
    JsonRecord& field(const std::string& key, long v);
    JsonRecord& field(const std::string& key, int v) {
        return field(key, static_cast<long>(v));
    }
    JsonRecord& field(const std::string& key, std::uint64_t v);
    JsonRecord& field(const std::string& key, bool v);
    JsonRecord& field(const std::string& key, const std::string& v);
    JsonRecord& field(const std::string& key, const char* v) {
        return field(key, std::string(v));
    }
    /// Pre-serialized JSON value (array or nested object).
    JsonRecord& field_raw(const std::string& key, const std::string& json);

    /// The finished object, "{...}".
    std::string str() const;

  private:
    std::string body_;
};

/// Write text to a file, replacing it; throws on I/O failure.
void write_file(const std::string& path, const std::string& text);

/// Read a whole file; throws when it cannot be opened.
std::string read_file(const std::string& path);

}  // namespace a2p

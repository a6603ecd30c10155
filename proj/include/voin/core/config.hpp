#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>
#include <map>
#include <string>
#include <string_view>

namespace voin {

/// Flat `key = value` configuration. Blank lines and lines starting with '#'
/// are ignored. Values keep their raw text; typed getters convert on access.
class FlatConfig {
public:
    FlatConfig() = default;

    static FlatConfig parse(std::string_view text);
    static FlatConfig load(const std::filesystem::path& path);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    /// Throws ConfigError naming the first key not in `allowed`.
    void require_known(const std::vector<std::string>& allowed) const;

    const std::map<std::string, std::string>& entries() const { return values_; }

    std::string to_text() const;

private:
    std::map<std::string, std::string> values_;
};

}  // namespace voin

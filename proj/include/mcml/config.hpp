#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mcml/errors.hpp"

namespace mcml::cfg {

// Plain-text "key = value" configuration with bracketed [section] headers.
// Keys are addressed as "section.key"; repeated keys are preserved in order.
class Config {
public:
    static Config parse(std::istream& in, const std::string& origin = "<stream>");
    static Config parse_file(const std::string& path);

    bool has(const std::string& key) const;
    std::optional<std::string> get(const std::string& key) const;  // last occurrence
    std::vector<std::string> get_all(const std::string& key) const;

    std::string get_or(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    // comma-separated value lists
    std::vector<std::string> get_list(const std::string& key) const;
    std::vector<double> get_double_list(const std::string& key) const;

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

std::string trim(const std::string& s);
std::vector<std::string> split_list(const std::string& s);  // comma-separated, trimmed

}  // namespace mcml::cfg

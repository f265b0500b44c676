#pragma once

#include <map>
#include <string>
#include <vector>

namespace conewidth {

/// Flat key = value configuration with hard validation: unknown keys are
/// rejected so a typo cannot silently weaken a certificate.
class RunConfig {
public:
    RunConfig() = default;

    /// Parse a config file (`key = value` lines, '#' comments).
    static RunConfig from_file(const std::string& path);
    /// Apply a `key=value` override (CLI flags funnel through here).
    void set(const std::string& key, const std::string& value);

    /// Throws when a stored key is not in `known`.
    void validate(const std::vector<std::string>& known) const;

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const;

    /// The fully resolved configuration (defaults folded in by the caller via
    /// `resolved`), serialized deterministically for report embedding.
    std::string dump() const;
    void note_resolved(const std::string& key, const std::string& value);

private:
    std::map<std::string, std::string> values_;
    std::map<std::string, std::string> resolved_;
};

}  // namespace conewidth

#ifndef QISD_CONFIG_HPP
#define QISD_CONFIG_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qisd/dynamics.hpp"
#include "qisd/model.hpp"
#include "qisd/wigner.hpp"

namespace qisd {

// Flat dotted-key configuration: one `key = value` per line, `#` comments.
// Keys are validated against the full known-key schema at parse time.
class Config {
  public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    std::uint64_t get_u64(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    void set(const std::string& key, const std::string& value);

    // Sorted `key = value` lines; the hashing/manifest canonical form.
    std::string canonical_text() const;
    std::uint64_t hash() const;

    const std::string& origin() const { return origin_; }

  private:
    int line_of(const std::string& key) const;
    std::string require(const std::string& key) const;

    std::map<std::string, std::pair<std::string, int>> values_;
    std::string origin_;
};

// Builders from the documented schema.
LangevinSpec build_langevin_spec(const Config& cfg);
TimeGrid build_time_grid(const Config& cfg);
StateSpec build_state_spec(const Config& cfg, const LangevinSpec& spec);
InitDistribution build_init_distribution(const Config& cfg, const LangevinSpec& spec);

} // namespace qisd

#endif

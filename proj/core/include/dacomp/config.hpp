#ifndef DACOMP_CONFIG_HPP
#define DACOMP_CONFIG_HPP

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "dacomp/errors.hpp"

namespace dacomp {

// Flat `key = value` configuration with `[section]` headers. Keys are stored
// fully qualified as "section.key"; keys before any header have no prefix.
class Config {
 public:
  Config() = default;

  static Config parse_file(const std::filesystem::path& path);
  static Config parse_string(const std::string& text);

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long get_int(const std::string& key, long fallback) const;
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback) const;

  void set(const std::string& key, const std::string& value);
  void set_double(const std::string& key, double value);
  void set_int(const std::string& key, long value);

  // Serialize back to the same format, sections sorted, keys sorted.
  std::string to_string() const;
  void write_file(const std::filesystem::path& path) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace dacomp

#endif

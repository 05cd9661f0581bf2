#ifndef NANOVLA_CONFIG_H_
#define NANOVLA_CONFIG_H_

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace nanovla {

// Flat key=value configuration, keys namespaced by dotted section prefixes
// (policy.D=64). Lines starting with '#' and blank lines are ignored.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text,
                              std::string_view source = "<string>");
  static KeyValueConfig load(const std::string& path);

  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, std::int64_t value);
  bool contains(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key,
                                  std::vector<double> fallback) const;
  std::vector<std::int64_t> get_ints(const std::string& key,
                                     std::vector<std::int64_t> fallback) const;

  // Entries under "prefix." with the prefix removed.
  KeyValueConfig section(const std::string& prefix) const;
  // Copies every entry of other into this one under "prefix.".
  void merge(const KeyValueConfig& other, const std::string& prefix = {});

  // Sorted key=value lines, each terminated by '\n'.
  std::string serialize() const;
  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

// Shortest round-trippable decimal form of a double.
std::string format_double(double value);
double parse_double(std::string_view text, std::string_view what);
std::int64_t parse_int(std::string_view text, std::string_view what);
std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

}  // namespace nanovla

#endif  // NANOVLA_CONFIG_H_

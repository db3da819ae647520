// Copyright 2026 The flowdict authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FLOWDICT_TOOLS_CONFIG_HPP
#define FLOWDICT_TOOLS_CONFIG_HPP

#include <cstdint>
#include <map>
#include <string>

namespace flowdict::tools {

/// Plain-text key=value experiment configuration.
///
/// Grammar: one `key = value` per line; blank lines and lines whose first
/// non-space character is '#' are ignored; keys may not repeat.  Parse and
/// lookup failures throw ConfigError carrying the offending line number
/// where one exists.
class Config {
 public:
  static Config parse_file(const std::string& path);
  /// `origin` names the source in error messages.
  static Config parse_text(const std::string& text, const std::string& origin);

  bool has(const std::string& key) const;

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  long long get_int(const std::string& key) const;
  long long get_int(const std::string& key, long long fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Entries in key order, for header echoes.
  const std::map<std::string, std::string>& entries() const {
    return entries_;
  }
  /// The verbatim text the config was parsed from.
  const std::string& text() const { return text_; }

 private:
  std::map<std::string, std::string> entries_;
  std::map<std::string, int> lines_;
  std::string text_;
  std::string origin_;
};

}  // namespace flowdict::tools

#endif  // FLOWDICT_TOOLS_CONFIG_HPP

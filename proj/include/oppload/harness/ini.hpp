#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace oppload::harness {

struct IniEntry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

struct IniSection {
  std::string name;
  std::size_t line = 0;
  std::vector<IniEntry> entries;  // file order, duplicates kept

  const IniEntry* find(std::string_view key) const;  // last occurrence
};

class IniError : public std::runtime_error {
 public:
  IniError(std::size_t line, const std::string& cause);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// `[section]` headers and `key = value` lines; `#` and `;` start comments.
class IniDocument {
 public:
  static IniDocument parse(std::string_view text);

  const std::vector<IniSection>& sections() const { return sections_; }
  const IniSection* section(std::string_view name) const;

 private:
  std::vector<IniSection> sections_;
};

std::string_view trim(std::string_view s);

/// Splits on runs of whitespace.
std::vector<std::string> split_ws(std::string_view s);

/// Splits on `sep` and trims every piece; empty input gives no pieces.
std::vector<std::string> split_list(std::string_view s, char sep = ',');

}  // namespace oppload::harness

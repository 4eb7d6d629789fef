#include "oppload/harness/ini.hpp"

#include <cctype>

namespace oppload::harness {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string> split_list(std::string_view s, char sep) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.emplace_back(trim(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

IniError::IniError(std::size_t line, const std::string& cause)
    : std::runtime_error("line " + std::to_string(line) + ": " + cause), line_(line) {}

const IniEntry* IniSection::find(std::string_view key) const {
  for (auto it = entries.rbegin(); it != entries.rend(); ++it)
    if (it->key == key) return &*it;
  return nullptr;
}

const IniSection* IniDocument::section(std::string_view name) const {
  for (const auto& s : sections_)
    if (s.name == name) return &s;
  return nullptr;
}

IniDocument IniDocument::parse(std::string_view text) {
  IniDocument doc;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    if (const auto c = raw.find_first_of("#;"); c != std::string_view::npos) raw = raw.substr(0, c);
    const auto line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw IniError(lineno, "unterminated section header");
      const auto name = trim(line.substr(1, line.size() - 2));
      if (name.empty()) throw IniError(lineno, "empty section name");
      if (doc.section(name)) throw IniError(lineno, "duplicate section [" + std::string(name) + "]");
      doc.sections_.push_back(IniSection{std::string(name), lineno, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw IniError(lineno, "expected key = value");
    if (doc.sections_.empty()) throw IniError(lineno, "entry outside of any section");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw IniError(lineno, "missing key");
    doc.sections_.back().entries.push_back(
        IniEntry{std::string(key), std::string(trim(line.substr(eq + 1))), lineno});
  }
  return doc;
}

}  // namespace oppload::harness

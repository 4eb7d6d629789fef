#include "oppload/workflow.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <sstream>

namespace oppload {

std::string_view to_string(ErrorClass cls) {
  switch (cls) {
    case ErrorClass::TaskExecution: return "task-execution";
    case ErrorClass::WorkerSelection: return "worker-selection";
    case ErrorClass::WorkerCalling: return "worker-calling";
  }
  return "unknown";
}

}  // namespace oppload

namespace oppload::workflow {

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::Cpu: return "cpu";
    case Metric::Memory: return "memory";
    case Metric::Disk: return "disk";
    case Metric::Energy: return "energy";
    case Metric::Distance: return "distance";
  }
  return "?";
}

std::optional<Metric> metric_from_string(std::string_view name) {
  for (Metric m : kAllMetrics)
    if (to_string(m) == name) return m;
  return std::nullopt;
}

bool Task::uses_result() const {
  return std::find(params.begin(), params.end(), kResultPlaceholder) != params.end();
}

ParseError::ParseError(std::size_t line, const std::string& cause)
    : std::runtime_error(line == 0 ? cause : "line " + std::to_string(line) + ": " + cause),
      line_(line),
      cause_(cause) {}

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::optional<double> to_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

Requirements parse_requirements(std::string_view body, std::size_t line) {
  Requirements req;
  std::size_t start = 0;
  while (start <= body.size()) {
    auto comma = body.find(',', start);
    auto item = trim(body.substr(start, comma == std::string_view::npos ? body.npos : comma - start));
    if (!item.empty()) {
      auto eq = item.find('=');
      if (eq == std::string_view::npos)
        throw ParseError(line, "requirement '" + std::string(item) + "' is not metric=value");
      auto key = trim(item.substr(0, eq));
      auto metric = metric_from_string(key);
      if (!metric) throw ParseError(line, "unknown requirement metric '" + std::string(key) + "'");
      auto value = to_double(trim(item.substr(eq + 1)));
      if (!value || *value <= 0.0)
        throw ParseError(line, "requirement '" + std::string(key) + "' must be a positive number");
      if (!req.emplace(*metric, *value).second)
        throw ParseError(line, "requirement '" + std::string(key) + "' given twice");
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return req;
}

}  // namespace

WorkflowDescription parse(std::string_view text) {
  WorkflowDescription wf;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    auto raw = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;

    auto tokens = split_ws(line);
    if (tokens.size() == 1 && tokens[0].find('=') != std::string_view::npos) {
      auto eq = tokens[0].find('=');
      auto key = tokens[0].substr(0, eq);
      if (key != "ttl") throw ParseError(line_no, "unknown directive '" + std::string(key) + "'");
      if (!wf.tasks.empty()) throw ParseError(line_no, "ttl must precede the first task");
      auto value = to_double(tokens[0].substr(eq + 1));
      if (!value || *value <= 0.0) throw ParseError(line_no, "ttl must be a positive number");
      wf.ttl_seconds = *value;
      continue;
    }

    Task task;
    if (tokens[0] == "any") {
      task.worker = JustInTime{};
    } else if (auto addr = NodeAddress::parse(tokens[0])) {
      task.worker = AheadOfTime{*addr};
    } else {
      throw ParseError(line_no, "malformed worker address '" + std::string(tokens[0]) + "'");
    }

    std::size_t end = tokens.size();
    // Requirements: trailing bracketed list, which may contain spaces.
    if (auto open = line.find('['); open != std::string_view::npos) {
      if (line.back() != ']') throw ParseError(line_no, "requirements must end the line");
      auto body = line.substr(open + 1, line.size() - open - 2);
      if (body.find('[') != std::string_view::npos || body.find(']') != std::string_view::npos)
        throw ParseError(line_no, "nested brackets in requirements");
      task.requirements = parse_requirements(body, line_no);
      tokens = split_ws(line.substr(0, open));
      end = tokens.size();
    }
    if (end < 2) throw ParseError(line_no, "missing service name");
    task.service = std::string(tokens[1]);
    for (std::size_t i = 2; i < end; ++i) task.params.emplace_back(tokens[i]);

    const auto placeholders = std::count(task.params.begin(), task.params.end(), kResultPlaceholder);
    if (placeholders > 1)
      throw ParseError(line_no, "the result placeholder is allowed only once per task");
    if (placeholders == 1 && wf.tasks.empty())
      throw ParseError(line_no, "the first task cannot take a previous result");
    wf.tasks.push_back(std::move(task));
  }
  if (wf.tasks.empty()) throw ParseError(0, "workflow must include at least one task");
  return wf;
}

std::string format(const WorkflowDescription& description) {
  std::ostringstream out;
  out << "ttl=" << number(description.ttl_seconds) << '\n';
  for (const auto& t : description.tasks) {
    if (t.just_in_time())
      out << "any";
    else
      out << std::get<AheadOfTime>(t.worker).worker.to_string();
    out << ' ' << t.service;
    for (const auto& p : t.params) out << ' ' << p;
    if (!t.requirements.empty()) {
      out << " [";
      bool first = true;
      for (const auto& [m, v] : t.requirements) {
        out << (first ? "" : ",") << to_string(m) << '=' << number(v);
        first = false;
      }
      out << ']';
    }
    out << '\n';
  }
  return out.str();
}

bool substitute_result(WorkflowDescription& description, std::string_view result_file) {
  const std::size_t next = description.cursor + 1;
  if (next >= description.tasks.size()) return false;
  auto& params = description.tasks[next].params;
  auto it = std::find(params.begin(), params.end(), kResultPlaceholder);
  if (it == params.end()) return false;
  *it = std::string(result_file);
  return true;
}

bool operator==(const Archive& a, const Archive& b) {
  if (!(a.description == b.description && a.error_log == b.error_log && a.error == b.error &&
        a.assigner == b.assigner && a.retried == b.retried && a.files.size() == b.files.size()))
    return false;
  for (auto ia = a.files.begin(), ib = b.files.begin(); ia != a.files.end(); ++ia, ++ib) {
    if (ia->first != ib->first) return false;
    if (ia->second != ib->second && *ia->second != *ib->second) return false;
  }
  return true;
}

namespace {

constexpr std::uint32_t kArchiveMagic = 0x414c504f;  // "OPLA"
constexpr std::uint16_t kArchiveVersion = 1;

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
  }
  Bytes take() { return std::move(out_); }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  Bytes out_;
};

/// Sequential reader over payload segments.
class Reader {
 public:
  explicit Reader(const Payload& p) : segs_(p.segments()) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    if (n > remaining()) throw UnpackError("truncated archive");
    std::string s;
    s.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) s.push_back(static_cast<char>(byte()));
    return s;
  }

  /// Takes `n` bytes as a blob, sharing the segment when it lines up exactly.
  Blob blob(std::uint64_t n) {
    if (n > remaining()) throw UnpackError("truncated archive");
    if (n == 0) return make_blob({});
    skip_empty();
    if (off_ == 0 && seg_ < segs_.size() && segs_[seg_]->size() == n) return segs_[seg_++];
    Bytes out;
    out.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) out.push_back(byte());
    return make_blob(std::move(out));
  }

  std::uint64_t remaining() const {
    std::uint64_t r = 0;
    for (std::size_t i = seg_; i < segs_.size(); ++i) r += segs_[i]->size();
    return r - off_;
  }

 private:
  void skip_empty() {
    while (seg_ < segs_.size() && off_ >= segs_[seg_]->size()) {
      ++seg_;
      off_ = 0;
    }
  }
  std::uint8_t byte() {
    skip_empty();
    if (seg_ >= segs_.size()) throw UnpackError("truncated archive");
    return (*segs_[seg_])[off_++];
  }
  std::uint64_t le(int n) {
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(byte()) << (8 * i);
    return v;
  }

  const std::vector<Blob>& segs_;
  std::size_t seg_ = 0;
  std::size_t off_ = 0;
};

Bytes header_bytes(const Archive& a) {
  Writer w;
  w.u32(kArchiveMagic);
  w.u16(kArchiveVersion);
  const auto& d = a.description;
  w.u64(d.id.client.value());
  w.u32(d.id.seq);
  w.u64(d.client.value());
  w.u32(static_cast<std::uint32_t>(d.cursor));
  w.f64(d.created_at);
  w.f64(d.ttl_seconds);
  w.u32(static_cast<std::uint32_t>(d.tasks.size()));
  for (const auto& t : d.tasks) {
    if (t.just_in_time()) {
      w.u8(0);
      w.u64(0);
    } else {
      w.u8(1);
      w.u64(std::get<AheadOfTime>(t.worker).worker.value());
    }
    w.str(t.service);
    w.u32(static_cast<std::uint32_t>(t.params.size()));
    for (const auto& p : t.params) w.str(p);
    w.u32(static_cast<std::uint32_t>(t.requirements.size()));
    for (const auto& [m, v] : t.requirements) {
      w.u8(static_cast<std::uint8_t>(m));
      w.f64(v);
    }
  }
  w.u64(a.assigner.value());
  w.u8(a.retried ? 1 : 0);
  w.u8(a.error ? 1 : 0);
  if (a.error) {
    w.u8(static_cast<std::uint8_t>(a.error->cls));
    w.u32(a.error->task_index);
    w.u8(a.error->retried ? 1 : 0);
    w.str(a.error->message);
  }
  w.u8(a.error_log ? 1 : 0);
  if (a.error_log) w.str(*a.error_log);
  w.u32(static_cast<std::uint32_t>(a.files.size()));
  for (const auto& [name, blob] : a.files) {
    w.str(name);
    w.u64(blob ? blob->size() : 0);
  }
  return w.take();
}

}  // namespace

Payload pack(const Archive& archive) {
  Payload p(header_bytes(archive));
  for (const auto& [name, blob] : archive.files)
    if (blob) p.append(blob);
  return p;
}

std::size_t framing_size(const Archive& archive) { return header_bytes(archive).size(); }

Archive unpack(const Payload& bytes) {
  Reader r(bytes);
  if (r.remaining() < 6 || r.u32() != kArchiveMagic) throw UnpackError("not a workflow archive");
  if (r.u16() != kArchiveVersion) throw UnpackError("unsupported archive version");
  Archive a;
  auto& d = a.description;
  d.id.client = NodeAddress(r.u64());
  d.id.seq = r.u32();
  d.client = NodeAddress(r.u64());
  d.cursor = r.u32();
  d.created_at = r.f64();
  d.ttl_seconds = r.f64();
  const std::uint32_t ntasks = r.u32();
  if (ntasks == 0 || ntasks > r.remaining()) throw UnpackError("corrupt task table");
  for (std::uint32_t i = 0; i < ntasks; ++i) {
    Task t;
    const std::uint8_t kind = r.u8();
    const std::uint64_t addr = r.u64();
    if (kind > 1) throw UnpackError("corrupt worker field");
    if (kind == 1) t.worker = AheadOfTime{NodeAddress(addr)};
    t.service = r.str();
    const std::uint32_t np = r.u32();
    if (np > r.remaining()) throw UnpackError("corrupt parameter list");
    for (std::uint32_t j = 0; j < np; ++j) t.params.push_back(r.str());
    const std::uint32_t nr = r.u32();
    if (nr > std::size(kAllMetrics)) throw UnpackError("corrupt requirements");
    for (std::uint32_t j = 0; j < nr; ++j) {
      const std::uint8_t m = r.u8();
      if (m > static_cast<std::uint8_t>(Metric::Distance)) throw UnpackError("unknown metric");
      t.requirements[static_cast<Metric>(m)] = r.f64();
    }
    d.tasks.push_back(std::move(t));
  }
  if (d.cursor > d.tasks.size()) throw UnpackError("cursor out of range");
  a.assigner = NodeAddress(r.u64());
  a.retried = r.u8() != 0;
  if (r.u8() != 0) {
    WorkerError e;
    const std::uint8_t cls = r.u8();
    if (cls > static_cast<std::uint8_t>(ErrorClass::WorkerCalling)) throw UnpackError("bad error class");
    e.cls = static_cast<ErrorClass>(cls);
    e.task_index = r.u32();
    e.retried = r.u8() != 0;
    e.message = r.str();
    a.error = std::move(e);
  }
  if (r.u8() != 0) a.error_log = r.str();
  const std::uint32_t nfiles = r.u32();
  if (nfiles > r.remaining()) throw UnpackError("corrupt file table");
  std::vector<std::pair<std::string, std::uint64_t>> table;
  for (std::uint32_t i = 0; i < nfiles; ++i) {
    auto name = r.str();
    table.emplace_back(std::move(name), r.u64());
  }
  for (auto& [name, size] : table) a.files[name] = r.blob(size);
  if (r.remaining() != 0) throw UnpackError("trailing bytes after archive");
  return a;
}

Archive unpack(std::span<const std::uint8_t> bytes) {
  return unpack(Payload(Bytes(bytes.begin(), bytes.end())));
}

}  // namespace oppload::workflow

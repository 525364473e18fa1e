#include "fermi/io.hpp"

#include <openssl/evp.h>

#include <json.hpp>

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>

namespace fermi {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

const std::vector<double>& CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return columns[i];
  }
  throw InvalidParameter("CSV has no column '" + std::string(name) + "'");
}

bool CsvTable::has(std::string_view name) const {
  for (const auto& h : header) {
    if (h == name) return true;
  }
  return false;
}

std::string to_csv(const CsvTable& table) {
  if (table.header.size() != table.columns.size()) {
    throw InvalidParameter("CSV header and column counts differ");
  }
  const std::size_t rows = table.rows();
  for (const auto& c : table.columns) {
    if (c.size() != rows) throw InvalidParameter("CSV columns have different lengths");
  }
  std::string out;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) out += ',';
    out += table.header[i];
  }
  out += '\n';
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
      if (i) out += ',';
      out += format_double(table.columns[i][r]);
    }
    out += '\n';
  }
  return out;
}

namespace {

double parse_number(std::string_view s, std::size_t line) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw InvalidParameter("CSV line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line);
    if (t.header.empty()) {
      for (auto f : fields) t.header.emplace_back(f);
      t.columns.resize(t.header.size());
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw InvalidParameter("CSV line " + std::to_string(n) + ": expected " +
                             std::to_string(t.header.size()) + " fields");
    }
    for (std::size_t i = 0; i < fields.size(); ++i) t.columns[i].push_back(parse_number(fields[i], n));
  }
  if (t.header.empty()) throw InvalidParameter("CSV is empty");
  return t;
}

CsvTable read_csv(const std::filesystem::path& path) { return parse_csv(read_file(path)); }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidParameter("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  thread_local std::mt19937_64 rng{std::random_device{}()};
  const fs::path tmp = path.string() + ".tmp-" + std::to_string(rng() & 0xffffffffu);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidParameter("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw InvalidParameter("short write to " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

std::string sha256_hex(std::string_view data) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

FileRecord record_file(const std::filesystem::path& dir, const std::string& name) {
  const std::string data = read_file(dir / name);
  return FileRecord{name, data.size(), sha256_hex(data)};
}

std::vector<VerifyIssue> verify_directory(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) {
    return {{"manifest.json", "missing"}};
  }
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    return {{"manifest.json", std::string("unreadable: ") + e.what()}};
  }
  std::vector<VerifyIssue> issues;
  if (!m.contains("files") || !m["files"].is_array()) return {{"manifest.json", "no file list"}};
  for (const auto& f : m["files"]) {
    const std::string name = f.value("name", "");
    if (name.empty()) {
      issues.push_back({"manifest.json", "file entry without a name"});
      continue;
    }
    if (!std::filesystem::exists(dir / name)) {
      issues.push_back({name, "missing"});
      continue;
    }
    const FileRecord now = record_file(dir, name);
    if (now.bytes != f.value("bytes", std::uintmax_t{0})) {
      issues.push_back({name, "size " + std::to_string(now.bytes) + " != recorded " +
                                  std::to_string(f.value("bytes", std::uintmax_t{0}))});
    } else if (now.sha256 != f.value("sha256", "")) {
      issues.push_back({name, "sha256 mismatch"});
    }
  }
  return issues;
}

}  // namespace fermi

#include "rectflow/path_io.hpp"

#include <fmt/format.h>

#include <bit>
#include <cstring>
#include <sstream>

#include "rectflow/errors.hpp"
#include "rectflow/numeric.hpp"

namespace rectflow {

namespace {

static_assert(std::endian::native == std::endian::little, "binary snapshots assume a little-endian host");

void put_u64(std::string& out, std::uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

void put_f64(std::string& out, double v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

class Reader {
 public:
  explicit Reader(const std::string& s) : s_(s) {}
  template <class T>
  T get() {
    if (pos_ + 8 > s_.size()) throw DomainError("malformed_path_file", "binary snapshot truncated");
    T v;
    std::memcpy(&v, s_.data() + pos_, 8);
    pos_ += 8;
    return v;
  }
  std::string rest(std::size_t len) {
    if (pos_ + len > s_.size()) throw DomainError("malformed_path_file", "binary trailer truncated");
    std::string out = s_.substr(pos_, len);
    pos_ += len;
    return out;
  }
  bool done() const { return pos_ == s_.size(); }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string path_to_csv(const EigenPath& path, const std::vector<std::string>& comments) {
  std::string out;
  for (const auto& c : comments) out += "# " + c + "\n";
  out += "t";
  for (std::size_t i = 1; i <= path.n(); ++i) out += fmt::format(",lambda_{}", i);
  out += "\n";
  for (std::size_t r = 0; r < path.times.size(); ++r) {
    out += fmt::format("{:.17g}", path.times[r]);
    for (double x : path.states[r]) out += fmt::format(",{:.17g}", x);
    out += "\n";
  }
  return out;
}

EigenPath path_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  bool header = false;
  std::size_t n = 0;
  EigenPath path;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
    if (!header) {
      if (cells.empty() || trim(cells[0]) != "t") throw DomainError("malformed_path_file", "expected header starting with 't'");
      n = cells.size() - 1;
      header = true;
      continue;
    }
    if (cells.size() != n + 1) throw DomainError("malformed_path_file", "row length differs from header");
    path.times.push_back(parse_double(cells[0], "time"));
    std::vector<double> state(n);
    for (std::size_t i = 0; i < n; ++i) state[i] = parse_double(cells[i + 1], "eigenvalue");
    path.states.push_back(std::move(state));
  }
  if (!header) throw DomainError("malformed_path_file", "missing header");
  return path;
}

std::string path_to_binary(const EigenPath& path, const std::string& trailer) {
  std::string out;
  put_u64(out, path.n());
  put_u64(out, path.times.size());
  for (std::size_t r = 0; r < path.times.size(); ++r) {
    put_f64(out, path.times[r]);
    for (double x : path.states[r]) put_f64(out, x);
  }
  put_u64(out, trailer.size());
  out += trailer;
  return out;
}

EigenPath path_from_binary(const std::string& bytes, std::string* trailer) {
  Reader rd(bytes);
  auto n = rd.get<std::uint64_t>();
  auto rows = rd.get<std::uint64_t>();
  if (rows > 0 && (n + 1) * rows * 8 > bytes.size()) throw DomainError("malformed_path_file", "binary snapshot truncated");
  EigenPath path;
  for (std::uint64_t r = 0; r < rows; ++r) {
    path.times.push_back(rd.get<double>());
    std::vector<double> state(n);
    for (auto& x : state) x = rd.get<double>();
    path.states.push_back(std::move(state));
  }
  std::string tail;
  if (!rd.done()) tail = rd.rest(rd.get<std::uint64_t>());
  if (trailer) *trailer = std::move(tail);
  return path;
}

}  // namespace rectflow

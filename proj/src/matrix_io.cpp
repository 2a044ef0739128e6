#include "olss/matrix_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "olss/error.hpp"

namespace olss {

namespace {

constexpr std::array<char, 8> kMagic = {'O', 'L', 'S', 'S', 'M', 'A', 'T', '1'};

void put_u64_le(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> buf;
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf.data(), 8);
}

std::uint64_t get_u64_le(std::istream& in) {
  std::array<unsigned char, 8> buf;
  if (!in.read(reinterpret_cast<char*>(buf.data()), 8))
    throw FormatError("OLSSMAT1: truncated header");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

double parse_double(std::string_view field, std::size_t line_no) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
    field.remove_suffix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw FormatError("CSV line " + std::to_string(line_no) + ": bad number '" +
                      std::string(field) + "'");
  return v;
}

}  // namespace

void write_olssmat(std::ostream& out, const Matrix& m) {
  out.write(kMagic.data(), kMagic.size());
  put_u64_le(out, m.rows());
  put_u64_le(out, m.cols());
  for (double x : m.data()) put_u64_le(out, std::bit_cast<std::uint64_t>(x));
  if (!out) throw FormatError("OLSSMAT1: write failed");
}

Matrix read_olssmat(std::istream& in) {
  std::array<char, 8> magic;
  if (!in.read(magic.data(), 8) || magic != kMagic) throw FormatError("OLSSMAT1: bad magic");
  const std::uint64_t rows = get_u64_le(in);
  const std::uint64_t cols = get_u64_le(in);
  if (cols != 0 && rows > (std::uint64_t{1} << 40) / cols)
    throw FormatError("OLSSMAT1: implausible shape");
  std::vector<double> data(rows * cols);
  for (auto& x : data) {
    try {
      x = std::bit_cast<double>(get_u64_le(in));
    } catch (const FormatError&) {
      throw FormatError("OLSSMAT1: truncated payload");
    }
  }
  try {
    return Matrix(rows, cols, std::move(data));
  } catch (const NumericError&) {
    throw FormatError("OLSSMAT1: non-finite entry");
  }
}

void write_matrix_csv(std::ostream& out, const Matrix& m) {
  out << "# " << m.rows() << ',' << m.cols() << '\n';
  std::array<char, 32> buf;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), m(i, j));
      out.write(buf.data(), ptr - buf.data());
    }
    out << '\n';
  }
}

Matrix read_matrix_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
    throw FormatError("CSV line 1: expected header '# rows,cols'");
  const auto comma = line.find(',');
  if (comma == std::string::npos) throw FormatError("CSV line 1: expected header '# rows,cols'");
  std::size_t rows = 0, cols = 0;
  {
    std::string_view r(line.data() + 2, comma - 2);
    std::string_view c(line.data() + comma + 1, line.size() - comma - 1);
    while (!c.empty() && (c.back() == '\r' || c.back() == ' ')) c.remove_suffix(1);
    auto r1 = std::from_chars(r.data(), r.data() + r.size(), rows);
    auto c1 = std::from_chars(c.data(), c.data() + c.size(), cols);
    if (r1.ec != std::errc() || c1.ec != std::errc() || r1.ptr != r.data() + r.size() ||
        c1.ptr != c.data() + c.size())
      throw FormatError("CSV line 1: bad shape header");
  }
  std::vector<double> data;
  data.reserve(rows * cols);
  std::size_t read_rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    if (read_rows == rows) throw FormatError("CSV line " + std::to_string(line_no) + ": extra row");
    std::size_t start = 0;
    std::size_t fields = 0;
    while (true) {
      const auto end = line.find(',', start);
      std::string_view field(line.data() + start,
                             (end == std::string::npos ? line.size() : end) - start);
      data.push_back(parse_double(field, line_no));
      ++fields;
      if (end == std::string::npos) break;
      start = end + 1;
    }
    if (fields != cols)
      throw FormatError("CSV line " + std::to_string(line_no) + ": expected " +
                        std::to_string(cols) + " fields, got " + std::to_string(fields));
    ++read_rows;
  }
  if (read_rows != rows)
    throw FormatError("CSV: expected " + std::to_string(rows) + " rows, got " +
                      std::to_string(read_rows));
  try {
    return Matrix(rows, cols, std::move(data));
  } catch (const NumericError&) {
    throw FormatError("CSV: non-finite entry");
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw FormatError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw FormatError("cannot rename into " + path.string());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void save_matrix(const std::filesystem::path& path, const Matrix& m) {
  std::ostringstream ss(std::ios::binary);
  if (path.extension() == ".csv")
    write_matrix_csv(ss, m);
  else
    write_olssmat(ss, m);
  write_file_atomic(path, ss.str());
}

Matrix load_matrix(const std::filesystem::path& path) {
  const std::string contents = read_file(path);
  std::istringstream in(contents, std::ios::binary);
  try {
    if (contents.size() >= 8 && std::memcmp(contents.data(), kMagic.data(), 8) == 0)
      return read_olssmat(in);
    return read_matrix_csv(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace olss

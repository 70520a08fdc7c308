#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "psp/banded_matrix.hpp"
#include "psp/csr_matrix.hpp"
#include "psp/errors.hpp"
#include "psp/gmres.hpp"
#include "psp/vector.hpp"

namespace psp::io {

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

namespace detail {

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

inline bool blank(std::string_view s) {
  return s.find_first_not_of(" \t\r") == std::string_view::npos;
}

template <typename T>
bool parse_number(std::string_view tok, T& out) {
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return res.ec == std::errc() && res.ptr == tok.data() + tok.size();
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> toks;
  std::size_t pos = 0;
  while (pos < line.size()) {
    const auto start = line.find_first_not_of(" \t\r", pos);
    if (start == std::string_view::npos) break;
    auto stop = line.find_first_of(" \t\r", start);
    if (stop == std::string_view::npos) stop = line.size();
    toks.push_back(line.substr(start, stop - start));
    pos = stop;
  }
  return toks;
}

struct MarketHeader {
  std::string format;    // coordinate | array
  std::string field;     // real | integer
  std::string symmetry;  // general | symmetric
};

inline MarketHeader read_header(std::istream& in, std::size_t& line_no) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty input, expected %%MatrixMarket header", 1);
  line_no = 1;
  const auto toks = split(line);
  if (toks.size() != 5 || toks[0] != "%%MatrixMarket") {
    throw ParseError("malformed header, expected '%%MatrixMarket matrix <format> <field> "
                     "<symmetry>'",
                     line_no);
  }
  if (lower(std::string(toks[1])) != "matrix") {
    throw UnsupportedFormatError("Matrix Market object '" + std::string(toks[1]) +
                                 "' not supported");
  }
  MarketHeader h{lower(std::string(toks[2])), lower(std::string(toks[3])),
                 lower(std::string(toks[4]))};
  if (h.format != "coordinate" && h.format != "array") {
    throw ParseError("unknown format '" + h.format + "'", line_no);
  }
  if (h.field == "complex" || h.field == "pattern") {
    throw UnsupportedFormatError("Matrix Market field '" + h.field + "' not supported");
  }
  if (h.field != "real" && h.field != "integer" && h.field != "double") {
    throw ParseError("unknown field '" + h.field + "'", line_no);
  }
  if (h.symmetry == "skew-symmetric" || h.symmetry == "hermitian") {
    throw UnsupportedFormatError("Matrix Market symmetry '" + h.symmetry + "' not supported");
  }
  if (h.symmetry != "general" && h.symmetry != "symmetric") {
    throw ParseError("unknown symmetry '" + h.symmetry + "'", line_no);
  }
  return h;
}

/// Next non-comment, non-blank line; false at end of input.
inline bool next_data_line(std::istream& in, std::string& line, std::size_t& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line) || line.front() == '%') continue;
    return true;
  }
  return false;
}

}  // namespace detail

/// Reads a real/integer, general/symmetric coordinate Matrix Market stream.
/// Indices are 1-based; duplicate entries are summed; symmetric files are
/// expanded to both triangles.
inline CsrMatrix read_matrix_market(std::istream& in) {
  std::size_t line_no = 0;
  const auto header = detail::read_header(in, line_no);
  if (header.format != "coordinate") {
    throw UnsupportedFormatError("dense 'array' Matrix Market matrices not supported");
  }
  std::string line;
  if (!detail::next_data_line(in, line, line_no)) {
    throw ParseError("missing size line", line_no + 1);
  }
  auto toks = detail::split(line);
  std::size_t rows = 0, cols = 0, nnz = 0;
  if (toks.size() != 3 || !detail::parse_number(toks[0], rows) ||
      !detail::parse_number(toks[1], cols) || !detail::parse_number(toks[2], nnz)) {
    throw ParseError("malformed size line, expected '<rows> <cols> <nnz>'", line_no);
  }
  if (header.symmetry == "symmetric" && rows != cols) {
    throw ParseError("symmetric matrix must be square", line_no);
  }

  std::vector<Triplet> entries;
  entries.reserve(header.symmetry == "symmetric" ? 2 * nnz : nnz);
  for (std::size_t k = 0; k < nnz; ++k) {
    if (!detail::next_data_line(in, line, line_no)) {
      throw ParseError("expected " + std::to_string(nnz) + " entries, found " +
                           std::to_string(k),
                       line_no + 1);
    }
    toks = detail::split(line);
    std::size_t i = 0, j = 0;
    double v = 0.0;
    if (toks.size() != 3 || !detail::parse_number(toks[0], i) ||
        !detail::parse_number(toks[1], j) || !detail::parse_number(toks[2], v)) {
      throw ParseError("malformed entry, expected '<row> <col> <value>'", line_no);
    }
    if (i < 1 || i > rows || j < 1 || j > cols) {
      throw ParseError("entry index out of range", line_no);
    }
    entries.push_back({i - 1, j - 1, v});
    if (header.symmetry == "symmetric" && i != j) entries.push_back({j - 1, i - 1, v});
  }
  if (detail::next_data_line(in, line, line_no)) {
    throw ParseError("unexpected data after " + std::to_string(nnz) + " entries", line_no);
  }
  return CsrMatrix::from_triplets(rows, cols, std::move(entries));
}

inline CsrMatrix read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'", 0);
  return read_matrix_market(in);
}

inline void write_matrix_market(std::ostream& out, const CsrMatrix& a) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.rows() << ' ' << a.cols() << ' ' << a.nnz() << '\n';
  for (const auto& t : a.to_triplets()) {
    out << t.row + 1 << ' ' << t.col + 1 << ' ' << format_double(t.value) << '\n';
  }
}

inline void write_matrix_market(const std::string& path, const CsrMatrix& a) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  write_matrix_market(out, a);
}

/// Right-hand side: either a Matrix Market 'array' n x 1 file or plain
/// whitespace-separated numbers.
inline Vector read_vector(std::istream& in) {
  Vector v;
  std::string line;
  std::size_t line_no = 0;
  std::string first;
  if (in.peek() == '%') {
    const auto header = detail::read_header(in, line_no);
    if (header.format != "array") {
      throw UnsupportedFormatError("vector files must use the Matrix Market 'array' format");
    }
    if (!detail::next_data_line(in, line, line_no)) throw ParseError("missing size line", line_no);
    const auto toks = detail::split(line);
    std::size_t rows = 0, cols = 0;
    if (toks.size() != 2 || !detail::parse_number(toks[0], rows) ||
        !detail::parse_number(toks[1], cols) || cols != 1) {
      throw ParseError("malformed array size line, expected '<rows> 1'", line_no);
    }
    v.reserve(rows);
    while (v.size() < rows && detail::next_data_line(in, line, line_no)) {
      double x = 0.0;
      const auto t = detail::split(line);
      if (t.size() != 1 || !detail::parse_number(t[0], x)) {
        throw ParseError("malformed vector entry", line_no);
      }
      v.push_back(x);
    }
    if (v.size() != rows) throw ParseError("vector shorter than declared", line_no);
    return v;
  }
  while (std::getline(in, line)) {
    ++line_no;
    for (auto tok : detail::split(line)) {
      double x = 0.0;
      if (!detail::parse_number(tok, x)) throw ParseError("malformed number", line_no);
      v.push_back(x);
    }
  }
  return v;
}

inline Vector read_vector(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'", 0);
  return read_vector(in);
}

/// "iter,residual_norm" with one row per GMRES iteration.
inline void write_residual_csv(std::ostream& out, std::span<const double> residuals) {
  out << "iter,residual_norm\n";
  for (std::size_t k = 0; k < residuals.size(); ++k) {
    out << k + 1 << ',' << format_double(residuals[k]) << '\n';
  }
}

/// Key/value dump of a SolveReport.
inline void write_report_csv(std::ostream& out, const SolveReport& r) {
  out << "key,value\n";
  out << "converged," << (r.converged ? 1 : 0) << '\n';
  out << "iterations_total," << r.iterations_total << '\n';
  out << "restarts_used," << r.restarts_used << '\n';
  out << "matvec_count," << r.matvec_count << '\n';
  out << "precond_apply_count," << r.precond_apply_count << '\n';
  out << "initial_residual," << format_double(r.initial_residual) << '\n';
  out << "final_residual," << format_double(r.final_residual) << '\n';
  out << "tolerance," << format_double(r.tolerance) << '\n';
}

inline void write_vector_csv(std::ostream& out, std::span<const double> x) {
  out << "index,value\n";
  for (std::size_t i = 0; i < x.size(); ++i) out << i + 1 << ',' << format_double(x[i]) << '\n';
}

/// Plain PBM (P1) bitmap of the nonzero pattern: 1 marks a stored nonzero.
inline void emit_pattern(std::ostream& out, const CsrMatrix& a) {
  out << "P1\n" << a.cols() << ' ' << a.rows() << '\n';
  std::string row(a.cols() * 2, ' ');
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) row[2 * j] = '0';
    const auto offs = a.row_offsets();
    for (std::size_t k = offs[i]; k < offs[i + 1]; ++k) {
      if (a.values()[k] != 0.0) row[2 * a.col_indices()[k]] = '1';
    }
    out << std::string_view(row).substr(0, row.size() - 1) << '\n';
  }
}

inline void emit_pattern(std::ostream& out, const BandedMatrix& m) { emit_pattern(out, m.to_csr()); }

struct PlotSeries {
  std::string label;
  std::string color;
  std::vector<double> residuals;
};

/// SVG 1.1 line plot of log10(residual) against iteration.
inline void emit_plot(std::ostream& out, const std::string& title, std::span<const PlotSeries> series) {
  constexpr double width = 640, height = 420, left = 70, right = 20, top = 40, bottom = 50;
  std::size_t max_iter = 1;
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (const auto& s : series) {
    max_iter = std::max(max_iter, s.residuals.size());
    for (double r : s.residuals) {
      if (!(r > 0.0) || !std::isfinite(r)) continue;
      const double l = std::log10(r);
      if (!any) lo = hi = l;
      lo = std::min(lo, l);
      hi = std::max(hi, l);
      any = true;
    }
  }
  lo = std::floor(lo);
  hi = std::ceil(hi);
  if (hi <= lo) hi = lo + 1.0;
  const double pw = width - left - right;
  const double ph = height - top - bottom;
  auto px = [&](double it) { return left + pw * it / static_cast<double>(max_iter); };
  auto py = [&](double l) { return top + ph * (hi - l) / (hi - lo); };

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << width
      << "\" height=\"" << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"16\">"
      << title << "</text>\n";
  out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double l = lo; l <= hi; l += 1.0) {
    out << "<line x1=\"" << left << "\" y1=\"" << py(l) << "\" x2=\"" << left + pw << "\" y2=\""
        << py(l) << "\" stroke=\"#ddd\"/>\n";
    out << "<text x=\"" << left - 6 << "\" y=\"" << py(l) + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">1e"
        << static_cast<int>(l) << "</text>\n";
  }
  out << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">iteration (max "
      << max_iter << ")</text>\n";
  double legend_y = top + 16;
  for (const auto& s : series) {
    out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < s.residuals.size(); ++k) {
      const double r = s.residuals[k];
      if (!(r > 0.0) || !std::isfinite(r)) continue;
      out << px(static_cast<double>(k + 1)) << ',' << py(std::log10(r)) << ' ';
    }
    out << "\"/>\n";
    out << "<text x=\"" << left + pw - 8 << "\" y=\"" << legend_y
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << s.color
        << "\">" << s.label << "</text>\n";
    legend_y += 16;
  }
  out << "</svg>\n";
}

}  // namespace psp::io

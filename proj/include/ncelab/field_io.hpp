#pragma once

#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "ncelab/errors.hpp"
#include "ncelab/grid.hpp"
#include "ncelab/util.hpp"

namespace ncelab {

/// Binary field container: a short text header (format tag, dimension,
/// counts, spacings) followed by the nodal values as raw doubles in flat
/// order, native (little-endian) byte order.
inline void write_field(const std::string& path, const ScalarField& v) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw config_error("cannot open '" + path + "' for writing");
  const Grid& g = v.grid();
  out << "ncelab-field 1\n";
  out << "dim " << g.dim() << "\n";
  out << "counts";
  for (int d = 0; d < g.dim(); ++d) out << ' ' << g.count(d);
  out << "\nspacings";
  for (int d = 0; d < g.dim(); ++d) out << ' ' << format_double(g.spacing(d));
  out << "\ndata\n";
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(v.size())));
  if (!out) throw config_error("writing '" + path + "' failed");
}

inline ScalarField read_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open field file '" + path + "'");
  std::string line;
  const auto next_line = [&](const char* what) -> std::string& {
    if (!std::getline(in, line))
      throw config_error("'" + path + "': truncated header, missing " + what);
    return line;
  };
  if (next_line("format tag") != "ncelab-field 1")
    throw config_error("'" + path + "': not a field file (unrecognized format tag)");

  std::istringstream dim_line(next_line("dimension"));
  std::string key;
  int dim = 0;
  if (!(dim_line >> key >> dim) || key != "dim" || dim < 1 || dim > 3)
    throw config_error("'" + path + "': bad dimension line");

  std::istringstream counts_line(next_line("counts"));
  counts_line >> key;
  std::vector<int> counts(static_cast<std::size_t>(dim));
  bool counts_ok = key == "counts";
  for (int& c : counts) counts_ok = counts_ok && static_cast<bool>(counts_line >> c);
  if (!counts_ok) throw config_error("'" + path + "': bad counts line");

  std::istringstream spacings_line(next_line("spacings"));
  spacings_line >> key;
  std::vector<double> spacings(static_cast<std::size_t>(dim));
  bool spacings_ok = key == "spacings";
  for (double& h : spacings) spacings_ok = spacings_ok && static_cast<bool>(spacings_line >> h);
  if (!spacings_ok) throw config_error("'" + path + "': bad spacings line");

  if (next_line("data marker") != "data")
    throw config_error("'" + path + "': missing data marker");

  Grid g(std::move(counts), std::move(spacings));
  std::vector<double> values(static_cast<std::size_t>(g.size()));
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(sizeof(double) * values.size()));
  if (static_cast<std::size_t>(in.gcount()) != sizeof(double) * values.size())
    throw config_error("'" + path + "': truncated data section");
  if (in.peek() != std::char_traits<char>::eof())
    throw config_error("'" + path + "': trailing bytes after the data section");
  return ScalarField(std::move(g), std::move(values));
}

/// FNV-1a fingerprint of a file's bytes, as 16 hex digits.
inline std::string checksum_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open '" + path + "' for checksumming");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return to_hex(fnv1a64(bytes.data(), bytes.size()));
}

/// Plot-ready dump: one row per node with multi-index, coordinates, value.
inline void export_csv(const std::string& path, const ScalarField& v,
                       const std::string& value_name = "value") {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw config_error("cannot open '" + path + "' for writing");
  const Grid& g = v.grid();
  for (int d = 0; d < g.dim(); ++d) out << 'i' << d << ',';
  for (int d = 0; d < g.dim(); ++d) out << 'x' << d << ',';
  out << value_name << '\n';
  std::array<int, 3> m{0, 0, 0};
  for (std::int64_t i = 0; i < v.size(); ++i) {
    for (int d = 0; d < g.dim(); ++d) out << m[d] << ',';
    for (int d = 0; d < g.dim(); ++d) out << format_double(g.coord(m, d)) << ',';
    out << format_double(v[i]) << '\n';
    g.advance(m);
  }
  if (!out) throw config_error("writing '" + path + "' failed");
}

}  // namespace ncelab

#include "odmr/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "odmr/errors.hpp"

namespace odmr {

namespace {

// strtod over the full token; rejects empty fields and trailing junk.
bool parse_double(const std::string& tok, double& out) {
  if (tok.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtod(tok.c_str(), &end);
  return end == tok.c_str() + tok.size() && errno != ERANGE;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

std::string format_double(double v) {
  // Fewest of 15/16/17 significant digits that round-trips exactly.
  char buf[40];
  for (int prec : {15, 16, 17}) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    double back = 0.0;
    if (parse_double(buf, back) && back == v) break;
  }
  return buf;
}

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open '" + tmp + "' for writing");
    out << content;
    out.flush();
    if (!out) throw io_error("write to '" + tmp + "' failed");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw io_error("rename to '" + path + "' failed: " +
                   std::string(std::strerror(errno)));
  }
}

void write_spectrum_csv(const std::string& path, const SyntheticSpectrum& s) {
  std::ostringstream out;
  out << "frequency_mhz,signal\n";
  for (std::size_t i = 0; i < s.values.size(); ++i)
    out << format_double(s.grid.frequency_at(i)) << ','
        << format_double(s.values[i]) << '\n';
  write_text_atomic(path, out.str());
}

SyntheticSpectrum read_spectrum_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open '" + path + "' for reading");

  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line))
    throw csv_format_error("'" + path + "': empty file");
  ++line_no;
  if (strip_cr(line) != "frequency_mhz,signal")
    throw csv_format_error("'" + path + "': line 1: expected header "
                           "'frequency_mhz,signal'");

  std::vector<double> freqs;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty() && in.eof()) break;
    const auto first = line.find(',');
    if (first == std::string::npos || line.find(',', first + 1) != std::string::npos)
      throw csv_format_error("'" + path + "': line " + std::to_string(line_no) +
                             ": expected exactly 2 comma-separated fields");
    double f = 0.0;
    double v = 0.0;
    if (!parse_double(line.substr(0, first), f) ||
        !parse_double(line.substr(first + 1), v))
      throw csv_format_error("'" + path + "': line " + std::to_string(line_no) +
                             ": non-numeric field");
    freqs.push_back(f);
    values.push_back(v);
  }
  if (freqs.size() < 2)
    throw csv_format_error("'" + path + "': need at least 2 data rows");

  const double span = freqs.back() - freqs.front();
  if (!(span > 0.0))
    throw csv_format_error("'" + path + "': frequency column must increase");
  const double step = span / static_cast<double>(freqs.size() - 1);
  for (std::size_t i = 1; i < freqs.size(); ++i) {
    const double expect = freqs.front() + step * static_cast<double>(i);
    if (std::abs(freqs[i] - expect) > 1e-6 * span)
      throw csv_format_error("'" + path + "': line " + std::to_string(i + 2) +
                             ": frequency grid is not uniformly spaced");
  }

  SyntheticSpectrum s;
  s.grid = {freqs.front(), freqs.back(), freqs.size()};
  s.values = std::move(values);
  return s;
}

void write_heatmap_csv(const std::string& path, const DipCountMap& map) {
  std::ostringstream out;
  out << "theta_deg\\phi_deg";
  for (double phi : map.phi_axis.values) out << ',' << format_double(phi);
  out << '\n';
  for (std::size_t ti = 0; ti < map.theta_axis.values.size(); ++ti) {
    out << format_double(map.theta_axis.values[ti]);
    for (std::size_t pi = 0; pi < map.phi_axis.values.size(); ++pi)
      out << ',' << map.at(ti, pi);
    out << '\n';
  }
  write_text_atomic(path, out.str());
}

std::string heatmap_svg(const DipCountMap& map) {
  // One fixed color per count 1..8.
  static const char* palette[9] = {"#000000", "#30123b", "#4458cb", "#3e9bfe",
                                   "#18d6cb", "#46f884", "#a2fc3c", "#e1dd37",
                                   "#fa7d20"};
  const std::size_t nt = map.theta_axis.values.size();
  const std::size_t np = map.phi_axis.values.size();
  const int cell = 3;
  const int legend_h = 40;
  const int w = static_cast<int>(np) * cell;
  const int h = static_cast<int>(nt) * cell + legend_h;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
      << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << ' ' << h << "\">\n";
  svg << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
  // Run-length encode each row to keep the file small.
  for (std::size_t ti = 0; ti < nt; ++ti) {
    std::size_t pi = 0;
    while (pi < np) {
      const int c = map.at(ti, pi);
      std::size_t run = 1;
      while (pi + run < np && map.at(ti, pi + run) == c) ++run;
      const int color_idx = c >= 1 && c <= 8 ? c : 0;
      svg << "<rect x=\"" << pi * cell << "\" y=\"" << ti * cell << "\" width=\""
          << run * cell << "\" height=\"" << cell << "\" fill=\""
          << palette[color_idx] << "\"/>\n";
      pi += run;
    }
  }
  for (int c = 1; c <= 8; ++c) {
    const int x = (c - 1) * 90 + 10;
    const int y = static_cast<int>(nt) * cell + 10;
    svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"18\" height=\"18\" fill=\""
        << palette[c] << "\"/>\n";
    svg << "<text x=\"" << x + 24 << "\" y=\"" << y + 14
        << "\" font-family=\"sans-serif\" font-size=\"13\">" << c
        << " dip" << (c > 1 ? "s" : "") << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

json make_document(const json& config, const json& result) {
  return json{{"schema_version", 1}, {"config", config}, {"result", result}};
}

void write_json_atomic(const std::string& path, const json& doc) {
  write_text_atomic(path, doc.dump(2) + "\n");
}

void to_json(json& j, const FieldVector& v) {
  j = json{{"bx_mt", v.bx}, {"by_mt", v.by}, {"bz_mt", v.bz},
           {"magnitude_mt", v.magnitude()}};
}

void to_json(json& j, const ProjectionSet& p) {
  j = json{{"b_kappa_mt", p.b_kappa},
           {"b_chi_mt", p.b_chi},
           {"b_phi_mt", p.b_phi},
           {"b_lambda_mt", p.b_lambda},
           {"sum_mt", p.sum()}};
}

void to_json(json& j, const TransitionPair& t) {
  j = json{{"axis", axis_name(t.axis)},
           {"f_minus_mhz", t.f_minus_mhz},
           {"f_plus_mhz", t.f_plus_mhz}};
}

void to_json(json& j, const TransitionTable& t) {
  j = json::array();
  for (const auto& p : t.pairs) j.push_back(p);
}

void to_json(json& j, const CaseClassification& c) {
  j = json{{"label", c.label},
           {"nominal_dips", c.nominal_dips},
           {"observable_dips", c.observable_dips},
           {"zero_projections", c.zero_projections},
           {"group_sizes", c.group_sizes}};
}

void to_json(json& j, const PeakGuess& p) {
  j = json{{"center_mhz", p.center_mhz},
           {"fwhm_mhz", p.fwhm_mhz},
           {"depth", p.depth}};
}

void to_json(json& j, const FitResult& r) {
  j = json{{"baseline", r.baseline},
           {"peaks", r.peaks},
           {"residual_rms", r.residual_rms},
           {"converged", r.converged},
           {"iterations", r.iterations},
           {"standard_errors", r.standard_errors}};
}

void to_json(json& j, const FieldCandidate& c) {
  j = json{{"field", c.field},
           {"projections", c.projections},
           {"residual_mt", c.residual_mt}};
}

void to_json(json& j, const InversionResult& r) {
  json sets = json::array();
  for (const auto& ms : r.magnitude_sets)
    sets.push_back(std::vector<double>(ms.begin(), ms.end()));
  j = json{{"fit", r.fit},
           {"dip_centers_mhz", r.dip_centers_mhz},
           {"magnitude_sets_mt", sets},
           {"candidates", r.candidates},
           {"candidate_count", r.candidates.size()}};
}

}  // namespace odmr

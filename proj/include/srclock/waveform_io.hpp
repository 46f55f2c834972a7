/**
 * @brief Versioned columnar text format for Waveform and SampledWaveform.
 *
 *   # srclock waveform v1
 *   segment_duration_s <double>
 *   segments <N>
 *   label <text to end of line>
 *   constants_hash <16 hex digits>
 *   index amplitude_fraction phase_rad
 *   0 <amp> <phase>
 *   ...
 *
 * The sampled variant uses "# srclock sampled v1", step_duration_s, samples
 * and columns "index rabi_rad_per_s phase_rad". Floats carry 17 significant
 * digits so files round-trip bit-exactly.
 */
#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "srclock/pulses.hpp"
#include "srclock/support/format.hpp"

namespace srclock {

inline constexpr const char* kWaveformMagic = "# srclock waveform v1";
inline constexpr const char* kSampledMagic = "# srclock sampled v1";

class FormatError : public std::runtime_error {
 public:
  FormatError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

inline void write_waveform(std::ostream& os, const Waveform& w, const PhysicalConstants& c = {}) {
  os << kWaveformMagic << '\n'
     << "segment_duration_s " << format_double(w.segmentDuration) << '\n'
     << "segments " << w.size() << '\n'
     << "label " << w.label << '\n'
     << "constants_hash " << constants_hash(c) << '\n'
     << "index amplitude_fraction phase_rad\n";
  for (std::size_t i = 0; i < w.size(); ++i)
    os << i << ' ' << format_double(w.segments[i].amplitude) << ' ' << format_double(w.segments[i].phase) << '\n';
}

inline void write_sampled(std::ostream& os, const SampledWaveform& sw, const PhysicalConstants& c = {}) {
  os << kSampledMagic << '\n'
     << "step_duration_s " << format_double(sw.stepDuration) << '\n'
     << "samples " << sw.size() << '\n'
     << "constants_hash " << constants_hash(c) << '\n'
     << "index rabi_rad_per_s phase_rad\n";
  for (std::size_t i = 0; i < sw.size(); ++i)
    os << i << ' ' << format_double(sw.samples[i].rabi) << ' ' << format_double(sw.samples[i].phase) << '\n';
}

namespace detail {

class LineReader {
 public:
  explicit LineReader(std::istream& is) : is_(is) {}

  std::string next(const char* expecting) {
    std::string line;
    if (!std::getline(is_, line)) throw FormatError(line_ + 1, std::string("unexpected end of file, expected ") + expecting);
    ++line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  }

  /// Parses "key value" and returns the value text.
  std::string keyed(const std::string& key) {
    const std::string line = next(key.c_str());
    if (line.rfind(key + ' ', 0) != 0) throw FormatError(line_, "expected '" + key + "'");
    return line.substr(key.size() + 1);
  }

  int line() const { return line_; }

 private:
  std::istream& is_;
  int line_ = 0;
};

inline double parse_double(const std::string& text, int line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw FormatError(line, "not a number: '" + text + "'");
  }
  if (used != text.size()) throw FormatError(line, "trailing characters in '" + text + "'");
  return v;
}

inline std::size_t parse_count(const std::string& text, int line) {
  const double v = parse_double(text, line);
  if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v))) throw FormatError(line, "bad count '" + text + "'");
  return static_cast<std::size_t>(v);
}

template <class Row>
void read_rows(LineReader& in, std::size_t n, const std::string& columns, Row&& row) {
  if (in.next("column header") != columns) throw FormatError(in.line(), "expected column header '" + columns + "'");
  for (std::size_t i = 0; i < n; ++i) {
    const std::string line = in.next("data row");
    std::istringstream ss(line);
    std::string idx, a, b, extra;
    if (!(ss >> idx >> a >> b) || (ss >> extra)) throw FormatError(in.line(), "expected 3 columns");
    if (parse_count(idx, in.line()) != i) throw FormatError(in.line(), "row index out of order");
    row(i, parse_double(a, in.line()), parse_double(b, in.line()));
  }
}

}  // namespace detail

struct WaveformFile {
  Waveform waveform;
  std::string constantsHash;
};

inline WaveformFile read_waveform(std::istream& is) {
  detail::LineReader in(is);
  if (in.next("header") != kWaveformMagic) throw FormatError(1, "not a srclock waveform v1 file");
  WaveformFile f;
  const std::string durationText = in.keyed("segment_duration_s");
  f.waveform.segmentDuration = detail::parse_double(durationText, in.line());
  const std::string countText = in.keyed("segments");
  const std::size_t n = detail::parse_count(countText, in.line());
  f.waveform.label = in.keyed("label");
  f.constantsHash = in.keyed("constants_hash");
  f.waveform.segments.resize(n);
  detail::read_rows(in, n, "index amplitude_fraction phase_rad", [&](std::size_t i, double a, double p) {
    f.waveform.segments[i] = {a, p};
  });
  try {
    f.waveform.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(in.line(), e.what());
  }
  return f;
}

inline SampledWaveform read_sampled(std::istream& is) {
  detail::LineReader in(is);
  if (in.next("header") != kSampledMagic) throw FormatError(1, "not a srclock sampled v1 file");
  SampledWaveform sw;
  const std::string stepText = in.keyed("step_duration_s");
  sw.stepDuration = detail::parse_double(stepText, in.line());
  const std::string countText = in.keyed("samples");
  const std::size_t n = detail::parse_count(countText, in.line());
  in.keyed("constants_hash");
  sw.samples.resize(n);
  detail::read_rows(in, n, "index rabi_rad_per_s phase_rad", [&](std::size_t i, double r, double p) {
    sw.samples[i] = {r, p};
  });
  if (!(sw.stepDuration > 0.0)) throw FormatError(2, "step duration must be positive");
  return sw;
}

inline void save_waveform(const std::string& path, const Waveform& w, const PhysicalConstants& c = {}) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  write_waveform(os, w, c);
}

inline WaveformFile load_waveform(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  try {
    return read_waveform(is);
  } catch (const FormatError& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

}  // namespace srclock

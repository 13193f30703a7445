#include "emssl/trm/param_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <fmt/format.h>

namespace emssl::trm {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t column_of(std::string_view line, std::string_view part) {
  return static_cast<std::size_t>(part.data() - line.data()) + 1;
}

[[noreturn]] void parse_error(const std::filesystem::path& path, std::size_t line, std::size_t col,
                              const std::string& msg) {
  throw ValidationError(fmt::format("{}:{}:{}: {}", path.string(), line, col, msg));
}

double parse_double(std::string_view text, const std::filesystem::path& path, std::size_t line, std::size_t col) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty()) {
    parse_error(path, line, col, fmt::format("expected a number, found '{}'", text));
  }
  return v;
}

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

}  // namespace

UtteranceFile read_utterance_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  const auto names = utterance_field_names();
  std::array<double, kUtteranceFieldCount> values{};
  std::array<bool, kUtteranceFieldCount> seen{};
  UtteranceFile result;

  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = raw;
    std::string_view body = line.substr(0, line.find('#'));
    if (trim(body).empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      parse_error(path, line_no, column_of(line, trim(body)), "expected 'name = value'");
    }
    const auto key = trim(body.substr(0, eq));
    const auto value = trim(body.substr(eq + 1));
    if (key == "noise_seed") {
      std::uint64_t seed = 0;
      auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), seed);
      if (ec != std::errc() || ptr != value.data() + value.size() || value.empty()) {
        parse_error(path, line_no, column_of(line, value), "noise_seed must be an unsigned integer");
      }
      result.noise_seed = seed;
      continue;
    }
    const auto it = std::find(names.begin(), names.end(), key);
    if (it == names.end()) parse_error(path, line_no, column_of(line, key), fmt::format("unknown field '{}'", key));
    const auto idx = static_cast<std::size_t>(it - names.begin());
    if (seen[idx]) parse_error(path, line_no, column_of(line, key), fmt::format("duplicate field '{}'", key));
    values[idx] = parse_double(value, path, line_no, column_of(line, value));
    seen[idx] = true;
  }
  for (std::size_t i = 0; i < kUtteranceFieldCount; ++i) {
    if (!seen[i]) parse_error(path, line_no + 1, 1, fmt::format("missing field '{}'", names[i]));
  }
  result.params = UtteranceParams::from_array(values);
  return result;
}

void write_utterance_file(const std::filesystem::path& path, const UtteranceParams& u,
                          std::optional<std::uint64_t> noise_seed) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  const auto names = utterance_field_names();
  const auto values = u.to_array();
  out << "# trainable\n";
  for (std::size_t i = 0; i < kUtteranceFieldCount; ++i) {
    if (i == kTrainableUtteranceCount) out << "# fixed\n";
    out << names[i] << " = " << format_double(values[i]) << '\n';
  }
  if (noise_seed) out << "noise_seed = " << *noise_seed << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

ControlTrack read_control_csv(const std::filesystem::path& path, double frame_rate_hz) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  const auto names = control_field_names();
  ControlTrack track;
  track.frame_rate_hz = frame_rate_hz;

  std::string raw;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = raw;
    if (trim(line).empty()) continue;
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (cells.size() != kControlDims) {
      parse_error(path, line_no, 1, fmt::format("expected {} columns, found {}", kControlDims, cells.size()));
    }
    if (!header) {
      for (std::size_t c = 0; c < kControlDims; ++c) {
        if (cells[c] != names[c]) {
          parse_error(path, line_no, column_of(line, cells[c]),
                      fmt::format("header column {} should be '{}', found '{}'", c + 1, names[c], cells[c]));
        }
      }
      header = true;
      continue;
    }
    ControlFrame frame{};
    for (std::size_t c = 0; c < kControlDims; ++c) {
      frame[c] = parse_double(cells[c], path, line_no, column_of(line, cells[c]));
    }
    try {
      validate(frame);
    } catch (const ValidationError& e) {
      parse_error(path, line_no, 1, e.what());
    }
    track.frames.push_back(frame);
  }
  if (!header) throw ValidationError(path.string() + ": control CSV is empty (no header row)");
  if (track.frames.empty()) throw ValidationError(path.string() + ": control CSV has no frames");
  return track;
}

void write_control_csv(const std::filesystem::path& path, const ControlTrack& track) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  const auto names = control_field_names();
  for (std::size_t c = 0; c < kControlDims; ++c) out << (c ? "," : "") << names[c];
  out << '\n';
  for (const auto& f : track.frames) {
    for (std::size_t c = 0; c < kControlDims; ++c) out << (c ? "," : "") << format_double(f[c]);
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace emssl::trm

#include "dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "oupm/format.hpp"

namespace oupm::cli {

namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_cell(const std::string& cell, const std::string& source, std::size_t line,
                  const std::string& column) {
  double v = 0.0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size() ||
      !std::isfinite(v)) {
    std::ostringstream msg;
    msg << source << ":" << line << ": column '" << column << "' has "
        << (cell.empty() ? "a missing value" : "invalid value '" + cell + "'");
    throw DataError(msg.str(), line);
  }
  return v;
}

}  // namespace

Dataset parse_dataset(const std::string& csv_text, const std::vector<std::string>& channels,
                      const std::string& target, bool require_target, const std::string& source) {
  std::istringstream in(csv_text);
  std::string line;
  if (!std::getline(in, line)) throw DataError(source + ": empty file");
  const auto header = split_row(line);
  auto find = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t k = 0; k < header.size(); ++k)
      if (header[k] == name) return k;
    return std::nullopt;
  };

  const auto time_col = find("time_s");
  if (!time_col) throw DataError(source + ": missing required column 'time_s'");
  if (channels.empty()) throw DataError(source + ": no input channels configured");
  std::vector<std::size_t> ch_cols;
  for (const auto& ch : channels) {
    const auto col = find(ch);
    if (!col) throw DataError(source + ": missing input column '" + ch + "'");
    ch_cols.push_back(*col);
  }
  const auto target_col = find(target);
  if (require_target && !target_col)
    throw DataError(source + ": missing target column '" + target + "'");

  std::vector<double> times, values, tgt;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_row(line);
    auto cell = [&](std::size_t col, const std::string& name) {
      if (col >= cells.size()) return parse_cell("", source, line_no, name);
      return parse_cell(cells[col], source, line_no, name);
    };
    times.push_back(cell(*time_col, "time_s"));
    for (std::size_t k = 0; k < channels.size(); ++k) values.push_back(cell(ch_cols[k], channels[k]));
    if (target_col) {
      const double v = cell(*target_col, target);
      if (v < 0.0) {
        std::ostringstream msg;
        msg << source << ":" << line_no << ": target '" << target << "' is negative";
        throw DataError(msg.str(), line_no);
      }
      tgt.push_back(v);
    }
  }
  if (times.size() < 2) throw DataError(source + ": need at least two data rows");

  const double dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
  if (!(dt > 0.0)) throw DataError(source + ": timestamps must be strictly increasing");
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double expected = times.front() + dt * static_cast<double>(i);
    if (i > 0 && !(times[i] > times[i - 1])) {
      std::ostringstream msg;
      msg << source << ": timestamps not strictly increasing at data row " << i;
      throw DataError(msg.str(), i);
    }
    if (std::abs(times[i] - expected) > 1e-6 * dt) {
      std::ostringstream msg;
      msg << source << ": non-uniform sampling at data row " << i << " (t = " << times[i]
          << ", expected " << expected << ")";
      throw DataError(msg.str(), i);
    }
  }

  Dataset ds{InputSeries(times.front(), dt, channels, std::move(values)), std::nullopt};
  if (target_col) ds.target_raw = std::move(tgt);
  return ds;
}

Dataset read_dataset(const std::filesystem::path& path, const std::vector<std::string>& channels,
                     const std::string& target, bool require_target) {
  return parse_dataset(read_text(path), channels, target, require_target, path.string());
}

std::string dataset_csv(const InputSeries& inputs, const std::string& target,
                        const std::vector<double>& target_raw, const std::string& extra_name,
                        const std::vector<double>& extra) {
  std::string out = "time_s";
  for (const auto& ch : inputs.channel_names()) out += "," + ch;
  if (!target.empty()) out += "," + target;
  if (!extra_name.empty()) out += "," + extra_name;
  out += '\n';
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    append_double(out, inputs.time(i));
    for (double v : inputs.row(i)) {
      out += ',';
      append_double(out, v);
    }
    if (!target.empty()) {
      out += ',';
      append_double(out, target_raw.at(i));
    }
    if (!extra_name.empty()) {
      out += ',';
      append_double(out, extra.at(i));
    }
    out += '\n';
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << text;
  out.close();
  if (!out) throw Error("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace oupm::cli

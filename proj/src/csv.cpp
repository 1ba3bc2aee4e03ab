#include "proxybounds/csv.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace proxybounds {

namespace {

std::string trim_cell(std::string cell) {
  auto issp = [](unsigned char c) { return c == ' ' || c == '\t' || c == '\r'; };
  while (!cell.empty() && issp(static_cast<unsigned char>(cell.front()))) cell.erase(cell.begin());
  while (!cell.empty() && issp(static_cast<unsigned char>(cell.back()))) cell.pop_back();
  if (cell.size() >= 2 && cell.front() == '"' && cell.back() == '"')
    cell = cell.substr(1, cell.size() - 2);
  return cell;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream stream(line);
  while (std::getline(stream, cell, ',')) cells.push_back(trim_cell(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool is_missing(const std::string& cell) {
  return cell.empty() || cell == "NA" || cell == "na" || cell == "NaN" || cell == "nan";
}

std::size_t column_index(const std::vector<std::string>& header,
                         const std::string& name,
                         const std::filesystem::path& path) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end())
    throw Error(ErrorKind::parse_error,
                path.string() + ": column '" + name + "' not found");
  return static_cast<std::size_t>(it - header.begin());
}

double parse_number(const std::string& cell, std::size_t line_no,
                    const std::string& column, const std::filesystem::path& path) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  const double value = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw Error(ErrorKind::parse_error,
                path.string() + ":" + std::to_string(line_no) + ": cannot parse '" +
                    cell + "' in column '" + column + "' as a number");
  return value;
}

}  // namespace

LoadedSample load_sample_csv(const std::filesystem::path& path, const ColumnMap& columns) {
  if (columns.outcome == columns.proxy1 || columns.outcome == columns.proxy2 ||
      columns.proxy1 == columns.proxy2)
    throw std::invalid_argument("column map: outcome and proxy columns must be distinct");

  std::ifstream in(path);
  if (!in)
    throw Error(ErrorKind::parse_error, "cannot open input file: " + path.string());

  std::string line;
  if (!std::getline(in, line))
    throw Error(ErrorKind::parse_error, path.string() + ": empty file");
  const std::vector<std::string> header = split_line(line);

  const std::size_t idx_y = column_index(header, columns.outcome, path);
  const std::size_t idx_z1 = column_index(header, columns.proxy1, path);
  const std::size_t idx_z2 = column_index(header, columns.proxy2, path);
  std::vector<std::size_t> idx_w;
  for (const auto& name : columns.covariates)
    idx_w.push_back(column_index(header, name, path));
  std::optional<std::size_t> idx_cluster;
  if (columns.cluster) idx_cluster = column_index(header, *columns.cluster, path);

  std::vector<double> y, z1, z2;
  std::vector<std::vector<double>> w(idx_w.size());
  std::vector<std::int64_t> cluster;
  std::size_t dropped = 0;

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size())
      throw Error(ErrorKind::parse_error,
                  path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(cells.size()));

    std::vector<std::size_t> needed = {idx_y, idx_z1, idx_z2};
    needed.insert(needed.end(), idx_w.begin(), idx_w.end());
    if (idx_cluster) needed.push_back(*idx_cluster);
    const bool missing = std::any_of(needed.begin(), needed.end(), [&](std::size_t i) {
      return is_missing(cells[i]);
    });
    if (missing) {
      ++dropped;
      continue;
    }

    y.push_back(parse_number(cells[idx_y], line_no, columns.outcome, path));
    z1.push_back(parse_number(cells[idx_z1], line_no, columns.proxy1, path));
    z2.push_back(parse_number(cells[idx_z2], line_no, columns.proxy2, path));
    for (std::size_t j = 0; j < idx_w.size(); ++j)
      w[j].push_back(parse_number(cells[idx_w[j]], line_no, columns.covariates[j], path));
    if (idx_cluster) {
      const double value =
          parse_number(cells[*idx_cluster], line_no, *columns.cluster, path);
      const auto label = static_cast<std::int64_t>(value);
      if (static_cast<double>(label) != value)
        throw Error(ErrorKind::parse_error,
                    path.string() + ":" + std::to_string(line_no) +
                        ": cluster labels must be integers");
      cluster.push_back(label);
    }
  }

  const auto n = static_cast<Eigen::Index>(y.size());
  const auto j_count = static_cast<Eigen::Index>(idx_w.size());
  if (static_cast<std::size_t>(n) < static_cast<std::size_t>(j_count) + 3)
    throw Error(ErrorKind::insufficient_data,
                path.string() + ": only " + std::to_string(n) +
                    " usable rows for " + std::to_string(j_count) + " covariates");

  LoadedSample loaded;
  loaded.dropped_rows = dropped;
  Sample& s = loaded.sample;
  s.y = Eigen::Map<Eigen::VectorXd>(y.data(), n);
  s.z1 = Eigen::Map<Eigen::VectorXd>(z1.data(), n);
  s.z2 = Eigen::Map<Eigen::VectorXd>(z2.data(), n);
  s.w.resize(n, j_count + 1);
  s.w.col(0).setOnes();
  for (Eigen::Index j = 0; j < j_count; ++j)
    s.w.col(j + 1) = Eigen::Map<Eigen::VectorXd>(w[static_cast<std::size_t>(j)].data(), n);
  if (idx_cluster) s.cluster = std::move(cluster);
  return loaded;
}

}  // namespace proxybounds

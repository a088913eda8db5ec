#include "stcov/dataset_io.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "stcov/errors.hpp"

namespace stcov {
namespace {

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  for (auto& f : out) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
    if (f.size() >= 2 && f.front() == '"' && f.back() == '"') f = f.substr(1, f.size() - 2);
  }
  return out;
}

[[noreturn]] void fail_at(std::string_view source, std::size_t row, std::size_t col,
                          const std::string& msg) {
  throw InputError(std::string(source) + ": row " + std::to_string(row) + ", column " +
                   std::to_string(col) + ": " + msg);
}

double parse_number(std::string_view field, std::string_view source, std::size_t row,
                    std::size_t col) {
  double v = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  if (!field.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc{} || ptr != end || field.empty()) {
    fail_at(source, row, col, "expected a number, got '" + std::string(field) + "'");
  }
  if (!std::isfinite(v)) fail_at(source, row, col, "non-finite value");
  return v;
}

bool next_line(std::istream& in, std::string& line, std::size_t& row) {
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
  }
  return false;
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

void write_dataset_csv(const SpaceTimeDataset& data, std::ostream& out) {
  const bool with_class = !data.site_classes.empty();
  out << "x,y";
  if (with_class) out << ",class";
  for (std::size_t t = 0; t < data.n_times(); ++t) {
    out << ',';
    if (data.time_labels.empty()) {
      out << 't' << (t + 1);
    } else {
      out << data.time_labels[t];
    }
  }
  out << '\n';
  for (std::size_t i = 0; i < data.n_sites(); ++i) {
    out << format_double(data.sites[i].x) << ',' << format_double(data.sites[i].y);
    if (with_class) out << ',' << data.site_classes[i];
    for (double v : data.series(i)) out << ',' << format_double(v);
    out << '\n';
  }
}

SpaceTimeDataset read_dataset_csv(std::istream& in, std::string_view source) {
  std::string header_line;
  std::size_t row = 0;
  if (!next_line(in, header_line, row)) throw InputError(std::string(source) + ": empty file");
  const auto header = split_csv_line(header_line);
  if (header.size() < 3 || header[0] != "x" || header[1] != "y") {
    fail_at(source, row, 1, "header must start with x,y");
  }
  const bool with_class = header[2] == "class";
  const std::size_t first_value = with_class ? 3 : 2;
  if (header.size() <= first_value) fail_at(source, row, first_value + 1, "no time columns");

  SpaceTimeDataset data;
  const std::size_t p = header.size() - first_value;
  bool default_labels = true;
  for (std::size_t t = 0; t < p; ++t) {
    data.time_labels.emplace_back(header[first_value + t]);
    if (data.time_labels.back() != "t" + std::to_string(t + 1)) default_labels = false;
  }
  if (default_labels) data.time_labels.clear();

  std::vector<std::vector<double>> rows;
  std::string line;
  while (next_line(in, line, row)) {
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      fail_at(source, row, std::min(fields.size(), header.size()) + 1,
              "expected " + std::to_string(header.size()) + " fields, found " +
                  std::to_string(fields.size()));
    }
    data.sites.push_back({parse_number(fields[0], source, row, 1), parse_number(fields[1], source, row, 2)});
    if (with_class) data.site_classes.emplace_back(fields[2]);
    std::vector<double> series(p);
    for (std::size_t t = 0; t < p; ++t) {
      series[t] = parse_number(fields[first_value + t], source, row, first_value + t + 1);
    }
    rows.push_back(std::move(series));
  }
  data.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t t = 0; t < p; ++t) {
      data.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = rows[i][t];
    }
  }
  validate(data);
  return data;
}

SpaceTimeDataset read_long_csv(std::istream& in, std::string_view source) {
  std::string line;
  std::size_t row = 0;
  if (!next_line(in, line, row)) throw InputError(std::string(source) + ": empty file");
  const auto header = split_csv_line(line);
  const bool with_class = header.size() == 6 && header[3] == "class";
  if (!(header.size() == 5 || with_class) || header[0] != "site" || header[1] != "x" ||
      header[2] != "y") {
    fail_at(source, row, 1, "long format header must be site,x,y[,class],time,value");
  }
  const std::size_t time_col = with_class ? 4 : 3;

  struct SiteRecord {
    Vec2 pos;
    std::string cls;
    std::unordered_map<std::string, double> values;
  };
  std::vector<std::string> site_order;
  std::vector<std::string> time_order;
  std::unordered_map<std::string, std::size_t> time_index;
  std::unordered_map<std::string, SiteRecord> sites;

  while (next_line(in, line, row)) {
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) {
      fail_at(source, row, std::min(f.size(), header.size()) + 1, "wrong number of fields");
    }
    const std::string id(f[0]);
    const Vec2 pos{parse_number(f[1], source, row, 2), parse_number(f[2], source, row, 3)};
    auto [it, inserted] = sites.try_emplace(id);
    if (inserted) {
      site_order.push_back(id);
      it->second.pos = pos;
      if (with_class) it->second.cls = std::string(f[3]);
    } else if (!(it->second.pos == pos)) {
      fail_at(source, row, 2, "site '" + id + "' changes coordinates");
    }
    const std::string time(f[time_col]);
    if (time_index.try_emplace(time, time_order.size()).second) time_order.push_back(time);
    if (!it->second.values.emplace(time, parse_number(f[time_col + 1], source, row, time_col + 2)).second) {
      fail_at(source, row, time_col + 1, "duplicate observation for site '" + id + "' at " + time);
    }
  }

  SpaceTimeDataset data;
  data.time_labels = time_order;
  data.values.resize(static_cast<Eigen::Index>(site_order.size()),
                     static_cast<Eigen::Index>(time_order.size()));
  for (std::size_t i = 0; i < site_order.size(); ++i) {
    const auto& rec = sites.at(site_order[i]);
    data.sites.push_back(rec.pos);
    if (with_class) data.site_classes.push_back(rec.cls);
    for (std::size_t t = 0; t < time_order.size(); ++t) {
      auto v = rec.values.find(time_order[t]);
      if (v == rec.values.end()) {
        throw InputError(std::string(source) + ": site '" + site_order[i] +
                         "' has no observation at time " + time_order[t]);
      }
      data.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = v->second;
    }
  }
  validate(data);
  return data;
}

std::string dataset_sidecar_json(const SpaceTimeDataset& data, std::string_view extra) {
  nlohmann::json j;
  j["n_sites"] = data.n_sites();
  j["n_times"] = data.n_times();
  j["dt"] = data.dt;
  if (data.meta) {
    const auto& m = *data.meta;
    j["seed"] = m.seed;
    j["sampler"] = m.sampler;
    if (!m.spec_json.empty()) j["spec"] = nlohmann::json::parse(m.spec_json);
    if (m.block_len > 0) j["block_len"] = m.block_len;
    j["jitter"] = m.jitter;
    j["clipped_mass"] = m.clipped_mass;
  }
  j["config"] = nlohmann::json::parse(extra);
  return j.dump(2);
}

void remove_monthly_mean(SpaceTimeDataset& data) {
  if (data.time_labels.size() != data.n_times()) {
    throw InputError("monthly mean removal needs ISO date time labels");
  }
  std::vector<int> month(data.n_times());
  for (std::size_t t = 0; t < month.size(); ++t) {
    const auto& label = data.time_labels[t];
    int m = 0;
    if (label.size() < 7 || label[4] != '-' ||
        std::from_chars(label.data() + 5, label.data() + 7, m).ec != std::errc{} || m < 1 || m > 12) {
      throw InputError("time label '" + label + "' is not an ISO date (YYYY-MM...)");
    }
    month[t] = m - 1;
  }
  for (Eigen::Index i = 0; i < data.values.rows(); ++i) {
    std::array<double, 12> sum{};
    std::array<std::size_t, 12> count{};
    for (std::size_t t = 0; t < month.size(); ++t) {
      sum[static_cast<std::size_t>(month[t])] += data.values(i, static_cast<Eigen::Index>(t));
      ++count[static_cast<std::size_t>(month[t])];
    }
    for (std::size_t t = 0; t < month.size(); ++t) {
      const auto m = static_cast<std::size_t>(month[t]);
      data.values(i, static_cast<Eigen::Index>(t)) -= sum[m] / static_cast<double>(count[m]);
    }
  }
}

SpaceTimeDataset select_class(const SpaceTimeDataset& data, std::string_view label) {
  if (data.site_classes.empty()) throw InputError("dataset has no site class column");
  std::vector<Eigen::Index> keep;
  for (std::size_t i = 0; i < data.n_sites(); ++i) {
    if (data.site_classes[i] == label) keep.push_back(static_cast<Eigen::Index>(i));
  }
  if (keep.empty()) throw InputError("no sites have class '" + std::string(label) + "'");
  SpaceTimeDataset out;
  out.dt = data.dt;
  out.time_labels = data.time_labels;
  out.values.resize(static_cast<Eigen::Index>(keep.size()), data.values.cols());
  for (std::size_t k = 0; k < keep.size(); ++k) {
    out.sites.push_back(data.sites[static_cast<std::size_t>(keep[k])]);
    out.site_classes.emplace_back(label);
    out.values.row(static_cast<Eigen::Index>(k)) = data.values.row(keep[k]);
  }
  return out;
}

}  // namespace stcov

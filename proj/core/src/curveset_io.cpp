#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "stcov/dataset_io.hpp"
#include "stcov/errors.hpp"
#include "stcov/estimator.hpp"

namespace stcov {
namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r' && c != ' ') {
      field.push_back(c);
    }
  }
  out.push_back(field);
  return out;
}

template <class T>
T parse_field(const std::string& s, std::string_view source, std::size_t row, std::size_t col) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw InputError(std::string(source) + ": row " + std::to_string(row) + ", column " +
                     std::to_string(col) + ": cannot parse '" + s + "'");
  }
  return v;
}

}  // namespace

void write_curveset_csv(const CurveSet& set, std::ostream& out) {
  out << "i,j,hx,hy";
  for (int u : set.lags) out << ",u" << u;
  out << '\n';
  for (std::size_t r = 0; r < set.size(); ++r) {
    const auto& p = set.pairs[r];
    out << p.i << ',' << p.j << ',' << format_double(p.h.x) << ',' << format_double(p.h.y);
    for (Eigen::Index c = 0; c < set.curves.cols(); ++c) {
      out << ',' << format_double(set.curves(static_cast<Eigen::Index>(r), c));
    }
    out << '\n';
  }
}

CurveSet read_curveset_csv(std::istream& in, std::string_view source) {
  std::string line;
  std::size_t row = 1;
  if (!std::getline(in, line)) throw InputError(std::string(source) + ": empty file");
  const auto header = split(line);
  if (header.size() < 5 || header[0] != "i" || header[1] != "j" || header[2] != "hx" ||
      header[3] != "hy") {
    throw InputError(std::string(source) + ": row 1: header must be i,j,hx,hy,u<lag>...");
  }
  CurveSet set;
  for (std::size_t c = 4; c < header.size(); ++c) {
    if (header[c].size() < 2 || header[c][0] != 'u') {
      throw InputError(std::string(source) + ": row 1, column " + std::to_string(c + 1) +
                       ": lag columns are named u<lag>");
    }
    set.lags.push_back(parse_field<int>(header[c].substr(1), source, 1, c + 1));
  }
  set.kind = set.lags.front() == 0 ? TestKind::Separability : TestKind::Symmetry;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \r\t") == std::string::npos) continue;
    const auto f = split(line);
    if (f.size() != header.size()) {
      throw InputError(std::string(source) + ": row " + std::to_string(row) + ": expected " +
                       std::to_string(header.size()) + " fields, found " + std::to_string(f.size()));
    }
    PairInfo p;
    p.i = parse_field<std::size_t>(f[0], source, row, 1);
    p.j = parse_field<std::size_t>(f[1], source, row, 2);
    p.h = {parse_field<double>(f[2], source, row, 3), parse_field<double>(f[3], source, row, 4)};
    set.pairs.push_back(p);
    std::vector<double> values;
    for (std::size_t c = 4; c < f.size(); ++c) {
      values.push_back(parse_field<double>(f[c], source, row, c + 1));
      if (!std::isfinite(values.back())) {
        throw InputError(std::string(source) + ": row " + std::to_string(row) + ": non-finite value");
      }
    }
    rows.push_back(std::move(values));
  }
  set.curves.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(set.lags.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      set.curves(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return set;
}

std::string curveset_to_json(const CurveSet& set, std::string_view extra) {
  using nlohmann::json;
  json curves = json::array();
  for (std::size_t r = 0; r < set.size(); ++r) {
    const auto& p = set.pairs[r];
    std::vector<double> values(set.lags.size());
    for (std::size_t c = 0; c < values.size(); ++c) {
      values[c] = set.curves(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
    curves.push_back({{"i", p.i}, {"j", p.j}, {"h", {p.h.x, p.h.y}}, {"values", values}});
  }
  json dropped = json::array();
  for (const auto& [i, j] : set.dropped) dropped.push_back({i, j});
  json j = {{"kind", std::string(kind_name(set.kind))},
            {"lags", set.lags},
            {"curves", curves},
            {"dropped", dropped},
            {"meta", json::parse(extra)}};
  return j.dump(2);
}

CurveSet curveset_from_json(std::string_view text) {
  using nlohmann::json;
  try {
    const json j = json::parse(text);
    CurveSet set;
    set.kind = kind_from_name(j.at("kind").get<std::string>());
    set.lags = j.at("lags").get<std::vector<int>>();
    const auto& curves = j.at("curves");
    set.curves.resize(static_cast<Eigen::Index>(curves.size()), static_cast<Eigen::Index>(set.lags.size()));
    for (std::size_t r = 0; r < curves.size(); ++r) {
      const auto& c = curves[r];
      const auto h = c.at("h").get<std::vector<double>>();
      if (h.size() != 2) throw InputError("curve h must have two coordinates");
      set.pairs.push_back({c.at("i").get<std::size_t>(), c.at("j").get<std::size_t>(), {h[0], h[1]}});
      const auto values = c.at("values").get<std::vector<double>>();
      if (values.size() != set.lags.size()) throw InputError("curve length does not match the lag grid");
      for (std::size_t k = 0; k < values.size(); ++k) {
        set.curves(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = values[k];
      }
    }
    for (const auto& d : j.value("dropped", json::array())) {
      set.dropped.emplace_back(d.at(0).get<std::size_t>(), d.at(1).get<std::size_t>());
    }
    return set;
  } catch (const json::exception& e) {
    throw InputError(std::string("curve set JSON: ") + e.what());
  }
}

}  // namespace stcov

#include <string>

#include <json.hpp>

#include "stcov/covmodels.hpp"
#include "stcov/errors.hpp"

namespace stcov {
namespace {

using nlohmann::json;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

json kernel_to_json(const Kernel1D& k) {
  switch (k.kind) {
    case Kernel1D::Kind::Exponential:
      return {{"kind", "exponential"}, {"variance", k.variance}, {"range", k.range}};
    case Kernel1D::Kind::Gaussian:
      return {{"kind", "gaussian"}, {"variance", k.variance}, {"range", k.range}};
    case Kernel1D::Kind::Delta: return {{"kind", "delta"}, {"variance", k.variance}};
    case Kernel1D::Kind::Table: return {{"kind", "table"}, {"values", k.table}};
  }
  return {};
}

Kernel1D kernel_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "exponential") {
    return Kernel1D::exponential(j.value("variance", 1.0), j.at("range").get<double>());
  }
  if (kind == "gaussian") {
    return Kernel1D::gaussian(j.value("variance", 1.0), j.at("range").get<double>());
  }
  if (kind == "delta") return Kernel1D::delta(j.value("variance", 1.0));
  if (kind == "table") return Kernel1D::tabulated(j.at("values").get<std::vector<double>>());
  throw InputError("unknown kernel kind '" + kind + "'");
}

json sites_to_json(const std::vector<Vec2>& sites) {
  json out = json::array();
  for (const auto& s : sites) out.push_back({s.x, s.y});
  return out;
}

std::vector<Vec2> sites_from_json(const json& j) {
  std::vector<Vec2> out;
  for (const auto& s : j) {
    if (!s.is_array() || s.size() != 2) throw InputError("sites must be [x, y] pairs");
    out.push_back({s[0].get<double>(), s[1].get<double>()});
  }
  return out;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(row.size()) != cols) throw InputError("ragged matrix in model JSON");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

json params_to_json(const CovarianceSpec& spec) {
  return std::visit(
      overloaded{
          [](const GneitingSepParams& p) -> json { return {{"beta", p.beta}}; },
          [](const CressieHuangSepParams&) -> json { return json::object(); },
          [](const CressieHuangNonsepParams&) -> json { return json::object(); },
          [](const CesareParams& p) -> json { return {{"k", p.k}}; },
          [](const GneitingAsymParams& p) -> json { return {{"lambda", p.lambda}}; },
          [](const SeparableProductParams& p) -> json {
            return {{"spatial", kernel_to_json(p.spatial)}, {"temporal", kernel_to_json(p.temporal)}};
          },
          [](const EmpiricalSeparableParams& p) -> json {
            // Stored normalized; scale back so the round trip reproduces the input.
            std::vector<double> autocov(p.temporal.size());
            for (std::size_t u = 0; u < autocov.size(); ++u) autocov[u] = p.temporal[u] * p.variance_scale;
            autocov[0] = p.variance_scale;
            return {{"sites", sites_to_json(p.sites)},
                    {"spatial", matrix_to_json(p.spatial)},
                    {"temporal_autocov", autocov}};
          },
          [](const EmpiricalSymmetrizedParams& p) -> json {
            json lags = json::array();
            for (const auto& m : p.lag_cov) lags.push_back(matrix_to_json(m));
            return {{"sites", sites_to_json(p.sites)}, {"lag_covariances", lags}};
          },
      },
      spec.params());
}

}  // namespace

std::string spec_to_json(const CovarianceSpec& spec) {
  json j = {{"family", std::string(family_name(spec.family()))}, {"params", params_to_json(spec)}};
  return j.dump();
}

CovarianceSpec spec_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("model JSON does not parse: ") + e.what());
  }
  try {
    if (!j.is_object() || !j.contains("family")) {
      throw InputError("model JSON needs a \"family\" field");
    }
    const Family family = family_from_name(j.at("family").get<std::string>());
    const json params = j.value("params", json::object());
    switch (family) {
      case Family::GneitingSep: return CovarianceSpec::gneiting_sep(params.at("beta").get<double>());
      case Family::CressieHuangSep: return CovarianceSpec::cressie_huang_sep();
      case Family::CressieHuangNonsep: return CovarianceSpec::cressie_huang_nonsep();
      case Family::Cesare: return CovarianceSpec::cesare(params.at("k").get<double>());
      case Family::GneitingAsym:
        return CovarianceSpec::gneiting_asym(params.at("lambda").get<double>());
      case Family::SeparableProduct:
        return CovarianceSpec::separable_product(kernel_from_json(params.at("spatial")),
                                                 kernel_from_json(params.at("temporal")));
      case Family::EmpiricalSeparable:
        return CovarianceSpec::empirical_separable(
            sites_from_json(params.at("sites")), matrix_from_json(params.at("spatial")),
            params.at("temporal_autocov").get<std::vector<double>>());
      case Family::EmpiricalSymmetrized: {
        std::vector<Eigen::MatrixXd> lags;
        for (const auto& m : params.at("lag_covariances")) lags.push_back(matrix_from_json(m));
        return CovarianceSpec::empirical_symmetrized(sites_from_json(params.at("sites")),
                                                     std::move(lags));
      }
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("model JSON: ") + e.what());
  }
  throw InputError("unhandled model family");
}

}  // namespace stcov

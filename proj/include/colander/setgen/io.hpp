#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "colander/io/csv.hpp"
#include "colander/mathcore/profile.hpp"
#include "colander/setgen/colander.hpp"

namespace colander {

// Header cx_1..cx_d,r then one ball per row.
template <int D>
void write_balls_csv(std::ostream& os, const BallUnion<D>& u) {
  csv::Writer w(os);
  std::vector<std::string> cells;
  for (int k = 1; k <= D; ++k) cells.push_back("cx_" + std::to_string(k));
  cells.push_back("r");
  w.row(cells);
  for (const auto& b : u.balls()) {
    cells.clear();
    for (int k = 0; k < D; ++k) cells.push_back(csv::format(b.center[k]));
    cells.push_back(csv::format(b.radius));
    w.row(cells);
  }
}

template <int D>
BallUnion<D> read_balls_csv(std::istream& is) {
  const csv::Table t = csv::read(is);
  if (t.header.size() != D + 1) throw ConfigError("ball CSV has the wrong number of columns");
  std::vector<std::size_t> col;
  for (int k = 1; k <= D; ++k) col.push_back(t.column("cx_" + std::to_string(k)));
  const std::size_t rc = t.column("r");
  std::vector<Ball<D>> balls;
  for (const auto& row : t.rows) {
    Ball<D> b{};
    for (int k = 0; k < D; ++k) b.center[k] = csv::parse_double(row[col[k]]);
    b.radius = csv::parse_double(row[rc]);
    balls.push_back(b);
  }
  return BallUnion<D>(std::move(balls));
}

template <int D>
nlohmann::json colander_sidecar(const Colander<D>& c) {
  nlohmann::json j{{"rho_outer", c.rho_outer()}, {"d", D}};
  j["profile"] = c.profile() ? nlohmann::json(*c.profile()) : nlohmann::json(nullptr);
  return j;
}

template <int D>
Colander<D> colander_from_files(std::istream& balls_csv, const nlohmann::json& sidecar) {
  for (const auto& [k, v] : sidecar.items())
    if (k != "rho_outer" && k != "d" && k != "profile") throw ConfigError("unknown key '" + k + "' in colander sidecar");
  if (sidecar.contains("d") && sidecar.at("d").get<int>() != D) throw ConfigError("sidecar dimension mismatch");
  std::optional<Profile> p;
  if (sidecar.contains("profile") && !sidecar.at("profile").is_null()) p = profile_from_json(sidecar.at("profile"));
  return Colander<D>(sidecar.at("rho_outer").get<double>(), read_balls_csv<D>(balls_csv), std::move(p));
}

}  // namespace colander

#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "colander/estimate.hpp"
#include "colander/harmonic/layers.hpp"
#include "colander/io/csv.hpp"

namespace colander {

struct DecayRow {
  double rho = 0.0;
  double int_phi = 0.0;
  EstimateCI est;
  std::uint64_t seed = 0;
  double delta = 0.0;
};

inline void write_results_csv(std::ostream& os, const std::vector<DecayRow>& rows) {
  csv::Writer w(os);
  w.row("rho", "int_phi", "p_hat", "stderr", "n_success", "n_fail", "n_censored", "seed", "delta");
  for (const auto& r : rows)
    w.row(r.rho, r.int_phi, r.est.p_hat, r.est.std_error, r.est.n_success, r.est.n_fail, r.est.n_censored, r.seed, r.delta);
}

inline void write_layers_csv(std::ostream& os, const LayerScheme& s) {
  csv::Writer w(os);
  w.row("k", "rho_k", "inf_hat", "inf_se", "sup_hat", "sup_se", "m_points");
  for (const auto& l : s.layers)
    w.row(l.k, l.rho_k, l.inf_hat.p_hat, l.inf_hat.std_error, l.sup_hat.p_hat, l.sup_hat.std_error, l.m_points);
}

}  // namespace colander

#pragma once

// Market spec files: versioned JSON with exactly one market block (finite,
// gaussian or sde), an optional claims list and an optional run block.
// Parsing is strict: unknown fields are rejected so misspelled configuration
// cannot silently change a run.

#include <optional>
#include <string>
#include <vector>

#include "isomarket/ctsmkt.hpp"
#include "isomarket/finprob.hpp"
#include "isomarket/gauss.hpp"
#include "isomarket/onep.hpp"

namespace isomarket::specfile {

enum class MarketKind { finite, gaussian, sde };

struct RunConfig {
  std::size_t steps = 256;
  std::size_t paths = 10'000;
  std::uint64_t seed = 42;
  std::size_t casino_grid = kDefaultCasinoGrid;
  bool antithetic = false;
  std::optional<double> dt;  // defaults to horizon / steps
};

struct MarketSpecFile {
  MarketKind kind = MarketKind::finite;

  // finite block
  finprob::MultiMeasureSpace finite_space;
  std::optional<double> scale_c;
  std::optional<finprob::Payoff> payoff;

  // gaussian block
  gauss::GaussianMarket gaussian;

  // sde block
  ctsmkt::SDEModel sde;

  std::vector<ctsmkt::ClaimSpec> claims;
  RunConfig run;

  onep::CompleteMarket1P finite_market() const;
};

MarketSpecFile parse_spec_json(const std::string& text);
MarketSpecFile load_spec_file(const std::string& path);

}  // namespace isomarket::specfile

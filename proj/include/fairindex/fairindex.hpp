#pragma once

// Umbrella header pulling in the whole library.

#include "fairindex/errors.hpp"
#include "fairindex/ledger.hpp"
#include "fairindex/balance.hpp"
#include "fairindex/indices.hpp"
#include "fairindex/rng.hpp"
#include "fairindex/scenario.hpp"
#include "fairindex/strategy.hpp"
#include "fairindex/simulate.hpp"
#include "fairindex/fairness.hpp"
#include "fairindex/generators.hpp"
#include "fairindex/axioms.hpp"
#include "fairindex/csv.hpp"
#include "fairindex/config.hpp"
#include "fairindex/report.hpp"
#include "fairindex/fixtures.hpp"

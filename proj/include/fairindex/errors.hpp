#pragma once

#include <stdexcept>
#include <string>

namespace fairindex {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A time index or window outside the recorded grid.
struct OutOfRangeError : Error {
    using Error::Error;
};

/// Total group assets are zero where weights are required.
struct ZeroTotalAssetsError : Error {
    using Error::Error;
};

/// A unit count that must be positive is not.
struct NonPositiveUnitsError : Error {
    using Error::Error;
};

/// A ledger violates construction invariants (w <= 0, k <= 0, ragged grid, ...).
struct InvalidHistoryError : Error {
    using Error::Error;
};

struct UnknownFundError : Error {
    using Error::Error;
};

/// A merger or split event that cannot be applied as stated.
struct InvalidEventError : Error {
    using Error::Error;
};

/// Prices, holdings or flows missing for a requested computation.
struct MissingDataError : Error {
    using Error::Error;
};

struct InvalidPartitionError : Error {
    using Error::Error;
};

/// Scenario tree would exceed the configured node budget.
struct BudgetExceededError : Error {
    using Error::Error;
};

/// A payoff map does not cover all children of a node.
struct MissingPayoffError : Error {
    using Error::Error;
};

/// A strategy drives some unit count or unit value non-positive,
/// or violates the group reallocation balance.
struct InfeasibleStrategyError : Error {
    using Error::Error;
};

/// A strategy references a node that is not part of the tree.
struct NotAdaptedError : Error {
    using Error::Error;
};

/// Input violates the stated setting of a closed-form computation.
struct SettingViolatedError : Error {
    using Error::Error;
};

/// Malformed input file; message carries file and row.
struct ParseError : Error {
    using Error::Error;
};

} // namespace fairindex

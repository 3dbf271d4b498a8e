#pragma once

#include <functional>
#include <string>

namespace fxliq {

struct Episode;

/// Sell liquidates the whole accumulated foreign-currency balance.
enum class Action { hold, sell };

inline std::string to_string(Action a) { return a == Action::sell ? "sell" : "hold"; }

/// Maps (episode, t) to an action. Policies must only read rates at or before t,
/// except the oracle references.
using Policy = std::function<Action(const Episode&, int)>;

}  // namespace fxliq

#pragma once

#include <iosfwd>

namespace fxliq {

/// Runs one subcommand. Returns 0 on success; failures print one line to `err`.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int dispatch(int argc, const char* const* argv);

}  // namespace fxliq

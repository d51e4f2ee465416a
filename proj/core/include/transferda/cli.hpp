#pragma once

namespace tda {

// Full command-line front end (generate / fit / assimilate / costs /
// breakeven / ratio-curve / verify-scaling / bench). Returns 0 on success,
// 1 on runtime failures, 2 on usage or configuration errors.
int cli_main(int argc, const char* const* argv);

}  // namespace tda
